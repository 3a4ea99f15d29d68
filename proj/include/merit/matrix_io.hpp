#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "merit/coefficient_matrix.hpp"
#include "merit/dense_matrix.hpp"
#include "merit/embed.hpp"

namespace merit::io {

// Headerless CSV: one matrix row per line, comma-separated decimals.
DenseMatrix read_csv(std::istream& in);
void write_csv(std::ostream& out, const DenseMatrix& m);

// Matrix Market "array real general" (column-major values).
DenseMatrix read_mm_array(std::istream& in);
void write_mm_array(std::ostream& out, const DenseMatrix& m);

// Matrix Market "coordinate real general", 1-based. Reading validates
// feasibility of every column (InfeasibleError) after parsing (ParseError).
CoefficientMatrix read_mm_coefficients(std::istream& in);
void write_mm_coefficients(std::ostream& out, const CoefficientMatrix& c);

/// Square adjacency from Matrix Market coordinate input; a general file is
/// accepted only when it is symmetric.
SymmetricMatrix read_mm_symmetric(std::istream& in);
SymmetricMatrix load_adjacency(const std::filesystem::path& path);

/// Dense matrix by extension: ".mtx" is Matrix Market (array, or a
/// coordinate file expanded to dense), anything else is CSV.
DenseMatrix load_dense(const std::filesystem::path& path);
void save_dense(const std::filesystem::path& path, const DenseMatrix& m);
CoefficientMatrix load_coefficients(const std::filesystem::path& path);

/// Writes through a sibling temporary and renames it into place.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace merit::io
