#include "merit/matrix_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string_view>
#include <vector>

#include "merit/error.hpp"

namespace merit::io {
namespace {

double parse_double(std::string_view token, std::size_t line, std::size_t column) {
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) {
    token.remove_prefix(1);
    ++column;
  }
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back())))
    token.remove_suffix(1);
  double v = 0.0;
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError("expected a decimal number, found '" + std::string(token) + "'", line, column);
  if (!std::isfinite(v)) throw ParseError("non-finite value", line, column);
  return v;
}

std::size_t parse_count(std::string_view token, std::size_t line, std::size_t column) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError("expected a nonnegative integer, found '" + std::string(token) + "'", line,
                     column);
  return v;
}

// Whitespace-separated tokens with their 1-based starting columns.
std::vector<std::pair<std::string_view, std::size_t>> split_ws(std::string_view s) {
  std::vector<std::pair<std::string_view, std::size_t>> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start), start + 1);
  }
  return out;
}

std::string lower(std::string s) {
  std::ranges::transform(s, s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct MmHeader {
  std::string format;    // array | coordinate
  std::string field;     // real | integer | pattern
  std::string symmetry;  // general | symmetric
};

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  MmHeader header() {
    std::string first;
    if (!std::getline(in_, first)) throw ParseError("empty Matrix Market file", 1, 1);
    line_ = 1;
    auto tok = split_ws(first);
    if (tok.size() != 5 || lower(std::string(tok[0].first)) != "%%matrixmarket" ||
        lower(std::string(tok[1].first)) != "matrix")
      throw ParseError("missing '%%MatrixMarket matrix <format> <field> <symmetry>' banner", 1, 1);
    MmHeader h{lower(std::string(tok[2].first)), lower(std::string(tok[3].first)),
               lower(std::string(tok[4].first))};
    if (h.format != "array" && h.format != "coordinate")
      throw ParseError("unsupported format '" + h.format + "'", 1, tok[2].second);
    if (h.field != "real" && h.field != "integer" && h.field != "double" && h.field != "pattern")
      throw ParseError("unsupported field '" + h.field + "'", 1, tok[3].second);
    if (h.symmetry != "general" && h.symmetry != "symmetric")
      throw ParseError("unsupported symmetry '" + h.symmetry + "'", 1, tok[4].second);
    return h;
  }

  // Next non-comment, non-blank line; false at EOF.
  bool next(std::string& out) {
    while (std::getline(in_, out)) {
      ++line_;
      auto tok = split_ws(out);
      if (tok.empty() || tok[0].first.front() == '%') continue;
      return true;
    }
    return false;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

struct Triplet {
  std::size_t row, col;
  double value;
};

struct CoordinateData {
  std::size_t rows = 0, cols = 0;
  bool symmetric = false;
  std::vector<Triplet> entries;  // 0-based
};

CoordinateData read_coordinate_body(LineReader& reader, const MmHeader& h) {
  CoordinateData d;
  d.symmetric = h.symmetry == "symmetric";
  std::string s;
  if (!reader.next(s)) throw ParseError("missing size line", reader.line() + 1, 1);
  auto tok = split_ws(s);
  if (tok.size() != 3) throw ParseError("size line needs 'rows cols nnz'", reader.line(), 1);
  d.rows = parse_count(tok[0].first, reader.line(), tok[0].second);
  d.cols = parse_count(tok[1].first, reader.line(), tok[1].second);
  const std::size_t nnz = parse_count(tok[2].first, reader.line(), tok[2].second);
  const bool pattern = h.field == "pattern";
  d.entries.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    if (!reader.next(s))
      throw ParseError("expected " + std::to_string(nnz) + " entries, found " + std::to_string(k),
                       reader.line() + 1, 1);
    tok = split_ws(s);
    if (tok.size() != (pattern ? 2u : 3u))
      throw ParseError("entry line needs 'row col" + std::string(pattern ? "'" : " value'"),
                       reader.line(), 1);
    const std::size_t i = parse_count(tok[0].first, reader.line(), tok[0].second);
    const std::size_t j = parse_count(tok[1].first, reader.line(), tok[1].second);
    if (i < 1 || i > d.rows) throw ParseError("row index out of range", reader.line(), tok[0].second);
    if (j < 1 || j > d.cols) throw ParseError("column index out of range", reader.line(), tok[1].second);
    const double v = pattern ? 1.0 : parse_double(tok[2].first, reader.line(), tok[2].second);
    d.entries.push_back({i - 1, j - 1, v});
  }
  if (reader.next(s)) throw ParseError("trailing data after the declared entries", reader.line(), 1);
  return d;
}

DenseMatrix coordinate_to_dense(const CoordinateData& d) {
  DenseMatrix m(d.rows, d.cols);
  for (const auto& t : d.entries) {
    m(t.row, t.col) += t.value;
    if (d.symmetric && t.row != t.col) m(t.col, t.row) += t.value;
  }
  return m;
}

DenseMatrix read_array_body(LineReader& reader, const MmHeader& h) {
  std::string s;
  if (!reader.next(s)) throw ParseError("missing size line", reader.line() + 1, 1);
  auto tok = split_ws(s);
  if (tok.size() != 2) throw ParseError("size line needs 'rows cols'", reader.line(), 1);
  const std::size_t rows = parse_count(tok[0].first, reader.line(), tok[0].second);
  const std::size_t cols = parse_count(tok[1].first, reader.line(), tok[1].second);
  const bool symmetric = h.symmetry == "symmetric";
  DenseMatrix m(rows, cols);
  // Symmetric arrays store the lower triangle column by column.
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = symmetric ? j : 0; i < rows; ++i) slots.emplace_back(i, j);
  std::size_t k = 0;
  while (k < slots.size()) {
    if (!reader.next(s))
      throw ParseError("expected " + std::to_string(slots.size()) + " values, found " +
                           std::to_string(k),
                       reader.line() + 1, 1);
    for (const auto& [t, col] : split_ws(s)) {
      if (k == slots.size()) throw ParseError("too many values", reader.line(), col);
      const auto [i, j] = slots[k++];
      m(i, j) = parse_double(t, reader.line(), col);
      if (symmetric) m(j, i) = m(i, j);
    }
  }
  if (reader.next(s)) throw ParseError("trailing data after the declared values", reader.line(), 1);
  return m;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open '" + path.string() + "'", 0, 0);
  return f;
}

}  // namespace

DenseMatrix read_csv(std::istream& in) {
  std::vector<double> row_major;
  std::size_t cols = 0, rows = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0, start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view cell =
          std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      row_major.push_back(parse_double(cell, line_no, start + 1));
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (rows == 0) cols = count;
    else if (count != cols)
      throw ParseError("row has " + std::to_string(count) + " fields, expected " +
                           std::to_string(cols),
                       line_no, 1);
    ++rows;
  }
  if (rows == 0) throw ParseError("empty CSV input", line_no + 1, 1);
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = row_major[i * cols + j];
  return m;
}

void write_csv(std::ostream& out, const DenseMatrix& m) {
  out << std::setprecision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

DenseMatrix read_mm_array(std::istream& in) {
  LineReader reader(in);
  const auto h = reader.header();
  if (h.format == "coordinate") return coordinate_to_dense(read_coordinate_body(reader, h));
  return read_array_body(reader, h);
}

void write_mm_array(std::ostream& out, const DenseMatrix& m) {
  out << "%%MatrixMarket matrix array real general\n" << m.rows() << ' ' << m.cols() << '\n';
  out << std::setprecision(17);
  for (double v : m.data()) out << v << '\n';
}

CoefficientMatrix read_mm_coefficients(std::istream& in) {
  LineReader reader(in);
  const auto h = reader.header();
  if (h.format != "coordinate") throw ParseError("coefficient files use coordinate format", 1, 1);
  auto d = read_coordinate_body(reader, h);
  if (d.rows != d.cols)
    throw ParseError("coefficient matrix must be square, got " + std::to_string(d.rows) + "x" +
                         std::to_string(d.cols),
                     2, 1);
  if (d.symmetric) {
    const std::size_t n0 = d.entries.size();
    for (std::size_t k = 0; k < n0; ++k)
      if (d.entries[k].row != d.entries[k].col)
        d.entries.push_back({d.entries[k].col, d.entries[k].row, d.entries[k].value});
  }
  std::ranges::sort(d.entries, [](const Triplet& a, const Triplet& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  const std::size_t n = d.rows;
  std::vector<std::vector<SparseEntry>> cols(n);
  for (const auto& t : d.entries) {
    if (t.value < 0.0) throw InfeasibleError("negative coefficient in column " + std::to_string(t.col));
    if (t.value == 0.0) continue;
    auto& c = cols[t.col];
    if (!c.empty() && c.back().index == t.row)
      throw InfeasibleError("duplicate entry (" + std::to_string(t.row + 1) + ", " +
                            std::to_string(t.col + 1) + ")");
    c.push_back({static_cast<std::uint32_t>(t.row), t.value});
  }
  std::vector<SparseSimplexColumn> columns;
  columns.reserve(n);
  for (std::size_t l = 0; l < n; ++l) {
    try {
      columns.push_back(SparseSimplexColumn::from_entries(n, std::move(cols[l])));
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("column " + std::to_string(l + 1) + ": " + e.what());
    }
  }
  return CoefficientMatrix::from_columns(std::move(columns));
}

void write_mm_coefficients(std::ostream& out, const CoefficientMatrix& c) {
  out << "%%MatrixMarket matrix coordinate real general\n"
      << c.dim() << ' ' << c.dim() << ' ' << c.total_nnz() << '\n';
  out << std::setprecision(17);
  for (std::size_t l = 0; l < c.dim(); ++l)
    for (const auto& e : c.column(l).entries())
      out << (e.index + 1) << ' ' << (l + 1) << ' ' << e.value << '\n';
}

SymmetricMatrix read_mm_symmetric(std::istream& in) {
  LineReader reader(in);
  const auto h = reader.header();
  if (h.format != "coordinate") throw ParseError("adjacency files use coordinate format", 1, 1);
  const auto d = read_coordinate_body(reader, h);
  if (d.rows != d.cols) throw ParseError("adjacency matrix must be square", 2, 1);
  SymmetricMatrix a(d.rows);
  if (d.symmetric) {
    for (const auto& t : d.entries) a.add(t.row, t.col, t.value);
    return a;
  }
  DenseMatrix lower(d.rows, d.cols);
  for (const auto& t : d.entries) {
    if (t.row <= t.col) a.add(t.row, t.col, t.value);
    else lower(t.col, t.row) += t.value;
  }
  for (std::size_t j = 0; j < d.cols; ++j)
    for (std::size_t i = 0; i < j; ++i)
      if (lower(i, j) != a(i, j))
        throw ParseError("general adjacency is not symmetric at (" + std::to_string(i + 1) + ", " +
                             std::to_string(j + 1) + ")",
                         2, 1);
  return a;
}

SymmetricMatrix load_adjacency(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_mm_symmetric(f);
}

DenseMatrix load_dense(const std::filesystem::path& path) {
  auto f = open_in(path);
  return path.extension() == ".mtx" ? read_mm_array(f) : read_csv(f);
}

void save_dense(const std::filesystem::path& path, const DenseMatrix& m) {
  std::ostringstream os;
  if (path.extension() == ".mtx") write_mm_array(os, m);
  else write_csv(os, m);
  write_atomically(path, os.str());
}

CoefficientMatrix load_coefficients(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_mm_coefficients(f);
}

void write_atomically(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    f << contents;
    if (!f.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace merit::io
