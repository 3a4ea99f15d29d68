#include "merit/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "merit/error.hpp"
#include "merit/estimator.hpp"
#include "merit/fw_solver.hpp"
#include "merit/matrix_io.hpp"
#include "merit/rng.hpp"
#include "merit/selection.hpp"
#include "merit/spa.hpp"
#include "merit/synth.hpp"

namespace merit::cli {

using nlohmann::json;
namespace fs = std::filesystem;

unsigned threads_from_env() {
  const char* v = std::getenv("MERIT_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 0 || n > 1024)
    throw ContractError(std::string("MERIT_THREADS must be an integer in [0, 1024], got '") + v + "'");
  return static_cast<unsigned>(n);
}

namespace {

double parse_snr(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "noiseless") return kNoiseless;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v)) throw ContractError("invalid SNR '" + s + "'");
  return v;
}

json snr_json(double snr) { return std::isfinite(snr) ? json(snr) : json(nullptr); }

void emit(const std::string& path, const std::string& contents, std::ostream& out) {
  if (path.empty() || path == "-") out << contents;
  else io::write_atomically(path, contents);
}

std::vector<std::size_t> parse_index_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
      throw ContractError("invalid index '" + tok + "' in list '" + s + "'");
    out.push_back(std::stoul(tok));
  }
  if (out.empty()) throw ContractError("empty index list");
  return out;
}

json anchors_json(const AnchorSet& a) { return json(a.indices); }

json solve_config_json(const SolveConfig& c) {
  return {{"lambda", c.lambda},       {"mu", c.mu},          {"maxSweeps", c.max_sweeps},
          {"tInit", c.t_init},        {"tol", c.per_column_tol}, {"seed", c.seed},
          {"threads", c.threads}};
}

// ---------------------------------------------------------------------------

void add_solver_flags(CLI::App* sub, SolveConfig& cfg) {
  sub->add_option("--lambda", cfg.lambda, "regularization weight")->check(CLI::NonNegativeNumber);
  sub->add_option("--mu", cfg.mu, "smoothing parameter")->check(CLI::PositiveNumber);
  sub->add_option("--max-sweeps", cfg.max_sweeps, "Frank-Wolfe sweeps")->check(CLI::PositiveNumber);
}

struct SweepFlags {
  std::size_t m = 50, k = 40;
  std::vector<std::size_t> n;
  std::vector<std::string> snr;
  std::vector<std::string> solvers;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::string warm_start = "zero";
  std::string out_jsonl, out_csv;
  bool no_timing = false;
  SolveConfig solve;
};

void add_sweep_flags(CLI::App* sub, SweepFlags& f) {
  sub->add_option("--m", f.m, "rows of X")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--k", f.k, "number of anchors")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--n", f.n, "columns of X (list)")->capture_default_str()->delimiter(',');
  sub->add_option("--snr", f.snr, "SNR in dB (list; 'inf' for noiseless)")
      ->capture_default_str()
      ->delimiter(',');
  sub->add_option("--solvers", f.solvers, "merit, merit0, spa (list)")
      ->capture_default_str()
      ->delimiter(',');
  sub->add_option("--trials", f.trials, "trials per grid point")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--seed", f.seed, "base seed")->required();
  sub->add_option("--warm-start", f.warm_start, "zero or spa")
      ->capture_default_str()
      ->check(CLI::IsMember({"zero", "spa"}));
  sub->add_option("--out-jsonl", f.out_jsonl, "per-trial records (default stdout)");
  sub->add_option("--out-csv", f.out_csv, "aggregate table");
  sub->add_flag("--no-timing", f.no_timing, "write wallTimeMs as 0 for byte-identical reruns");
  add_solver_flags(sub, f.solve);
}

int cmd_sweep(const SweepFlags& f, bool memory_mode, std::ostream& out) {
  SweepSpec spec;
  spec.trials = f.trials;
  spec.seed = f.seed;
  spec.solve = f.solve;
  spec.solve.threads = threads_from_env();
  spec.warm_start = f.warm_start == "spa" ? WarmStartKind::Spa : WarmStartKind::Zero;
  spec.record_timing = !f.no_timing;
  for (const auto& s : f.solvers) spec.solvers.push_back(parse_solver(s));
  std::vector<double> snrs;
  for (const auto& s : f.snr) snrs.push_back(parse_snr(s));
  for (double snr : snrs)
    for (std::size_t n : f.n) spec.grid.push_back({f.m, f.k, n, snr});

  json config = {{"command", memory_mode ? "memory-sweep" : "synth-sweep"},
                 {"M", f.m},
                 {"K", f.k},
                 {"N", f.n},
                 {"snrDb", json::array()},
                 {"solvers", f.solvers},
                 {"trials", f.trials},
                 {"seed", f.seed},
                 {"warmStart", f.warm_start},
                 {"recordTiming", spec.record_timing},
                 {"rngVersion", kRngVersion},
                 {"solve", solve_config_json(spec.solve)}};
  for (double s : snrs) config["snrDb"].push_back(snr_json(s));

  std::ostringstream jl;
  jl << json{{"config", config}}.dump() << '\n';
  const auto records = run_sweep(spec, [&](const TrialRecord& r) {
    jl << to_json(r, spec.record_timing).dump() << '\n';
  });
  emit(f.out_jsonl, jl.str(), out);

  if (!f.out_csv.empty()) {
    std::ostringstream csv;
    csv << "# " << config.dump() << '\n';
    csv << std::setprecision(10);
    if (memory_mode) {
      csv << "N,solver,trials,meanPeakTotalNnz,meanPeakNnzRatio,linear\n";
      for (const auto& row : aggregate(records))
        csv << row.point.n << ',' << to_string(row.solver) << ',' << row.trials << ','
            << row.mean_peak_total_nnz << ',' << row.mean_peak_nnz_ratio << ','
            << (row.mean_peak_nnz_ratio <= 2.0 ? "true" : "false") << '\n';
    } else {
      csv << "snrDb,N,solver,successRate,meanPeakNnzRatio\n";
      for (const auto& row : aggregate(records)) {
        if (std::isfinite(row.point.snr_db)) csv << row.point.snr_db;
        else csv << "inf";
        csv << ',' << row.point.n << ',' << to_string(row.solver) << ',' << row.success_rate << ','
            << row.mean_peak_nnz_ratio << '\n';
      }
    }
    io::write_atomically(f.out_csv, csv.str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SolveCmdFlags {
  std::string input, warm_start = "zero", out_dir;
  std::size_t k = 0;
  std::size_t t_init = 0;
  bool require_convergence = false;
  SolveConfig solve;
};

int cmd_solve(const SolveCmdFlags& f, std::ostream& out) {
  const DenseMatrix x = io::load_dense(f.input);
  SolveConfig cfg = f.solve;
  cfg.threads = threads_from_env();
  cfg.track_support = true;

  std::optional<CoefficientMatrix> init;
  std::string warm_kind = "zero";
  json warm_info = json::object();
  if (f.warm_start == "spa") {
    if (f.k == 0) throw ContractError("--warm-start spa requires --k");
    warm_kind = "spa";
    const auto spa = spa_select(x, f.k);
    init = build_warm_start(x, spa.anchors);
    warm_info["spaAnchors"] = anchors_json(spa.anchors);
    warm_info["rankDeficient"] = spa.rank_deficient;
  } else if (f.warm_start.rfind("file:", 0) == 0) {
    warm_kind = "file";
    const std::string path = f.warm_start.substr(5);
    init = io::load_coefficients(path);
    if (init->dim() != x.cols())
      throw InfeasibleError("warm-start matrix is " + std::to_string(init->dim()) + "x" +
                            std::to_string(init->dim()) + " but X has " +
                            std::to_string(x.cols()) + " columns");
    warm_info["path"] = path;
  } else if (f.warm_start != "zero") {
    throw ContractError("--warm-start must be zero, spa or file:<path>");
  }
  if (init) {
    cfg.t_init = f.t_init > 0 ? f.t_init : warm_start_offset(x, *init);
    warm_info["tInitSource"] = f.t_init > 0 ? "flag" : "rmse";
  } else {
    cfg.t_init = 0;
  }

  const auto result = solve(x, cfg, std::move(init));
  const auto& rep = result.report;
  const std::size_t k = f.k > 0 ? f.k : result.coefficients.nonzero_rows();
  const auto sel = select_anchors(result.coefficients, k);

  double res_sq = 0.0;
  for (double r : rep.final_residual_per_column) res_sq += r * r;
  const bool converged = cfg.per_column_tol > 0.0 ? rep.frozen_columns == x.cols() : true;

  json config = {{"command", "solve"},     {"input", f.input}, {"warmStart", f.warm_start},
                 {"k", f.k},               {"outDir", f.out_dir},
                 {"requireConvergence", f.require_convergence},
                 {"solve", solve_config_json(cfg)}};
  json report = {{"config", config},
                 {"lambda", cfg.lambda},
                 {"mu", cfg.mu},
                 {"warmStartKind", warm_kind},
                 {"warmStart", warm_info},
                 {"sweepsRun", rep.sweeps_run},
                 {"tInit", rep.t_init},
                 {"peakNonzeroRows", rep.peak_nonzero_rows},
                 {"peakTotalNnz", rep.peak_total_nnz},
                 {"frozenColumns", rep.frozen_columns},
                 {"supportUnionSize", rep.support_union_size},
                 {"residualFrobenius", std::sqrt(res_sq)},
                 {"finalResidualPerColumn", rep.final_residual_per_column},
                 {"objectiveTrace", rep.objective_trace},
                 {"converged", converged},
                 {"anchors", anchors_json(sel.anchors)},
                 {"anchorsIncludeZeroRows", sel.includes_zero_rows}};

  fs::create_directories(f.out_dir);
  std::ostringstream cm;
  io::write_mm_coefficients(cm, result.coefficients);
  io::write_atomically(fs::path(f.out_dir) / "C.mtx", cm.str());
  io::write_atomically(fs::path(f.out_dir) / "report.json", report.dump(2) + "\n");
  io::write_atomically(fs::path(f.out_dir) / "anchors.json",
                       json{{"config", config}, {"anchors", anchors_json(sel.anchors)}}.dump() + "\n");
  out << "anchors:";
  for (std::size_t i : sel.anchors.indices) out << ' ' << i;
  out << "\nsweeps: " << rep.sweeps_run << " (tInit " << rep.t_init << ")\n";
  if (f.require_convergence && !converged) return kExitNonConvergence;
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SelectFlags {
  std::string coefficients, out;
  std::size_t k = 0;
};

int cmd_select(const SelectFlags& f, std::ostream& out) {
  const auto c = io::load_coefficients(f.coefficients);
  const auto sel = select_anchors(c, f.k);
  json j = {{"config", {{"command", "select-anchors"}, {"coefficients", f.coefficients}, {"k", f.k}}},
            {"anchors", anchors_json(sel.anchors)},
            {"includesZeroRows", sel.includes_zero_rows}};
  emit(f.out, j.dump() + "\n", out);
  return kExitOk;
}

struct EstimateFlags {
  std::string input, anchors, out;
  SimplexLsConfig ls;
};

int cmd_estimate(const EstimateFlags& f, std::ostream& out) {
  const DenseMatrix x = io::load_dense(f.input);
  AnchorSet a{parse_index_list(f.anchors)};
  const DenseMatrix h = estimate_h(x, a, f.ls);
  if (f.out.empty()) {
    std::ostringstream os;
    io::write_csv(os, h);
    out << os.str();
  } else {
    io::save_dense(f.out, h);
  }
  return kExitOk;
}

struct DiagFlags {
  std::string w, h, v, init, coefficients, out;
  std::size_t t_init = 1;
  double lambda = kDefaultLambda, mu = kDefaultMu;
};

int cmd_diagnostics(const DiagFlags& f, std::ostream& out) {
  const DenseMatrix w = io::load_dense(f.w);
  const DenseMatrix h = io::load_dense(f.h);
  const DenseMatrix v = f.v.empty() ? DenseMatrix() : io::load_dense(f.v);
  json j = to_json(compute_diagnostics(w, h, v, f.lambda, f.mu));
  AnchorSet rows{find_anchor_columns(h)};
  if (!f.init.empty()) {
    const auto r = check_init_regularity(io::load_coefficients(f.init), f.t_init, rows);
    j["regularity"] = {{"regular", r.regular}, {"xi", r.xi}, {"tInit", f.t_init}};
  }
  if (!f.coefficients.empty())
    j["supportMargin"] =
        to_json(support_margin(io::load_coefficients(f.coefficients), rows, w, h, f.lambda, f.mu));
  j["config"] = {{"command", "diagnostics"}, {"w", f.w}, {"h", f.h}, {"v", f.v},
                 {"init", f.init}, {"coefficients", f.coefficients}, {"tInit", f.t_init},
                 {"lambda", f.lambda}, {"mu", f.mu}};
  emit(f.out, j.dump() + "\n", out);
  return kExitOk;
}

struct CommunityFlags {
  std::string adjacency, h_ref, out;
  std::size_t k = 0;
  double energy = 0.99;
  bool require_convergence = false;
  SolveConfig solve;
};

int cmd_community(const CommunityFlags& f, std::ostream& out) {
  const auto a = io::load_adjacency(f.adjacency);
  const DenseMatrix href = io::load_dense(f.h_ref);
  SolveConfig cfg = f.solve;
  cfg.threads = threads_from_env();
  const auto r = community_pipeline(a, href, f.k, cfg, f.energy);
  json j = {{"config",
             {{"command", "community-eval"}, {"adjacency", f.adjacency}, {"hRef", f.h_ref},
              {"k", f.k}, {"energyFraction", f.energy}, {"solve", solve_config_json(cfg)}}},
            {"src", r.src},
            {"k", r.k},
            {"nodesKept", r.nodes_kept.size()},
            {"anchors", anchors_json(r.anchors)},
            {"eigenConverged", r.eigen_converged}};
  emit(f.out, j.dump() + "\n", out);
  if (f.require_convergence && !r.eigen_converged) return kExitNonConvergence;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Memory-efficient self-dictionary anchor identification"};
  app.name("merit");
  app.require_subcommand(1);

  SweepFlags synth;
  synth.n = {200};
  synth.snr = {"10"};
  synth.solvers = {"merit"};
  auto* synth_cmd = app.add_subcommand("synth-sweep", "success-rate sweep on synthetic instances");
  add_sweep_flags(synth_cmd, synth);

  SweepFlags mem;
  mem.n = {200, 1000, 5000};
  mem.snr = {"10"};
  mem.solvers = {"merit"};
  mem.trials = 5;
  auto* mem_cmd = app.add_subcommand("memory-sweep", "peak coefficient storage across N");
  add_sweep_flags(mem_cmd, mem);

  SolveCmdFlags sf;
  auto* solve_cmd = app.add_subcommand("solve", "solve the regularized self-dictionary problem");
  solve_cmd->add_option("--input", sf.input, "X as CSV or Matrix Market")->required()->check(CLI::ExistingFile);
  add_solver_flags(solve_cmd, sf.solve);
  solve_cmd->add_option("--tol", sf.solve.per_column_tol, "freeze a column once its residual is below this")
      ->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--seed", sf.solve.seed, "seed (recorded for replay)")->required();
  solve_cmd->add_option("--warm-start", sf.warm_start, "zero, spa or file:<path>")->capture_default_str();
  solve_cmd->add_option("--k", sf.k, "anchors to report (required for spa warm start)");
  solve_cmd->add_option("--t-init", sf.t_init, "override the warm-start step offset")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--out-dir", sf.out_dir, "output directory")->required();
  solve_cmd->add_flag("--require-convergence", sf.require_convergence,
                      "exit 4 unless every column meets --tol");

  SelectFlags sel;
  auto* sel_cmd = app.add_subcommand("select-anchors", "rows of C with the largest l_inf norms");
  sel_cmd->add_option("--coefficients", sel.coefficients, "C as Matrix Market coordinate")
      ->required()
      ->check(CLI::ExistingFile);
  sel_cmd->add_option("--k", sel.k, "number of anchors")->required()->check(CLI::PositiveNumber);
  sel_cmd->add_option("--out", sel.out, "output JSON (default stdout)");

  EstimateFlags est;
  auto* est_cmd = app.add_subcommand("estimate-h", "simplex least squares H on a chosen basis");
  est_cmd->add_option("--input", est.input, "X")->required()->check(CLI::ExistingFile);
  est_cmd->add_option("--anchors", est.anchors, "comma-separated column indices")->required();
  est_cmd->add_option("--max-iters", est.ls.max_iters, "iterations per column")->check(CLI::PositiveNumber);
  est_cmd->add_option("--tol", est.ls.tol, "relative stopping tolerance")->check(CLI::PositiveNumber);
  est_cmd->add_option("--out", est.out, "H as CSV or .mtx (default CSV on stdout)");

  DiagFlags diag;
  auto* diag_cmd = app.add_subcommand("diagnostics", "identifiability and memory-bound quantities");
  diag_cmd->add_option("--w-matrix", diag.w, "W")->required()->check(CLI::ExistingFile);
  diag_cmd->add_option("--h-matrix", diag.h, "H")->required()->check(CLI::ExistingFile);
  diag_cmd->add_option("--v-matrix", diag.v, "noise V")->check(CLI::ExistingFile);
  diag_cmd->add_option("--init", diag.init, "warm start to test for regularity")->check(CLI::ExistingFile);
  diag_cmd->add_option("--t-init", diag.t_init, "step offset for the regularity test")->check(CLI::PositiveNumber);
  diag_cmd->add_option("--coefficients", diag.coefficients, "iterate for the support margin")
      ->check(CLI::ExistingFile);
  diag_cmd->add_option("--lambda", diag.lambda, "regularization weight")->check(CLI::NonNegativeNumber);
  diag_cmd->add_option("--mu", diag.mu, "smoothing parameter")->check(CLI::PositiveNumber);
  diag_cmd->add_option("--out", diag.out, "output JSON (default stdout)");

  CommunityFlags com;
  auto* com_cmd = app.add_subcommand("community-eval", "community membership recovery on a graph");
  com_cmd->add_option("--adjacency", com.adjacency, "adjacency as Matrix Market coordinate")
      ->required()
      ->check(CLI::ExistingFile);
  com_cmd->add_option("--h-ref", com.h_ref, "ground-truth memberships K x n")->required()->check(CLI::ExistingFile);
  com_cmd->add_option("--k", com.k, "number of communities")->required()->check(CLI::PositiveNumber);
  com_cmd->add_option("--energy", com.energy, "kept fraction of column energy")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  add_solver_flags(com_cmd, com.solve);
  com_cmd->add_flag("--require-convergence", com.require_convergence,
                    "exit 4 if the eigensolver did not converge");
  com_cmd->add_option("--out", com.out, "output JSON (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return cmd_sweep(synth, false, out);
    if (mem_cmd->parsed()) return cmd_sweep(mem, true, out);
    if (solve_cmd->parsed()) return cmd_solve(sf, out);
    if (sel_cmd->parsed()) return cmd_select(sel, out);
    if (est_cmd->parsed()) return cmd_estimate(est, out);
    if (diag_cmd->parsed()) return cmd_diagnostics(diag, out);
    if (com_cmd->parsed()) return cmd_community(com, out);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const InfeasibleError& e) {
    err << "infeasible input: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace merit::cli
