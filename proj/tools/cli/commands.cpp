#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rcgrid/dataset.hpp"
#include "rcgrid/diagnostics.hpp"
#include "rcgrid/errors.hpp"
#include "rcgrid/estimator.hpp"
#include "rcgrid/grid.hpp"
#include "rcgrid/kernels.hpp"
#include "rcgrid/mc.hpp"
#include "rcgrid/report.hpp"
#include "rcgrid/rng.hpp"

namespace rcgrid::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw InvalidArgument("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument("key '" + key + "' has the wrong type");
  }
}

template <class T>
T require(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw InvalidArgument("missing key '" + key + "' in " + where);
  return get_or<T>(j, key, T{});
}

Index positive(const json& j, const std::string& key, Index fallback, const std::string& where) {
  const long long v = j.contains(key) ? get_or<long long>(j, key, 0) : fallback;
  if (v < 1) throw InvalidArgument(where + ": '" + key + "' must be a positive integer");
  return static_cast<Index>(v);
}

OutcomeRows parse_rows(const std::string& s) {
  if (s == "all") return OutcomeRows::all;
  if (s == "inside") return OutcomeRows::inside;
  throw InvalidArgument("outcome_rows must be \"all\" or \"inside\"");
}

std::string rows_name(OutcomeRows r) { return r == OutcomeRows::all ? "all" : "inside"; }

struct LoadedConfig {
  json doc;
  fs::path dir;
};

LoadedConfig load_config(const fs::path& path) {
  if (path.empty()) throw InvalidArgument("--config is required");
  const std::string text = read_file(path);
  LoadedConfig cfg;
  try {
    cfg.doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
  cfg.dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return cfg;
}

fs::path resolve(const LoadedConfig& cfg, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : cfg.dir / path;
}

std::vector<Interval> parse_bounds(const json& j, Index K, double lo, double hi) {
  std::vector<Interval> bounds;
  if (j.contains("bounds")) {
    const auto raw = get_or<std::vector<std::vector<double>>>(j, "bounds", {});
    for (const auto& b : raw) {
      if (b.size() != 2) throw InvalidArgument("bounds entries must be [lo, hi] pairs");
      bounds.emplace_back(b[0], b[1]);
    }
    if (static_cast<Index>(bounds.size()) != K) throw InvalidArgument("bounds must have one pair per dimension");
    return bounds;
  }
  lo = get_or<double>(j, "lo", lo);
  hi = get_or<double>(j, "hi", hi);
  return std::vector<Interval>(static_cast<std::size_t>(K), Interval{lo, hi});
}

Matrix parse_points(const json& j) {
  const auto raw = get_or<std::vector<std::vector<double>>>(j, "points", {});
  if (raw.empty() || raw.front().empty()) throw InvalidArgument("points must be a non-empty list of coordinates");
  Matrix pts(static_cast<Index>(raw.size()), static_cast<Index>(raw.front().size()));
  for (std::size_t r = 0; r < raw.size(); ++r) {
    if (raw[r].size() != raw.front().size()) throw InvalidArgument("points must all have the same dimension");
    for (std::size_t c = 0; c < raw[r].size(); ++c) pts(static_cast<Index>(r), static_cast<Index>(c)) = raw[r][c];
  }
  return pts;
}

// --------------------------------------------------------------------------

int cmd_dgp(const Options& opt, std::ostream& log) {
  const auto cfg = load_config(opt.config);
  check_keys(cfg.doc, {"n", "J", "K", "seed"}, "dgp config");
  const Index n = positive(cfg.doc, "n", 0, "dgp");
  const Index J = positive(cfg.doc, "J", 3, "dgp");
  const Index K = positive(cfg.doc, "K", 2, "dgp");
  if (K != 2) throw InvalidArgument("dgp: the bundled mixture law is bivariate; K must be 2");
  const std::uint64_t seed = opt.seed.value_or(get_or<std::uint64_t>(cfg.doc, "seed", 0));

  const auto dgp = GaussianMixtureDGP::two_component_default();
  Rng rng = make_stream(seed, 0);
  const ChoiceDataset data = simulate_dataset(dgp, n, J, K, rng);

  ensure_dir(opt.out);
  std::ostringstream csv;
  write_dataset_csv(csv, data);
  write_file(opt.out / "data.csv", csv.str());

  json comps = json::array();
  for (const auto& c : dgp.components()) {
    json cov = json::array();
    for (Index r = 0; r < c.covariance.rows(); ++r) {
      cov.push_back(std::vector<double>(c.covariance.row(r).begin(), c.covariance.row(r).end()));
    }
    comps.push_back({{"weight", c.weight}, {"mean", std::vector<double>(c.mean.begin(), c.mean.end())}, {"covariance", cov}});
  }
  const json manifest = {{"command", "dgp"}, {"seed", seed},     {"n", n},
                         {"J", J},           {"K", K},           {"data", "data.csv"},
                         {"dgp", {{"family", "gaussian_mixture"}, {"components", comps}}}};
  write_file(opt.out / "manifest.json", manifest.dump(2) + "\n");
  log << "wrote " << n << " individuals to " << (opt.out / "data.csv").string() << "\n";
  return kOk;
}

int cmd_fit(const Options& opt, std::ostream& log) {
  const auto cfg = load_config(opt.config);
  check_keys(cfg.doc, {"data", "grid", "pcr", "p", "tol", "outcome_rows"}, "fit config");
  const fs::path data_path = resolve(cfg, require<std::string>(cfg.doc, "data", "fit config"));
  std::ifstream in(data_path);
  if (!in) throw IoError("cannot open " + data_path.string());
  const ChoiceDataset data = read_dataset_csv(in);

  const json grid_cfg = cfg.doc.contains("grid") ? cfg.doc.at("grid") : json::object();
  check_keys(grid_cfg, {"D", "lo", "hi", "bounds", "points"}, "grid");
  const Grid grid = grid_cfg.contains("points")
                        ? Grid::from_points(parse_points(grid_cfg))
                        : halton_grid(GridSpec{positive(grid_cfg, "D", 25, "grid"),
                                               parse_bounds(grid_cfg, data.K, -5.0, 5.0)});
  const bool pcr = opt.pcr || get_or<bool>(cfg.doc, "pcr", false);
  const long p = opt.p.value_or(get_or<long>(cfg.doc, "p", 5));
  SolveOptions solve_opt;
  solve_opt.tol = get_or<double>(cfg.doc, "tol", solve_opt.tol);
  const OutcomeRows rows = parse_rows(get_or<std::string>(cfg.doc, "outcome_rows", "all"));

  const Regression reg = build_design(data, grid, rows);
  const FitResult fit = pcr ? fit_pcr(reg, grid, static_cast<Index>(p), solve_opt) : fit_fixed_grid(reg, grid, solve_opt);

  ensure_dir(opt.out);
  json out = json::parse(fit_to_json(fit));
  out["estimator"] = pcr ? "pcr" : "plain";
  out["outcome_rows"] = rows_name(rows);
  out["n"] = data.size();
  out["J"] = data.J;
  write_file(opt.out / "fit.json", out.dump(2) + "\n");
  log << (pcr ? "pcr" : "plain") << " fit: objective " << fit.certificate.objective << ", kkt "
      << fit.certificate.kkt_residual << "\n";
  return kOk;
}

int cmd_diagnose(const Options& opt, std::ostream& log) {
  const auto cfg = load_config(opt.config);
  check_keys(cfg.doc, {"kernel", "D", "points", "lo", "hi", "bounds", "draws", "J", "seed", "include_psi"},
             "diagnose config");
  const KernelTag kernel = parse_kernel_tag(require<std::string>(cfg.doc, "kernel", "diagnose config"));
  const Index draws = positive(cfg.doc, "draws", 10000, "diagnose");
  const Index J = positive(cfg.doc, "J", 3, "diagnose");
  const std::uint64_t seed = opt.seed.value_or(get_or<std::uint64_t>(cfg.doc, "seed", 0));
  const bool include_psi = get_or<bool>(cfg.doc, "include_psi", true);

  std::vector<Index> sizes;
  Grid grid = Grid::from_points(Matrix::Zero(1, 2));
  if (cfg.doc.contains("points")) {
    if (cfg.doc.contains("D")) throw InvalidArgument("diagnose: give either D or points, not both");
    grid = Grid::from_points(parse_points(cfg.doc));
    sizes.push_back(grid.size());
  } else {
    const json& d = cfg.doc.contains("D") ? cfg.doc.at("D") : json(25);
    if (d.is_array()) {
      for (const auto& v : d) {
        if (!v.is_number_integer() || v.get<long long>() < 1) throw InvalidArgument("diagnose: D entries must be positive integers");
        sizes.push_back(v.get<Index>());
      }
      if (sizes.empty()) throw InvalidArgument("diagnose: D list is empty");
    } else {
      sizes.push_back(positive(cfg.doc, "D", 25, "diagnose"));
    }
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
    const double lo = kernel == KernelTag::logit ? -5.0 : 0.5;
    const double hi = kernel == KernelTag::logit ? 5.0 : 2.0;
    grid = halton_grid(GridSpec{sizes.back(), parse_bounds(cfg.doc, 2, lo, hi)});
  }

  // One covariate sample for the largest grid; smaller grids use its leading
  // columns, which makes the nested Gram matrices exact principal submatrices.
  Rng rng = make_stream(seed, 0);
  const Matrix s = sample_design(grid, kernel, draws, rng, J);
  ensure_dir(opt.out);
  json reports = json::array();
  double previous = std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (Index D : sizes) {
    const DiagnosticsReport report = diagnose_design(s.leftCols(D), kernel, draws);
    monotone = monotone && report.xi_min <= previous + 1e-12;
    previous = report.xi_min;
    reports.push_back(json::parse(diagnostics_to_json(report, include_psi)));
    std::ostringstream csv;
    write_spectrum_csv(csv, report.spectrum);
    const std::string name = sizes.size() == 1 ? "spectrum.csv" : "spectrum_D" + std::to_string(D) + ".csv";
    write_file(opt.out / name, csv.str());
    log << to_string(kernel) << " D=" << D << ": xi_min " << report.xi_min << ", tau_D " << report.tau_D
        << ", log-spectrum slope " << report.log_slope << "\n";
  }
  json out = sizes.size() == 1 ? reports.front() : json{{"reports", reports}, {"xi_min_nonincreasing", monotone}};
  out["seed"] = seed;
  write_file(opt.out / "diagnostics.json", out.dump(2) + "\n");
  return kOk;
}

McCell parse_cell(const json& defaults, const json& j, std::optional<std::uint64_t> seed_override) {
  static const std::set<std::string> keys{"n", "D", "p", "M", "seed", "quantile_levels", "J",
                                          "lo", "hi", "lattice_per_dim", "outcome_rows"};
  check_keys(j, keys, "cell");
  json merged = defaults;
  for (const auto& [k, v] : j.items()) merged[k] = v;
  McCell cell;
  cell.n = positive(merged, "n", 0, "cell");
  cell.D = positive(merged, "D", 0, "cell");
  cell.p = positive(merged, "p", cell.p, "cell");
  cell.M = positive(merged, "M", 0, "cell");
  cell.seed = seed_override.value_or(get_or<std::uint64_t>(merged, "seed", 0));
  cell.quantile_levels = get_or<std::vector<double>>(merged, "quantile_levels", cell.quantile_levels);
  cell.J = positive(merged, "J", cell.J, "cell");
  cell.grid_lo = get_or<double>(merged, "lo", cell.grid_lo);
  cell.grid_hi = get_or<double>(merged, "hi", cell.grid_hi);
  cell.lattice_per_dim = positive(merged, "lattice_per_dim", cell.lattice_per_dim, "cell");
  cell.rows = parse_rows(get_or<std::string>(merged, "outcome_rows", rows_name(cell.rows)));
  cell.validate();
  return cell;
}

json cell_to_json(const McCell& c) {
  return {{"n", c.n},
          {"D", c.D},
          {"p", c.p},
          {"M", c.M},
          {"seed", c.seed},
          {"quantile_levels", c.quantile_levels},
          {"J", c.J},
          {"lo", c.grid_lo},
          {"hi", c.grid_hi},
          {"lattice_per_dim", c.lattice_per_dim},
          {"outcome_rows", rows_name(c.rows)}};
}

int cmd_mc(const Options& opt, std::ostream& log, std::ostream& err) {
  const auto cfg = load_config(opt.config);
  check_keys(cfg.doc, {"name", "layout", "defaults", "cells"}, "schedule");
  const std::string layout_name = get_or<std::string>(cfg.doc, "layout", "cdf");
  if (layout_name != "cdf" && layout_name != "quantile") throw InvalidArgument("layout must be \"cdf\" or \"quantile\"");
  const TableLayout layout = layout_name == "cdf" ? TableLayout::cdf : TableLayout::quantile;
  const json defaults = cfg.doc.contains("defaults") ? cfg.doc.at("defaults") : json::object();
  check_keys(defaults, {"p", "M", "seed", "quantile_levels", "J", "lo", "hi", "lattice_per_dim", "outcome_rows"},
             "schedule defaults");
  if (!cfg.doc.contains("cells") || !cfg.doc.at("cells").is_array()) throw InvalidArgument("schedule needs a cells list");
  std::vector<McCell> cells;
  for (const auto& c : cfg.doc.at("cells")) cells.push_back(parse_cell(defaults, c, opt.seed));
  if (opt.workers < 1) throw InvalidArgument("--workers must be >= 1");

  ensure_dir(opt.out);
  RunOptions run_opt;
  run_opt.workers = opt.workers;
  std::vector<CellResult> results;
  for (const auto& cell : cells) {
    results.push_back(run_cell(cell, run_opt));
    const auto& r = results.back();
    log << "cell n=" << cell.n << " D=" << cell.D << " M=" << cell.M << ": rmse plain " << r.rmse_plain << ", pcr "
        << r.rmse_pcr << ", failures " << r.failures << "\n";
  }

  std::ostringstream results_csv, table_csv, table_txt;
  write_results_csv(results_csv, results);
  write_table_csv(table_csv, results, layout);
  write_table_text(table_txt, results, layout);
  write_file(opt.out / "results.csv", results_csv.str());
  write_file(opt.out / "table.csv", table_csv.str());
  write_file(opt.out / "table.txt", table_txt.str());
  json resolved = {{"name", get_or<std::string>(cfg.doc, "name", "")}, {"layout", layout_name}, {"cells", json::array()}};
  for (const auto& c : cells) resolved["cells"].push_back(cell_to_json(c));
  write_file(opt.out / "config.json", resolved.dump(2) + "\n");
  log << table_txt.str();

  int failed = 0;
  for (const auto& r : results) {
    if (r.failed()) {
      ++failed;
      err << "cell n=" << r.cell.n << " D=" << r.cell.D << " failed: " << r.failures << " of " << r.cell.M
          << " replications errored\n";
    }
  }
  return failed ? kPartialFailure : kOk;
}

}  // namespace

int run(const Options& options, std::ostream& log, std::ostream& err) {
  try {
    if (options.command == "dgp") return cmd_dgp(options, log);
    if (options.command == "fit") return cmd_fit(options, log);
    if (options.command == "diagnose") return cmd_diagnose(options, log);
    if (options.command == "mc") return cmd_mc(options, log, err);
    err << "error: unknown command '" << options.command << "'\n";
    return kValidation;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kValidation;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const json::exception& e) {
    err << "invalid config: " << e.what() << "\n";
    return kValidation;
  } catch (const InfeasibleError& e) {
    err << "solver: " << e.what() << " (gap " << e.gap() << ")\n";
    return kSolver;
  } catch (const NonConvergenceError& e) {
    err << "solver: " << e.what() << " (kkt " << e.kkt_residual() << " after " << e.iterations() << " iterations)\n";
    return kSolver;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kSolver;
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"Fixed-grid estimation of random-coefficient distributions in mixed logit models"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  long p = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON configuration file")->required();
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--seed", seed, "Override the configured seed");
  };
  auto* dgp = app.add_subcommand("dgp", "Simulate a choice dataset");
  add_common(dgp);
  auto* fit = app.add_subcommand("fit", "Fit mixing weights on a fixed grid");
  add_common(fit);
  fit->add_flag("--pcr", opt.pcr, "Restrict weights to the top principal components");
  fit->add_option("--p", p, "Number of principal components");
  auto* diag = app.add_subcommand("diagnose", "Conditioning diagnostics of the design");
  add_common(diag);
  auto* mc = app.add_subcommand("mc", "Run a Monte Carlo schedule");
  add_common(mc);
  mc->add_option("--workers", opt.workers, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    log << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  for (auto* sub : {dgp, fit, diag, mc}) {
    if (sub->parsed()) {
      opt.command = sub->get_name();
      if (sub->count("--seed")) opt.seed = seed;
      if (sub == fit && sub->count("--p")) opt.p = p;
    }
  }
  return run(opt, log, err);
}

}  // namespace rcgrid::cli
