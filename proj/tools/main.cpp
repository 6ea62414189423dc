// Command-line front end: single fits, gamma/rho1 sweeps, method
// comparisons, and synthetic dataset generation.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "proxdist/csv.hpp"
#include "proxdist/datagen.hpp"
#include "proxdist/experiments.hpp"
#include "proxdist/solver.hpp"

namespace fs = std::filesystem;
using namespace proxdist;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMissingFile = 3;
constexpr int kExitBadCsv = 4;
constexpr int kExitBadConfig = 5;

Family parse_family(const std::string& s) {
  if (s == "linear") return Family::Linear;
  if (s == "logistic") return Family::Logistic;
  if (s == "huber") return Family::Huber;
  if (s == "matrix") return Family::Matrix;
  throw CLI::ValidationError("--family", "unknown family '" + s + "'");
}

// "a/b" fractions are accepted so grids like 1/3,2/3,1 read naturally.
double parse_rational(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return parse_double(s, "number");
  const double num = parse_double(s.substr(0, slash), "fraction");
  const double den = parse_double(s.substr(slash + 1), "fraction");
  if (den == 0.0) throw std::invalid_argument("fraction with zero denominator: " + s);
  return num / den;
}

std::vector<double> parse_rational_list(const std::vector<std::string>& in) {
  std::vector<double> out;
  out.reserve(in.size());
  for (const auto& s : in) out.push_back(parse_rational(s));
  return out;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string short_num(double v) {
  std::ostringstream ss;
  ss << v;  // default precision; file-name friendly
  return ss.str();
}

// Resolved configuration echoed to manifest.txt, sorted by key. The default
// output tag is a hash of this text, so identical invocations land in the
// same directory.
struct Manifest {
  std::map<std::string, std::string> entries;

  void put(const std::string& key, const std::string& value) { entries[key] = value; }
  void put(const std::string& key, double value) { entries[key] = format_double(value); }
  void put(const std::string& key, Index value) { entries[key] = std::to_string(value); }
  void put(const std::string& key, std::uint64_t value) { entries[key] = std::to_string(value); }
  void put(const std::string& key, bool value) { entries[key] = value ? "1" : "0"; }
  void put_list(const std::string& key, const std::vector<double>& values) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) joined += ",";
      joined += format_double(values[i]);
    }
    entries[key] = joined;
  }

  std::string text() const {
    std::string out;
    for (const auto& [k, v] : entries) out += k + "=" + v + "\n";
    return out;
  }
  std::string tag() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text())));
    return std::string(buf, 8);
  }
};

struct CommonArgs {
  std::string out = "out";
  std::string tag;  // empty: derived from the manifest hash
  std::uint64_t seed = 0;

  fs::path resolve_dir(const std::string& subcommand, const Manifest& manifest) const {
    return fs::path(out) / subcommand / (tag.empty() ? manifest.tag() : tag);
  }
};

struct ProblemArgs {
  std::string family = "linear";
  std::string constraint = "ball";
  Index n = 1000;
  Index p = 20;
  Index q = 0;
  Index s = 5;
  Index r = 1;
  double outlier_frac = 0.1;
  double delta = 2.0;

  void add_size_flags(CLI::App* cmd) {
    cmd->add_option("--n", n, "Number of observations")->capture_default_str();
    cmd->add_option("--p", p, "Covariate dimension (matrix rows for --family matrix)")
        ->capture_default_str();
    cmd->add_option("--q", q, "Matrix column count (matrix family only)")->capture_default_str();
  }
  void add_structure_flags(CLI::App* cmd) {
    cmd->add_option("--constraint", constraint, "Constraint set: ball, sparsity, rank, none")
        ->check(CLI::IsMember({"ball", "sparsity", "rank", "none"}))
        ->capture_default_str();
    cmd->add_option("--s", s, "Sparsity level (kept coordinates)")->capture_default_str();
    cmd->add_option("--r", r, "Rank bound (kept singular values)")->capture_default_str();
    cmd->add_option("--outlier-frac", outlier_frac, "Huber outlier share in generated data")
        ->capture_default_str();
    cmd->add_option("--delta", delta, "Huber loss threshold")->capture_default_str();
  }

  Family fam() const { return parse_family(family); }

  GenSpec gen_spec(std::uint64_t seed) const {
    GenSpec g;
    g.family = fam();
    g.n = n;
    g.p = p;
    g.q = g.family == Family::Matrix ? (q > 0 ? q : p) : 0;
    g.flavor = constraint == "sparsity"
                   ? TruthFlavor::SparseTruth
                   : (constraint == "rank" || g.family == Family::Matrix
                          ? TruthFlavor::LowRankTruth
                          : TruthFlavor::UnitBallTruth);
    g.sparsity = s;
    g.rank = r;
    g.outlier_fraction = outlier_frac;
    g.huber_delta = delta;
    g.seed = seed;
    return g;
  }

  ConstraintSet constraint_set(Index dim, Index rows, Index cols) const {
    if (constraint == "ball") return ConstraintSet::unit_ball(dim);
    if (constraint == "sparsity") return ConstraintSet::sparsity(dim, s);
    if (constraint == "rank") return ConstraintSet::rank(rows, cols, r);
    return ConstraintSet::unconstrained(dim);
  }

  void fill_manifest(Manifest& m) const {
    m.put("family", family);
    m.put("constraint", constraint);
    m.put("n", n);
    m.put("p", p);
    m.put("q", q);
    m.put("s", s);
    m.put("r", r);
    m.put("outlier_frac", outlier_frac);
    m.put("delta", delta);
  }
};

void write_vector_csv(const fs::path& path, const std::string& name, const Vector& v) {
  std::string out = name + "\n";
  for (Index i = 0; i < v.size(); ++i) out += format_double(v[i]) + "\n";
  write_text_file(path, out);
}

int run_gen(const CommonArgs& common, const ProblemArgs& prob) {
  GenSpec spec = prob.gen_spec(common.seed);
  const Vector truth = gen_theta_true(spec);
  const Dataset data = gen_dataset(spec, truth);

  Manifest m;
  prob.fill_manifest(m);
  m.put("seed", common.seed);
  m.put("subcommand", std::string("gen"));

  const fs::path dir = common.resolve_dir("gen", m);
  data.to_csv(dir / "dataset.csv");
  write_vector_csv(dir / "theta_true.csv", "theta_true", truth);
  write_text_file(dir / "manifest.txt", m.text());
  std::printf("%s\n", (dir / "dataset.csv").c_str());
  return kExitOk;
}

struct FitArgs {
  std::string method = "spd";
  std::string data_path;
  std::string theta_star_mode = "auto";
  double rho1 = 0.1;
  double gamma = 1.0;
  double alpha1 = 0.1;
  double alpha_decay = 1.0;
  Index b = 0;  // 0: 5% of n, at least 1
  Index kmax = 1000;
  double eps = 1e-9;
  Index trace_every = 1;
  Index check_every = 1;
  bool timing = false;
  double ref_rho1 = 1.0;
  Index ref_kmax = 100000;
};

int run_fit(const CommonArgs& common, const ProblemArgs& prob, const FitArgs& fit) {
  const Family fam = prob.fam();

  std::optional<Vector> truth;
  std::optional<Dataset> data;
  if (!fit.data_path.empty()) {
    std::optional<std::pair<Index, Index>> sides;
    if (fam == Family::Matrix) {
      if (prob.q < 1) throw std::invalid_argument("fit: matrix CSV input needs --p and --q");
      sides = {prob.p, prob.q};
    }
    data = Dataset::from_csv(fit.data_path, sides);
  } else {
    GenSpec spec = prob.gen_spec(common.seed);
    truth = gen_theta_true(spec);
    data = gen_dataset(spec, *truth);
  }

  Model model = [&] {
    switch (fam) {
      case Family::Linear: return Model::linear(*data);
      case Family::Logistic: return Model::logistic(*data);
      case Family::Huber: return Model::huber(*data, prob.delta);
      case Family::Matrix: return Model::matrix(*data);
    }
    throw std::logic_error("fit: unknown family");
  }();

  const ConstraintSet cset = prob.constraint_set(
      model.dim(), data->is_matrix_design() ? data->mat_rows() : model.dim(),
      data->is_matrix_design() ? data->mat_cols() : 1);

  SolverConfig cfg;
  cfg.penalty = {fit.rho1, fit.gamma};
  cfg.step = {fit.alpha1, fit.alpha_decay};
  cfg.batch_size = fit.b > 0 ? fit.b : std::max<Index>(1, model.data().n() / 20);
  cfg.max_iterations = fit.kmax;
  cfg.tolerance = fit.eps;
  cfg.seed = common.seed;
  cfg.trace_every = fit.trace_every;
  cfg.objective_check_every = fit.check_every;
  cfg.record_timing = fit.timing;

  std::string star_mode = fit.theta_star_mode;
  if (star_mode == "auto") {
    if (cset.is_convex())
      star_mode = "batch";
    else
      star_mode = truth ? "truth" : "none";
  }
  if (star_mode == "batch") {
    SolverConfig ref;
    ref.penalty = {fit.ref_rho1, 1.0};
    ref.batch_size = model.data().n();
    ref.max_iterations = fit.ref_kmax;
    ref.tolerance = 1e-12;
    ref.trace_every = fit.ref_kmax;
    ref.warnings = false;
    cfg.theta_star = run_batch_pd(model, cset, ref).theta_hat;
    cfg.theta_star_source = ReferenceSource::BatchSolve;
  } else if (star_mode == "truth") {
    if (!truth) throw std::invalid_argument("fit: --theta-star truth needs generated data");
    cfg.theta_star = *truth;
    cfg.theta_star_source = ReferenceSource::Truth;
  } else if (star_mode != "none") {
    throw std::invalid_argument("fit: unknown --theta-star mode '" + star_mode + "'");
  }
  if (truth && cset.kind() == ConstraintKind::Sparsity) cfg.theta_true = *truth;

  IterateTrace trace;
  if (fit.method == "spd")
    trace = run_spd(model, cset, cfg);
  else if (fit.method == "batchpd")
    trace = run_batch_pd(model, cset, cfg);
  else if (fit.method == "psgd")
    trace = run_psgd(model, cset, cfg);
  else
    throw std::invalid_argument("fit: unknown --method '" + fit.method + "'");

  Manifest m;
  prob.fill_manifest(m);
  m.put("subcommand", std::string("fit"));
  m.put("method", fit.method);
  m.put("data", fit.data_path.empty() ? std::string("<generated>") : fit.data_path);
  m.put("rho1", fit.rho1);
  m.put("gamma", fit.gamma);
  m.put("alpha1", fit.alpha1);
  m.put("alpha_decay", fit.alpha_decay);
  m.put("b", cfg.batch_size);
  m.put("kmax", fit.kmax);
  m.put("eps", fit.eps);
  m.put("seed", common.seed);
  m.put("trace_every", fit.trace_every);
  m.put("check_every", fit.check_every);
  m.put("theta_star", std::string(reference_source_name(cfg.theta_star_source)));
  m.put("ref_rho1", fit.ref_rho1);
  m.put("ref_kmax", fit.ref_kmax);
  m.put("timing", fit.timing);

  const fs::path dir = common.resolve_dir("fit", m);
  trace.to_csv(dir / "trace.csv");
  write_vector_csv(dir / "theta_hat.csv", "theta_hat", trace.theta_hat);
  write_text_file(dir / "manifest.txt", m.text());
  std::printf("%s\n", (dir / "trace.csv").c_str());
  return kExitOk;
}

struct GridArgs {
  std::vector<std::string> gammas{"1"};
  std::vector<std::string> rho1s{"0.1"};
  std::vector<std::string> alpha1s{"0.001", "0.01", "0.1", "1", "10"};
  int replicates = 10;
  Index kmax = 2000;
  Index b = 0;
  Index trace_every = 1;
  bool shared_seed = true;
  int jobs = 1;
  double ref_rho1 = 1.0;
  Index ref_kmax = 100000;

  SweepSpec to_spec(const CommonArgs& common, const ProblemArgs& prob) const {
    SweepSpec spec;
    spec.gen = prob.gen_spec(0);
    spec.gammas = parse_rational_list(gammas);
    spec.rho1s = parse_rational_list(rho1s);
    spec.alpha1s = parse_rational_list(alpha1s);
    spec.replicates = replicates;
    spec.iterations = kmax;
    spec.batch_size = b;
    spec.trace_every = trace_every;
    spec.shared_seed = shared_seed;
    spec.seed = common.seed;
    spec.jobs = jobs;
    spec.ref_rho1 = ref_rho1;
    spec.ref_iterations = ref_kmax;
    return spec;
  }

  void fill_manifest(Manifest& m, const SweepSpec& spec) const {
    m.put_list("gammas", spec.gammas);
    m.put_list("rho1s", spec.rho1s);
    m.put_list("alpha1s", spec.alpha1s);
    m.put("replicates", static_cast<Index>(spec.replicates));
    m.put("kmax", spec.iterations);
    m.put("b", spec.effective_batch());
    m.put("trace_every", spec.trace_every);
    m.put("shared_seed", spec.shared_seed);
    m.put("jobs", static_cast<Index>(spec.jobs));
    m.put("ref_rho1", spec.ref_rho1);
    m.put("ref_kmax", spec.ref_iterations);
  }
};

int run_sweep_cmd(const CommonArgs& common, const ProblemArgs& prob, const GridArgs& grid) {
  SweepSpec spec = grid.to_spec(common, prob);
  const SweepResult result = run_sweep(spec);

  Manifest m;
  prob.fill_manifest(m);
  m.put("subcommand", std::string("sweep"));
  m.put("seed", common.seed);
  grid.fill_manifest(m, spec);

  const fs::path dir = common.resolve_dir("sweep", m);
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& cell = result.cells[i];
    std::ostringstream body;
    body << "k,rho,mean_param_err,mean_obj_err\n";
    for (std::size_t j = 0; j < cell.k.size(); ++j)
      body << cell.k[j] << ',' << format_double(cell.rate[j]) << ','
           << format_double(cell.mean_param_err[j]) << ','
           << format_double(cell.mean_obj_err[j]) << '\n';
    const std::string name =
        "cell" + std::to_string(i) + "_g" + short_num(cell.gamma) + "_rho" + short_num(cell.rho1) + ".csv";
    write_text_file(dir / name, body.str());
  }
  write_text_file(dir / "summary.csv", summary_csv(sweep_rows(spec, result)));
  write_text_file(dir / "manifest.txt", m.text());
  std::printf("%s\n", (dir / "summary.csv").c_str());
  return kExitOk;
}

int run_compare_cmd(const CommonArgs& common, const ProblemArgs& prob, const GridArgs& grid) {
  SweepSpec spec = grid.to_spec(common, prob);
  const std::vector<CompareRow> rows = compare_table(spec);

  Manifest m;
  prob.fill_manifest(m);
  m.put("subcommand", std::string("compare"));
  m.put("seed", common.seed);
  grid.fill_manifest(m, spec);

  const fs::path dir = common.resolve_dir("compare", m);
  write_text_file(dir / "summary.csv", summary_csv(rows));
  write_text_file(dir / "manifest.txt", m.text());
  std::printf("%s\n", (dir / "summary.csv").c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained estimation via stochastic proximal distance iterations"};
  app.require_subcommand(1);

  CommonArgs common;
  ProblemArgs prob;
  FitArgs fit;
  GridArgs grid;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", common.out, "Output root directory")->capture_default_str();
    cmd->add_option("--tag", common.tag, "Run directory name (default: config hash)");
    cmd->add_option("--seed", common.seed, "RNG seed; fixes every random draw")
        ->capture_default_str();
  };

  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset CSV");
  gen->add_option("--family", prob.family, "Loss family: linear, logistic, huber, matrix")
      ->required();
  prob.add_size_flags(gen);
  prob.add_structure_flags(gen);
  add_common(gen);

  CLI::App* fit_cmd = app.add_subcommand("fit", "Run one solver on one dataset");
  fit_cmd->add_option("--family", prob.family, "Loss family: linear, logistic, huber, matrix")
      ->required();
  fit_cmd->add_option("--method", fit.method, "Solver: spd, batchpd, psgd")
      ->check(CLI::IsMember({"spd", "batchpd", "psgd"}))
      ->capture_default_str();
  fit_cmd->add_option("--data", fit.data_path,
                      "Dataset CSV (response in the last column); omit to generate");
  prob.add_size_flags(fit_cmd);
  prob.add_structure_flags(fit_cmd);
  fit_cmd->add_option("--rho1", fit.rho1, "Initial penalty rho_1")->capture_default_str();
  fit_cmd->add_option("--gamma", fit.gamma, "Penalty exponent in rho_k = rho1 * k^gamma")
      ->capture_default_str();
  fit_cmd->add_option("--alpha1", fit.alpha1, "Initial step for psgd")->capture_default_str();
  fit_cmd->add_option("--alpha-decay", fit.alpha_decay, "Step decay exponent for psgd")
      ->capture_default_str();
  fit_cmd->add_option("--b", fit.b, "Batch size (0: 5% of n)")->capture_default_str();
  fit_cmd->add_option("--kmax", fit.kmax, "Iteration cap")->capture_default_str();
  fit_cmd->add_option("--eps", fit.eps, "Stop tolerance on the full objective")
      ->capture_default_str();
  fit_cmd->add_option("--trace-every", fit.trace_every, "Trace cadence")->capture_default_str();
  fit_cmd->add_option("--check-every", fit.check_every, "Stop-rule cadence")
      ->capture_default_str();
  fit_cmd->add_option("--theta-star", fit.theta_star_mode,
                      "Error reference: auto, batch, truth, none")
      ->check(CLI::IsMember({"auto", "batch", "truth", "none"}))
      ->capture_default_str();
  fit_cmd->add_option("--ref-rho1", fit.ref_rho1, "rho1 for the batch reference solve")
      ->capture_default_str();
  fit_cmd->add_option("--ref-kmax", fit.ref_kmax, "Iteration cap for the batch reference solve")
      ->capture_default_str();
  fit_cmd->add_flag("--timing", fit.timing,
                    "Record wall time in traces (breaks byte-reproducibility)");
  add_common(fit_cmd);

  auto add_grid = [&](CLI::App* cmd) {
    cmd->add_option("--gammas", grid.gammas, "Penalty exponents (accepts fractions like 2/3)")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--rho1s", grid.rho1s, "Initial penalties")->delimiter(',')->capture_default_str();
    cmd->add_option("--alpha1s", grid.alpha1s, "Baseline step grid (compare tuning)")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--R", grid.replicates, "Replicates per cell")->capture_default_str();
    cmd->add_option("--kmax", grid.kmax, "Iteration budget per run")->capture_default_str();
    cmd->add_option("--b", grid.b, "Batch size (0: 5% of n)")->capture_default_str();
    cmd->add_option("--trace-every", grid.trace_every, "Trace cadence")->capture_default_str();
    cmd->add_flag("--shared-seed,!--no-shared-seed", grid.shared_seed,
                  "Reuse the subsampling stream across gamma cells")
        ->capture_default_str();
    cmd->add_option("--jobs", grid.jobs, "Concurrent cells/replicates")->capture_default_str();
    cmd->add_option("--ref-rho1", grid.ref_rho1, "rho1 for batch reference solves")
        ->capture_default_str();
    cmd->add_option("--ref-kmax", grid.ref_kmax, "Iteration cap for batch reference solves")
        ->capture_default_str();
    cmd->add_option("--family", prob.family, "Loss family: linear, logistic, huber, matrix")
        ->required();
    prob.add_size_flags(cmd);
    prob.add_structure_flags(cmd);
    add_common(cmd);
  };

  CLI::App* sweep = app.add_subcommand("sweep", "Replicated gamma/rho1 grid study");
  add_grid(sweep);
  CLI::App* compare = app.add_subcommand("compare", "Proximal method vs tuned projected SGD");
  add_grid(compare);

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return run_gen(common, prob);
    if (fit_cmd->parsed()) return run_fit(common, prob, fit);
    if (sweep->parsed()) return run_sweep_cmd(common, prob, grid);
    if (compare->parsed()) return run_compare_cmd(common, prob, grid);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const FileOpenError& e) {
    std::fprintf(stderr, "proxdist: %s\n", e.what());
    return kExitMissingFile;
  } catch (const CsvFormatError& e) {
    std::fprintf(stderr, "proxdist: %s\n", e.what());
    return kExitBadCsv;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "proxdist: %s\n", e.what());
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "proxdist: %s\n", e.what());
    return kExitFailure;
  }
}
