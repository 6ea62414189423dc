#include "proxdist/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "proxdist/csv.hpp"
#include "proxdist/rng.hpp"

namespace proxdist {

namespace {

constexpr std::uint64_t kDataStream = 0x1a;
constexpr std::uint64_t kSolverStream = 0x2b;

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct Replicate {
  Model model;
  Vector theta_true;
  std::optional<Vector> theta_star;
  ReferenceSource source = ReferenceSource::None;
  std::uint64_t solver_seed = 0;
};

// Dataset, truth, reference solution and solver stream for replicate r.
Replicate make_replicate(const SweepSpec& spec, int r) {
  GenSpec gen = spec.gen;
  gen.seed = splitmix64(spec.seed ^ splitmix64(kDataStream + static_cast<std::uint64_t>(r)));
  Vector truth = gen_theta_true(gen);
  Model model = make_model(gen, gen_dataset(gen, truth));

  const ConstraintSet c = spec.constraint();
  std::optional<Vector> star;
  ReferenceSource source;
  if (c.is_convex()) {
    SolverConfig ref;
    ref.penalty = {spec.ref_rho1, 1.0};
    ref.batch_size = model.data().n();
    ref.max_iterations = spec.ref_iterations;
    ref.tolerance = spec.ref_tolerance;
    ref.trace_every = spec.ref_iterations;  // summary only
    ref.prox = spec.prox;
    ref.warnings = false;
    star = run_batch_pd(model, c, ref).theta_hat;
    source = ReferenceSource::BatchSolve;
  } else {
    star = truth;
    source = ReferenceSource::Truth;
  }

  Replicate rep{std::move(model), std::move(truth), std::move(star), source,
                splitmix64(spec.seed ^ splitmix64(kSolverStream + static_cast<std::uint64_t>(r)))};
  return rep;
}

SolverConfig base_config(const SweepSpec& spec, const Replicate& rep) {
  SolverConfig cfg;
  cfg.batch_size = spec.effective_batch();
  cfg.max_iterations = spec.iterations;
  cfg.tolerance = spec.tolerance;
  cfg.trace_every = spec.trace_every;
  cfg.seed = rep.solver_seed;
  cfg.theta_star = rep.theta_star;
  cfg.theta_star_source = rep.source;
  if (spec.constraint().kind() == ConstraintKind::Sparsity) cfg.theta_true = rep.theta_true;
  cfg.prox = spec.prox;
  cfg.warnings = false;
  return cfg;
}

AggregatedCell aggregate(double gamma, double rho1, const std::vector<IterateTrace>& traces) {
  AggregatedCell cell;
  cell.gamma = gamma;
  cell.rho1 = rho1;

  int divergences = 0;
  std::size_t common = std::string::npos;
  for (const auto& t : traces) {
    if (t.diverged) ++divergences;
    common = std::min(common, t.rows.size());
  }
  cell.diverged_frac = traces.empty() ? 0.0 : double(divergences) / double(traces.size());

  const double live = static_cast<double>(traces.size() - divergences);
  if (common != std::string::npos && common > 0 && live > 0) {
    cell.k.resize(common);
    cell.rate.assign(common, 0.0);
    cell.mean_param_err.assign(common, 0.0);
    cell.mean_obj_err.assign(common, 0.0);
    for (std::size_t i = 0; i < common; ++i) cell.k[i] = traces.front().rows[i].k;
    for (const auto& t : traces) {
      if (t.diverged) continue;
      for (std::size_t i = 0; i < common; ++i) {
        cell.rate[i] = t.rows[i].rate;
        cell.mean_param_err[i] += t.rows[i].param_err;
        cell.mean_obj_err[i] += t.rows[i].obj_err;
      }
    }
    for (std::size_t i = 0; i < common; ++i) {
      cell.mean_param_err[i] /= live;
      cell.mean_obj_err[i] /= live;
    }
  }
  for (const auto& t : traces) {
    if (t.diverged || t.rows.empty()) continue;
    cell.terminal_param_err.push_back(t.rows.back().param_err);
    cell.terminal_obj_err.push_back(t.rows.back().obj_err);
    if (!std::isnan(t.tdr)) cell.tdrs.push_back(t.tdr);
  }
  return cell;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

ConstraintSet SweepSpec::constraint() const {
  switch (gen.flavor) {
    case TruthFlavor::UnitBallTruth:
      return ConstraintSet::unit_ball(gen.dim());
    case TruthFlavor::SparseTruth:
      return ConstraintSet::sparsity(gen.dim(), gen.sparsity);
    case TruthFlavor::LowRankTruth:
      return ConstraintSet::rank(gen.p, gen.q, gen.rank);
  }
  throw std::logic_error("SweepSpec: unknown flavor");
}

Index SweepSpec::effective_batch() const {
  if (batch_size > 0) return batch_size;
  return std::max<Index>(1, gen.n / 20);
}

void SweepSpec::validate() const {
  gen.validate();
  if (gammas.empty() || rho1s.empty())
    throw std::invalid_argument("SweepSpec: gamma and rho1 grids must be non-empty");
  if (replicates < 1) throw std::invalid_argument("SweepSpec: replicates must be >= 1");
  if (iterations < 1) throw std::invalid_argument("SweepSpec: iteration budget must be >= 1");
  if (effective_batch() > gen.n)
    throw std::invalid_argument("SweepSpec: batch size exceeds the sample size");
}

double AggregatedCell::mean_terminal_param_err() const { return mean_of(terminal_param_err); }
double AggregatedCell::se_terminal_param_err() const { return se_of(terminal_param_err); }
double AggregatedCell::mean_terminal_obj_err() const { return mean_of(terminal_obj_err); }
double AggregatedCell::se_terminal_obj_err() const { return se_of(terminal_obj_err); }
double AggregatedCell::mean_tdr() const {
  return tdrs.empty() ? std::nan("") : mean_of(tdrs);
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  const ConstraintSet c = spec.constraint();
  const int R = spec.replicates;

  std::vector<std::unique_ptr<Replicate>> reps(static_cast<std::size_t>(R));
  parallel_for(R, spec.jobs, [&](int r) {
    reps[static_cast<std::size_t>(r)] = std::make_unique<Replicate>(make_replicate(spec, r));
  });

  struct Cell {
    double gamma, rho1;
  };
  std::vector<Cell> cells;
  for (double g : spec.gammas)
    for (double r1 : spec.rho1s) cells.push_back({g, r1});

  std::vector<std::vector<IterateTrace>> traces(cells.size(),
                                                std::vector<IterateTrace>(static_cast<std::size_t>(R)));
  const int tasks = static_cast<int>(cells.size()) * R;
  parallel_for(tasks, spec.jobs, [&](int t) {
    const int ci = t / R;
    const int r = t % R;
    const Replicate& rep = *reps[static_cast<std::size_t>(r)];
    SolverConfig cfg = base_config(spec, rep);
    cfg.penalty = {cells[static_cast<std::size_t>(ci)].rho1, cells[static_cast<std::size_t>(ci)].gamma};
    if (!spec.shared_seed)
      cfg.seed = splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(ci) + 0x77));
    traces[static_cast<std::size_t>(ci)][static_cast<std::size_t>(r)] =
        run_spd(rep.model, c, cfg);
  });

  SweepResult out;
  out.cells.reserve(cells.size());
  for (std::size_t ci = 0; ci < cells.size(); ++ci)
    out.cells.push_back(aggregate(cells[ci].gamma, cells[ci].rho1, traces[ci]));
  return out;
}

RateFit fit_rate(const std::vector<Index>& k, const std::vector<double>& err, Index k_lo,
                 Index k_hi, int grid_points) {
  if (k.size() != err.size() || k.empty())
    throw std::invalid_argument("fit_rate: mismatched or empty trace");
  if (k_lo >= k_hi) throw std::invalid_argument("fit_rate: empty window");
  if (grid_points < 2) throw std::invalid_argument("fit_rate: need at least two grid points");

  // Pick log-spaced targets inside the window and snap each to the nearest
  // logged iteration.
  std::vector<std::size_t> chosen;
  const double llo = std::log(static_cast<double>(k_lo));
  const double lhi = std::log(static_cast<double>(k_hi));
  for (int g = 0; g < grid_points; ++g) {
    const double target =
        std::exp(llo + (lhi - llo) * static_cast<double>(g) / static_cast<double>(grid_points - 1));
    auto it = std::lower_bound(k.begin(), k.end(), static_cast<Index>(std::llround(target)));
    if (it == k.end()) --it;
    if (it != k.begin()) {
      auto prev = std::prev(it);
      if (std::abs(static_cast<double>(*prev) - target) <=
          std::abs(static_cast<double>(*it) - target))
        it = prev;
    }
    const std::size_t idx = static_cast<std::size_t>(it - k.begin());
    if (k[idx] < k_lo || k[idx] > k_hi) continue;
    if (chosen.empty() || chosen.back() != idx) chosen.push_back(idx);
  }
  if (chosen.size() < 2) throw std::invalid_argument("fit_rate: window holds fewer than two points");

  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t idx : chosen) {
    if (!(err[idx] > 0.0))
      throw std::invalid_argument("fit_rate: nonpositive error inside the window");
    const double x = std::log(static_cast<double>(k[idx]));
    const double y = std::log(err[idx]);
    sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
  }
  const double m = static_cast<double>(chosen.size());
  const double sxx_c = sxx - sx * sx / m;
  const double sxy_c = sxy - sx * sy / m;
  const double syy_c = syy - sy * sy / m;
  RateFit fit;
  fit.slope = sxy_c / sxx_c;
  fit.intercept = (sy - fit.slope * sx) / m;
  fit.r_squared = syy_c > 0.0 ? (sxy_c * sxy_c) / (sxx_c * syy_c) : 1.0;
  fit.k_lo = k_lo;
  fit.k_hi = k_hi;
  return fit;
}

RateFit fit_rate_tail(const std::vector<Index>& k, const std::vector<double>& err,
                      double tail_fraction, int grid_points) {
  if (k.empty()) throw std::invalid_argument("fit_rate: empty trace");
  const Index hi = k.back();
  const Index lo = std::max<Index>(1, static_cast<Index>(std::llround(
                                           static_cast<double>(hi) * (1.0 - tail_fraction))));
  return fit_rate(k, err, lo, hi, grid_points);
}

std::string constraint_label(const ConstraintSet& c) {
  switch (c.kind()) {
    case ConstraintKind::Unconstrained: return "none";
    case ConstraintKind::UnitBall: return "ball";
    case ConstraintKind::Sparsity: return "sparsity=" + std::to_string(c.sparsity_level());
    case ConstraintKind::Rank: return "rank=" + std::to_string(c.max_rank());
  }
  return "?";
}

std::vector<CompareRow> compare_table(const SweepSpec& spec) {
  spec.validate();
  if (spec.alpha1s.empty())
    throw std::invalid_argument("compare_table: alpha1 grid must be non-empty");
  const ConstraintSet c = spec.constraint();
  const int R = spec.replicates;

  std::vector<std::unique_ptr<Replicate>> reps(static_cast<std::size_t>(R));
  parallel_for(R, spec.jobs, [&](int r) {
    reps[static_cast<std::size_t>(r)] = std::make_unique<Replicate>(make_replicate(spec, r));
  });

  const std::string family = family_name(spec.gen.family);
  const std::string label = constraint_label(c);

  // Proximal method: matched linear rate rho_k = k * rho1.
  std::vector<IterateTrace> spd_traces(static_cast<std::size_t>(R));
  parallel_for(R, spec.jobs, [&](int r) {
    SolverConfig cfg = base_config(spec, *reps[static_cast<std::size_t>(r)]);
    cfg.penalty = {spec.rho1s.front(), 1.0};
    spd_traces[static_cast<std::size_t>(r)] = run_spd(reps[static_cast<std::size_t>(r)]->model, c, cfg);
  });

  auto row_from = [&](const std::string& method, double rate1,
                      const std::vector<IterateTrace>& traces) {
    CompareRow row;
    row.family = family;
    row.constraint = label;
    row.method = method;
    row.gamma = 1.0;
    row.rate1 = rate1;
    std::vector<double> errs, tdrs;
    int divergences = 0;
    for (const auto& t : traces) {
      if (t.diverged) {
        ++divergences;
        continue;
      }
      errs.push_back(t.rows.empty() ? std::nan("") : t.rows.back().param_err);
      if (!std::isnan(t.tdr)) tdrs.push_back(t.tdr);
    }
    row.mean_err = mean_of(errs);
    row.se_err = se_of(errs);
    row.tdr = tdrs.empty() ? std::nan("") : mean_of(tdrs);
    row.diverged_frac = traces.empty() ? 0.0 : double(divergences) / double(traces.size());
    return row;
  };

  std::vector<CompareRow> rows;
  rows.push_back(row_from("spd", spec.rho1s.front(), spd_traces));

  // Baseline: alpha_k = alpha1 / k, alpha1 tuned per cell.
  std::optional<CompareRow> best;
  for (double alpha1 : spec.alpha1s) {
    std::vector<IterateTrace> traces(static_cast<std::size_t>(R));
    parallel_for(R, spec.jobs, [&](int r) {
      SolverConfig cfg = base_config(spec, *reps[static_cast<std::size_t>(r)]);
      cfg.step = {alpha1, 1.0};
      traces[static_cast<std::size_t>(r)] = run_psgd(reps[static_cast<std::size_t>(r)]->model, c, cfg);
    });
    CompareRow row = row_from("psgd", alpha1, traces);
    const bool better =
        !best || std::tie(row.diverged_frac, row.mean_err) <
                     std::tie(best->diverged_frac, best->mean_err);
    if (better) best = row;
  }
  rows.push_back(*best);
  return rows;
}

std::vector<CompareRow> sweep_rows(const SweepSpec& spec, const SweepResult& result) {
  const ConstraintSet c = spec.constraint();
  std::vector<CompareRow> rows;
  rows.reserve(result.cells.size());
  for (const auto& cell : result.cells) {
    CompareRow row;
    row.family = family_name(spec.gen.family);
    row.constraint = constraint_label(c);
    row.method = "spd";
    row.gamma = cell.gamma;
    row.rate1 = cell.rho1;
    row.mean_err = cell.mean_terminal_param_err();
    row.se_err = cell.se_terminal_param_err();
    row.tdr = cell.mean_tdr();
    row.diverged_frac = cell.diverged_frac;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string summary_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream out;
  out << "family,constraint,method,gamma,rho1,mean_err,se_err,tdr,diverged_frac\n";
  for (const auto& r : rows) {
    out << r.family << ',' << r.constraint << ',' << r.method << ',' << format_double(r.gamma)
        << ',' << format_double(r.rate1) << ',' << format_double(r.mean_err) << ','
        << format_double(r.se_err) << ',' << format_double(r.tdr) << ','
        << format_double(r.diverged_frac) << '\n';
  }
  return out.str();
}

}  // namespace proxdist
