#include "proxdist/solver.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "proxdist/csv.hpp"
#include "proxdist/rng.hpp"

namespace proxdist {

namespace {

constexpr double kDivergenceNorm = 1e10;

enum class Method { Spd, BatchPd, Psgd };

struct Clock {
  bool enabled;
  std::chrono::steady_clock::time_point start;

  explicit Clock(bool on) : enabled(on), start(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    if (!enabled) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

void warn_gamma(const SolverConfig& cfg) {
  if (!cfg.warnings) return;
  const double g = cfg.penalty.gamma;
  if (g <= 0.5 || g > 1.0)
    std::fprintf(stderr, "proxdist: gamma=%g lies outside the guaranteed band (0.5, 1]\n", g);
}

IterateTrace drive(const Model& model, const ConstraintSet& c, const SolverConfig& cfg,
                   Method method) {
  const Index n = model.data().n();
  cfg.validate(n, model.dim());
  if (c.dim() != model.dim())
    throw std::invalid_argument("solver: constraint and model dimensions differ");

  const bool stochastic = method == Method::Spd;
  const Index b = stochastic ? cfg.batch_size : n;

  RngStream rng(cfg.seed);
  Clock clock(cfg.record_timing);

  Vector theta = cfg.theta0.size() > 0 ? cfg.theta0 : Vector::Zero(model.dim());
  Vector proj = project(theta, c);

  const Batch whole = full_batch(n);
  double checked_obj = loss(model, proj, whole);
  double obj_at_proj = checked_obj;

  double ref_obj = std::nan("");
  if (cfg.theta_star) ref_obj = loss(model, *cfg.theta_star, whole);

  IterateTrace trace;
  trace.ref_source = cfg.theta_star ? cfg.theta_star_source : ReferenceSource::None;
  trace.rows.reserve(static_cast<std::size_t>(
      std::min<Index>(cfg.max_iterations / std::max<Index>(cfg.trace_every, 1) + 2, 1 << 20)));

  Index k = 0;
  bool converged = false;
  bool diverged = false;
  Batch batch = whole;

  while (k < cfg.max_iterations) {
    ++k;
    const double rate = method == Method::Psgd ? cfg.step.at(k) : cfg.penalty.at(k);

    if (stochastic && b < n) batch.idx = rng.sample_without_replacement(n, b);
    // b == n: keep the whole index set so the path matches the batch driver.

    if (method == Method::Psgd) {
      theta = project(theta - rate * gradient(model, theta, batch), c);
      proj = theta;
      if (theta.norm() > kDivergenceNorm) diverged = true;
    } else {
      ProxProblem problem;
      problem.model = &model;
      problem.batch = batch;
      problem.anchor = proj;
      problem.rho = rate;
      problem.init = theta;
      problem.controls = cfg.prox;
      theta = solve_prox(problem).theta;
      proj = project(theta, c);
    }

    if (cfg.iterate_observer) cfg.iterate_observer(k, theta, proj);

    const bool check_now =
        diverged || k % cfg.objective_check_every == 0 || k == cfg.max_iterations;
    if (check_now) {
      obj_at_proj = loss(model, proj, whole);
      converged = std::abs(obj_at_proj - checked_obj) < cfg.tolerance;
      checked_obj = obj_at_proj;
    }

    const bool log_now = k % cfg.trace_every == 0 || k == cfg.max_iterations || converged || diverged;
    if (log_now) {
      TraceRow row;
      row.k = k;
      row.rate = rate;
      if (cfg.theta_star) {
        row.param_err = (proj - *cfg.theta_star).squaredNorm();
        row.obj_err = (check_now ? obj_at_proj : loss(model, proj, whole)) - ref_obj;
      } else {
        row.param_err = std::nan("");
        row.obj_err = std::nan("");
      }
      row.wall_ms = clock.elapsed_ms();
      trace.rows.push_back(row);
    }

    if (converged || diverged) break;
  }

  trace.theta_hat = proj;
  trace.iterations = k;
  trace.converged = converged;
  trace.diverged = diverged;
  trace.final_objective = loss(model, proj, whole);
  if (cfg.theta_true) trace.tdr = true_discovery_rate(proj, *cfg.theta_true);
  return trace;
}

}  // namespace

void PenaltySchedule::validate(bool allow_constant) const {
  if (!(rho1 > 0.0)) throw std::invalid_argument("PenaltySchedule: rho1 must be positive");
  if (gamma < 0.0 || (!allow_constant && gamma == 0.0))
    throw std::invalid_argument("PenaltySchedule: gamma must be positive");
}

void StepSchedule::validate() const {
  if (!(alpha1 > 0.0)) throw std::invalid_argument("StepSchedule: alpha1 must be positive");
  if (decay < 0.0) throw std::invalid_argument("StepSchedule: decay must be nonnegative");
}

const char* reference_source_name(ReferenceSource s) {
  switch (s) {
    case ReferenceSource::None: return "none";
    case ReferenceSource::BatchSolve: return "batch";
    case ReferenceSource::Truth: return "truth";
  }
  return "?";
}

void SolverConfig::validate(Index n, Index dim) const {
  if (!(tolerance > 0.0)) throw std::invalid_argument("SolverConfig: tolerance must be positive");
  if (max_iterations < 1) throw std::invalid_argument("SolverConfig: max_iterations must be >= 1");
  if (batch_size < 1 || batch_size > n)
    throw std::invalid_argument("SolverConfig: batch size must satisfy 1 <= b <= n");
  if (trace_every < 1) throw std::invalid_argument("SolverConfig: trace_every must be >= 1");
  if (objective_check_every < 1)
    throw std::invalid_argument("SolverConfig: objective_check_every must be >= 1");
  if (theta0.size() > 0 && theta0.size() != dim)
    throw std::invalid_argument("SolverConfig: theta0 dimension mismatch");
  if (theta_star && theta_star->size() != dim)
    throw std::invalid_argument("SolverConfig: theta_star dimension mismatch");
  if (theta_true && theta_true->size() != dim)
    throw std::invalid_argument("SolverConfig: theta_true dimension mismatch");
  prox.validate();
}

std::string IterateTrace::to_csv_string() const {
  std::ostringstream out;
  out << "k,rho,param_err,obj_err,wall_ms\n";
  for (const TraceRow& r : rows) {
    out << r.k << ',' << format_double(r.rate) << ',' << format_double(r.param_err) << ','
        << format_double(r.obj_err) << ',' << format_double(r.wall_ms) << '\n';
  }
  out << "#final," << iterations << ',' << (converged ? 1 : 0) << ',' << format_double(tdr)
      << '\n';
  return out.str();
}

void IterateTrace::to_csv(const std::filesystem::path& path) const {
  write_text_file(path, to_csv_string());
}

IterateTrace run_spd(const Model& model, const ConstraintSet& c, const SolverConfig& cfg) {
  cfg.penalty.validate(/*allow_constant=*/false);
  warn_gamma(cfg);
  return drive(model, c, cfg, Method::Spd);
}

IterateTrace run_batch_pd(const Model& model, const ConstraintSet& c, const SolverConfig& cfg) {
  cfg.penalty.validate(/*allow_constant=*/true);
  return drive(model, c, cfg, Method::BatchPd);
}

IterateTrace run_psgd(const Model& model, const ConstraintSet& c, const SolverConfig& cfg) {
  cfg.step.validate();
  return drive(model, c, cfg, Method::Psgd);
}

double true_discovery_rate(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("true_discovery_rate: dimension mismatch");
  Index truth_nnz = 0;
  Index recovered = 0;
  for (Index i = 0; i < truth.size(); ++i) {
    if (truth[i] != 0.0) {
      ++truth_nnz;
      if (estimate[i] != 0.0) ++recovered;
    }
  }
  if (truth_nnz == 0)
    throw std::invalid_argument("true_discovery_rate: truth has empty support");
  return static_cast<double>(recovered) / static_cast<double>(truth_nnz);
}

}  // namespace proxdist
