#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "proxdist/constraints.hpp"
#include "proxdist/models.hpp"
#include "proxdist/prox.hpp"

namespace proxdist {

/// Increasing penalty sequence rho_k = rho1 * k^gamma. gamma = 0 is accepted
/// by the batch driver only and means a constant penalty.
struct PenaltySchedule {
  double rho1 = 1.0;
  double gamma = 1.0;

  double at(Index k) const { return rho1 * std::pow(static_cast<double>(k), gamma); }
  void validate(bool allow_constant) const;
};

/// Baseline step sequence alpha_k = alpha1 / k^decay.
struct StepSchedule {
  double alpha1 = 0.1;
  double decay = 1.0;

  double at(Index k) const { return alpha1 / std::pow(static_cast<double>(k), decay); }
  void validate() const;
};

enum class ReferenceSource { None, BatchSolve, Truth };

const char* reference_source_name(ReferenceSource s);

struct SolverConfig {
  PenaltySchedule penalty;
  StepSchedule step;             // used by the projected-SGD driver
  Index batch_size = 1;
  Index max_iterations = 1000;   // K_max
  double tolerance = 1e-9;       // epsilon in the stop rule
  std::uint64_t seed = 0;
  Index trace_every = 1;
  Index objective_check_every = 1;  // thin the full-objective stop rule
  Vector theta0;                    // empty: zeros
  std::optional<Vector> theta_star; // reference point for error columns
  ReferenceSource theta_star_source = ReferenceSource::None;
  std::optional<Vector> theta_true; // known support for the discovery rate
  ProxControls prox;
  bool record_timing = false;  // keep wall_ms at 0 so trace files reproduce exactly
  bool warnings = true;

  /// Called after every iteration with (k, raw iterate, projected iterate).
  std::function<void(Index, const Vector&, const Vector&)> iterate_observer;

  void validate(Index n, Index dim) const;
};

struct TraceRow {
  Index k;
  double rate;       // rho_k, or alpha_k for projected SGD
  double param_err;  // ||P_C(theta_k) - theta*||^2, nan without a reference
  double obj_err;    // F[P_C(theta_k)] - F(theta*), nan without a reference
  double wall_ms;
};

/// Per-iteration log plus the run summary. CSV layout:
/// header `k,rho,param_err,obj_err,wall_ms`, one row per logged iteration,
/// then a final line `#final,<iterations>,<converged 0/1>,<tdr>`.
struct IterateTrace {
  std::vector<TraceRow> rows;
  Vector theta_hat;
  Index iterations = 0;
  bool converged = false;
  bool diverged = false;
  double tdr = std::nan("");
  ReferenceSource ref_source = ReferenceSource::None;
  double final_objective = std::nan("");

  std::string to_csv_string() const;
  void to_csv(const std::filesystem::path& path) const;
};

/// Stochastic proximal distance iteration: project the previous iterate,
/// then evaluate the minibatch prox at penalty rho_k. The stop rule compares
/// the full objective at consecutive projected iterates; the returned
/// estimate is always projected.
IterateTrace run_spd(const Model& model, const ConstraintSet& c, const SolverConfig& config);

/// Full-batch counterpart; accepts gamma = 0 for a constant penalty, in
/// which case the penalized objective descends monotonically.
IterateTrace run_batch_pd(const Model& model, const ConstraintSet& c, const SolverConfig& config);

/// Projected SGD: explicit minibatch gradient step followed by projection.
/// Aborts with the diverged flag when the iterate norm passes 1e10.
IterateTrace run_psgd(const Model& model, const ConstraintSet& c, const SolverConfig& config);

/// |support(estimate) ∩ support(truth)| / |support(truth)|.
double true_discovery_rate(const Vector& estimate, const Vector& truth);

}  // namespace proxdist
