#pragma once

#include <string>
#include <vector>

#include "proxdist/datagen.hpp"
#include "proxdist/solver.hpp"

namespace proxdist {

/// Grid study description. Replicate r draws its own dataset; the solver's
/// subsampling stream depends only on (seed, r) when shared_seed is set, so
/// every gamma/rho1 cell sees identical batch index sequences.
struct SweepSpec {
  GenSpec gen;  // sizes, family, truth flavor; gen.seed is ignored here
  std::vector<double> gammas{1.0};
  std::vector<double> rho1s{0.1};
  std::vector<double> alpha1s{1e-3, 1e-2, 1e-1, 1.0, 10.0};  // baseline tuning grid
  int replicates = 10;
  Index iterations = 2000;
  Index batch_size = 0;  // 0: 5% of n (at least 1)
  double tolerance = 1e-16;
  Index trace_every = 1;
  bool shared_seed = true;
  std::uint64_t seed = 0;
  int jobs = 1;
  ProxControls prox;

  // Reference-solution recipe (batch solve, convex constraints).
  double ref_rho1 = 1.0;
  Index ref_iterations = 100000;
  double ref_tolerance = 1e-12;

  ConstraintSet constraint() const;
  Index effective_batch() const;
  void validate() const;
};

/// Pointwise replicate average of one grid cell's traces, plus terminal
/// per-replicate errors for dispersion estimates.
struct AggregatedCell {
  double gamma = 1.0;
  double rho1 = 0.1;
  std::vector<Index> k;
  std::vector<double> rate;
  std::vector<double> mean_param_err;
  std::vector<double> mean_obj_err;
  std::vector<double> terminal_param_err;  // one entry per finished replicate
  std::vector<double> terminal_obj_err;
  std::vector<double> tdrs;
  double diverged_frac = 0.0;

  double mean_terminal_param_err() const;
  double se_terminal_param_err() const;
  double mean_terminal_obj_err() const;
  double se_terminal_obj_err() const;
  double mean_tdr() const;
};

struct SweepResult {
  std::vector<AggregatedCell> cells;
};

SweepResult run_sweep(const SweepSpec& spec);

/// Least-squares slope of log(err) against log(k) over a log-spaced grid of
/// points inside [k_lo, k_hi].
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  Index k_lo = 0;
  Index k_hi = 0;
};

RateFit fit_rate(const std::vector<Index>& k, const std::vector<double>& err, Index k_lo,
                 Index k_hi, int grid_points = 50);

/// Window defaulting to the last half of the logged iterations.
RateFit fit_rate_tail(const std::vector<Index>& k, const std::vector<double>& err,
                      double tail_fraction = 0.5, int grid_points = 50);

/// One line of the method-comparison summary.
struct CompareRow {
  std::string family;
  std::string constraint;
  std::string method;  // "spd" or "psgd"
  double gamma = 1.0;
  double rate1 = 0.0;  // rho1 for spd, alpha1 for psgd
  double mean_err = 0.0;
  double se_err = 0.0;
  double tdr = std::nan("");
  double diverged_frac = 0.0;
};

/// Runs the proximal method at gamma=1 with rho1s.front() and projected SGD
/// with alpha_k = alpha1/k tuned over alpha1s (best terminal error kept),
/// on identical datasets and replicate streams.
std::vector<CompareRow> compare_table(const SweepSpec& spec);

/// Rows for a finished sweep, one per cell (method "spd").
std::vector<CompareRow> sweep_rows(const SweepSpec& spec, const SweepResult& result);

/// `family,constraint,method,gamma,rho1,mean_err,se_err,tdr,diverged_frac`
std::string summary_csv(const std::vector<CompareRow>& rows);

std::string constraint_label(const ConstraintSet& c);

}  // namespace proxdist
