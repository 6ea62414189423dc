#pragma once

#include <cstdint>

#include "proxdist/models.hpp"
#include "proxdist/types.hpp"

namespace proxdist {

enum class TruthFlavor { UnitBallTruth, SparseTruth, LowRankTruth };

/// Synthetic-study recipe: family, sizes, truth structure, contamination.
struct GenSpec {
  Family family = Family::Linear;
  Index n = 100;
  Index p = 10;
  Index q = 0;  // matrix column count; > 0 for the matrix family
  TruthFlavor flavor = TruthFlavor::UnitBallTruth;
  Index sparsity = 5;
  Index rank = 1;
  double outlier_fraction = 0.1;  // Huber contamination share
  double huber_delta = 2.0;
  std::uint64_t seed = 0;

  Index dim() const { return family == Family::Matrix ? p * q : p; }
  void validate() const;
};

/// True coefficients. Unit-ball flavor draws entries from the two-sided band
/// (-7,-4) U (4,7) and rescales to norm exactly 2 (deliberately infeasible
/// for the unit ball). Sparse flavor places s such draws on a random support.
/// Low-rank flavor is the deterministic 0/1 pattern from low_rank_truth().
Vector gen_theta_true(const GenSpec& spec);

/// Rank-r matrix of 128 unit entries (vectorized column-major). Rows carry
/// prefix-of-ones patterns with exactly r distinct prefix lengths, so the
/// rank is r and the squared Frobenius norm is the number of ones.
Vector low_rank_truth(Index rows, Index cols, Index rank, Index total_ones = 128);

/// Draw covariates and responses for the spec's family:
/// linear x_ij ~ N(0,1), y | x ~ N(x'theta, 1); logistic x_ij ~ 0.3 N(0,1),
/// y ~ Bernoulli(sigmoid(x'theta)); Huber adds band noise from (5,10) with
/// random sign to round(fraction*n) distinct rows; matrix entries N(0,1)
/// with Gaussian response noise.
Dataset gen_dataset(const GenSpec& spec, const Vector& theta_true);

/// Model wrapper matching the spec's family.
Model make_model(const GenSpec& spec, Dataset data);

}  // namespace proxdist
