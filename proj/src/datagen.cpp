#include "proxdist/datagen.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxdist/rng.hpp"

namespace proxdist {

namespace {

// Substream labels so each generation phase has its own stream.
constexpr std::uint64_t kTruthStream = 1;
constexpr std::uint64_t kCovariateStream = 2;
constexpr std::uint64_t kResponseStream = 3;
constexpr std::uint64_t kOutlierStream = 4;

double band_draw(RngStream& rng, double lo, double hi) {
  const double mag = rng.uniform(lo, hi);
  return rng.uniform01() < 0.5 ? -mag : mag;
}

}  // namespace

void GenSpec::validate() const {
  if (n < 1 || p < 1) throw std::invalid_argument("GenSpec: n and p must be positive");
  if (family == Family::Matrix) {
    if (q < 1) throw std::invalid_argument("GenSpec: matrix family needs q >= 1");
  } else if (q > 0) {
    throw std::invalid_argument("GenSpec: q applies to the matrix family only");
  }
  if (flavor == TruthFlavor::SparseTruth && (sparsity < 1 || sparsity > dim()))
    throw std::invalid_argument("GenSpec: sparsity must satisfy 1 <= s <= p");
  if (flavor == TruthFlavor::LowRankTruth && family != Family::Matrix)
    throw std::invalid_argument("GenSpec: low-rank truth needs the matrix family");
  if (family == Family::Matrix && flavor != TruthFlavor::LowRankTruth)
    throw std::invalid_argument("GenSpec: matrix family pairs with low-rank truth");
  if (outlier_fraction < 0.0 || outlier_fraction > 1.0)
    throw std::invalid_argument("GenSpec: outlier fraction must lie in [0,1]");
  if (!(huber_delta > 0.0)) throw std::invalid_argument("GenSpec: huber delta must be positive");
  if (family == Family::Matrix && (rank < 1 || rank > std::min(p, q)))
    throw std::invalid_argument("GenSpec: rank must satisfy 1 <= r <= min(p,q)");
}

Vector low_rank_truth(Index rows, Index cols, Index rank, Index total_ones) {
  if (rank < 1 || rank > std::min(rows, cols))
    throw std::invalid_argument("low_rank_truth: rank out of range");
  if (total_ones > rows * cols)
    throw std::invalid_argument("low_rank_truth: too many ones for the grid");

  // Rows are prefixes of ones. Exactly `rank` distinct prefix lengths make
  // the row patterns linearly independent, so the rank is exact. Lengths
  // 1..rank-2 fill the bottom rows once each; the remaining budget is split
  // into m rows of length a plus one adjusting row of length b, all distinct.
  std::vector<std::pair<Index, Index>> groups;  // (prefix length, row count)
  bool found = false;
  if (rank == 1) {
    for (Index a = std::min(cols, total_ones); a >= 1 && !found; --a) {
      if (total_ones % a == 0 && total_ones / a <= rows) {
        groups.push_back({a, total_ones / a});
        found = true;
      }
    }
  } else {
    Index tail = 0;  // lengths rank-2, ..., 1
    for (Index l = 1; l <= rank - 2; ++l) tail += l;
    const Index head = total_ones - tail;
    for (Index a = cols; a >= rank && !found; --a) {
      for (Index b = a - 1; b >= rank - 1 && !found; --b) {
        if (head <= b) continue;
        if ((head - b) % a != 0) continue;
        const Index m = (head - b) / a;
        if (m < 1) continue;
        if (m + 1 + (rank - 2) > rows) continue;
        groups.push_back({a, m});
        groups.push_back({b, 1});
        for (Index l = rank - 2; l >= 1; --l) groups.push_back({l, 1});
        found = true;
      }
    }
  }
  if (!found)
    throw std::invalid_argument("low_rank_truth: no rank-" + std::to_string(rank) +
                                " placement of " + std::to_string(total_ones) + " ones fits " +
                                std::to_string(rows) + "x" + std::to_string(cols));

  Matrix theta = Matrix::Zero(rows, cols);
  Index row = 0;
  for (const auto& [len, count] : groups)
    for (Index c = 0; c < count; ++c, ++row) theta.row(row).head(len).setOnes();
  return Eigen::Map<const Vector>(theta.data(), rows * cols);
}

Vector gen_theta_true(const GenSpec& spec) {
  spec.validate();
  RngStream rng = RngStream::derive(spec.seed, kTruthStream);
  switch (spec.flavor) {
    case TruthFlavor::UnitBallTruth: {
      Vector theta(spec.dim());
      for (Index j = 0; j < theta.size(); ++j) theta[j] = band_draw(rng, 4.0, 7.0);
      theta *= 2.0 / theta.norm();
      return theta;
    }
    case TruthFlavor::SparseTruth: {
      Vector theta = Vector::Zero(spec.dim());
      const auto support = rng.sample_without_replacement(spec.dim(), spec.sparsity);
      for (Index j : support) theta[j] = band_draw(rng, 4.0, 7.0);
      return theta;
    }
    case TruthFlavor::LowRankTruth:
      return low_rank_truth(spec.p, spec.q, spec.rank);
  }
  throw std::logic_error("gen_theta_true: unknown flavor");
}

Dataset gen_dataset(const GenSpec& spec, const Vector& theta_true) {
  spec.validate();
  if (theta_true.size() != spec.dim())
    throw std::invalid_argument("gen_dataset: theta_true dimension mismatch");

  RngStream cov_rng = RngStream::derive(spec.seed, kCovariateStream);
  RngStream resp_rng = RngStream::derive(spec.seed, kResponseStream);

  const Index d = spec.dim();
  Matrix x(spec.n, d);
  const double cov_scale = spec.family == Family::Logistic ? 0.3 : 1.0;
  for (Index i = 0; i < spec.n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = cov_scale * cov_rng.normal();

  Vector y(spec.n);
  switch (spec.family) {
    case Family::Linear:
    case Family::Huber:
    case Family::Matrix:
      for (Index i = 0; i < spec.n; ++i) y[i] = x.row(i).dot(theta_true) + resp_rng.normal();
      break;
    case Family::Logistic:
      for (Index i = 0; i < spec.n; ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-x.row(i).dot(theta_true)));
        y[i] = resp_rng.uniform01() < prob ? 1.0 : 0.0;
      }
      break;
  }

  if (spec.family == Family::Huber && spec.outlier_fraction > 0.0) {
    const Index count = static_cast<Index>(std::llround(spec.outlier_fraction * spec.n));
    if (count > 0) {
      RngStream out_rng = RngStream::derive(spec.seed, kOutlierStream);
      for (Index i : out_rng.sample_without_replacement(spec.n, count))
        y[i] += band_draw(out_rng, 5.0, 10.0);
    }
  }

  if (spec.family == Family::Matrix)
    return Dataset::matrix_design(std::move(x), std::move(y), spec.p, spec.q);
  return Dataset(std::move(x), std::move(y));
}

Model make_model(const GenSpec& spec, Dataset data) {
  switch (spec.family) {
    case Family::Linear: return Model::linear(std::move(data));
    case Family::Logistic: return Model::logistic(std::move(data));
    case Family::Huber: return Model::huber(std::move(data), spec.huber_delta);
    case Family::Matrix: return Model::matrix(std::move(data));
  }
  throw std::logic_error("make_model: unknown family");
}

}  // namespace proxdist
