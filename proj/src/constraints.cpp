#include "proxdist/constraints.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace proxdist {

namespace {

// Points with norm in (1, 1 + kBallSlack] count as feasible so that
// re-projecting an already projected vector returns it unchanged.
constexpr double kBallSlack = 1e-12;

void check_dim(const Vector& x, const ConstraintSet& c, const char* op) {
  if (x.size() != c.dim()) {
    throw std::invalid_argument(std::string(op) + ": point has dimension " +
                                std::to_string(x.size()) + ", constraint expects " +
                                std::to_string(c.dim()));
  }
}

Vector project_ball(const Vector& x) {
  const double nrm = x.norm();
  if (nrm <= 1.0 + kBallSlack) return x;
  return x / nrm;
}

Vector project_sparsity(const Vector& x, Index keep) {
  const Index p = x.size();
  if (keep >= p) return x;
  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  // Sort by magnitude descending; equal magnitudes keep the lower index.
  std::stable_sort(order.begin(), order.end(), [&x](Index a, Index b) {
    return std::abs(x[a]) > std::abs(x[b]);
  });
  Vector out = Vector::Zero(p);
  for (Index i = 0; i < keep; ++i) out[order[static_cast<std::size_t>(i)]] = x[order[static_cast<std::size_t>(i)]];
  return out;
}

Vector project_rank(const Vector& x, Index rows, Index cols, Index r) {
  if (r >= std::min(rows, cols)) return x;
  Eigen::Map<const Matrix> m(x.data(), rows, cols);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  // Eckart-Young: keep the r leading singular triplets.
  Matrix trunc = svd.matrixU().leftCols(r) * sv.head(r).asDiagonal() *
                 svd.matrixV().leftCols(r).transpose();
  return Eigen::Map<const Vector>(trunc.data(), rows * cols);
}

}  // namespace

ConstraintSet ConstraintSet::unconstrained(Index dim) {
  if (dim < 1) throw std::invalid_argument("ConstraintSet: dimension must be positive");
  return ConstraintSet(ConstraintKind::Unconstrained, dim, 1, 0, 0);
}

ConstraintSet ConstraintSet::unit_ball(Index dim) {
  if (dim < 1) throw std::invalid_argument("ConstraintSet: dimension must be positive");
  return ConstraintSet(ConstraintKind::UnitBall, dim, 1, 0, 0);
}

ConstraintSet ConstraintSet::sparsity(Index dim, Index keep) {
  if (dim < 1) throw std::invalid_argument("ConstraintSet: dimension must be positive");
  if (keep < 1 || keep > dim)
    throw std::invalid_argument("ConstraintSet: sparsity level must satisfy 1 <= s <= p");
  return ConstraintSet(ConstraintKind::Sparsity, dim, 1, keep, 0);
}

ConstraintSet ConstraintSet::rank(Index rows, Index cols, Index max_rank) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("ConstraintSet: matrix sides must be positive");
  if (max_rank < 1 || max_rank > std::min(rows, cols))
    throw std::invalid_argument("ConstraintSet: rank must satisfy 1 <= r <= min(p,q)");
  return ConstraintSet(ConstraintKind::Rank, rows, cols, 0, max_rank);
}

Vector project(const Vector& x, const ConstraintSet& c) {
  check_dim(x, c, "project");
  switch (c.kind()) {
    case ConstraintKind::Unconstrained:
      return x;
    case ConstraintKind::UnitBall:
      return project_ball(x);
    case ConstraintKind::Sparsity:
      return project_sparsity(x, c.sparsity_level());
    case ConstraintKind::Rank:
      return project_rank(x, c.rows(), c.cols(), c.max_rank());
  }
  throw std::logic_error("project: unknown constraint kind");
}

double distance_sq(const Vector& x, const ConstraintSet& c) {
  check_dim(x, c, "distance_sq");
  return (x - project(x, c)).squaredNorm();
}

}  // namespace proxdist
