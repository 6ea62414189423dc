#pragma once

#include "proxdist/types.hpp"

namespace proxdist {

enum class ConstraintKind { Unconstrained, UnitBall, Sparsity, Rank };

/// Description of the constraint set C together with the data needed to
/// project onto it. Vector parameters live in R^p; matrix parameters are
/// handled in column-major vectorized form, so the ambient dimension of a
/// rank constraint is rows*cols.
class ConstraintSet {
 public:
  static ConstraintSet unconstrained(Index dim);
  static ConstraintSet unit_ball(Index dim);
  static ConstraintSet sparsity(Index dim, Index keep);
  static ConstraintSet rank(Index rows, Index cols, Index max_rank);

  ConstraintKind kind() const { return kind_; }
  Index dim() const { return rows_ * cols_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index sparsity_level() const { return keep_; }
  Index max_rank() const { return rank_; }

  bool is_convex() const {
    return kind_ == ConstraintKind::Unconstrained || kind_ == ConstraintKind::UnitBall;
  }

 private:
  ConstraintSet(ConstraintKind kind, Index rows, Index cols, Index keep, Index rank)
      : kind_(kind), rows_(rows), cols_(cols), keep_(keep), rank_(rank) {}

  ConstraintKind kind_;
  Index rows_;   // p (vector) or matrix row count
  Index cols_;   // 1 (vector) or matrix column count
  Index keep_;   // retained coordinates (Sparsity)
  Index rank_;   // retained singular values (Rank)
};

/// Euclidean projection P_C(x). Ties in the top-|s| magnitude selection keep
/// the lower index; tied singular values at the rank cutoff keep the SVD's
/// returned order.
Vector project(const Vector& x, const ConstraintSet& c);

/// dist(x, C)^2 = ||x - P_C(x)||^2.
double distance_sq(const Vector& x, const ConstraintSet& c);

}  // namespace proxdist
