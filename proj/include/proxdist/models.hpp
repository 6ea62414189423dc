#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "proxdist/types.hpp"

namespace proxdist {

enum class Family { Linear, Logistic, Huber, Matrix };

const char* family_name(Family f);

/// Immutable design matrix plus response vector. Matrix-covariate designs
/// store each observation as a column-major vectorized row, with the matrix
/// sides kept alongside. Copies share storage and are safe to use from
/// concurrent solver runs.
class Dataset {
 public:
  Dataset(Matrix covariates, Vector responses);

  /// n x (rows*cols) design whose i-th row is vec(X_i).
  static Dataset matrix_design(Matrix covariates, Vector responses, Index rows, Index cols);

  /// One observation per row, response in the last column. A non-numeric
  /// first row is treated as a header. Pass matrix sides for vectorized
  /// matrix covariates.
  static Dataset from_csv(const std::filesystem::path& path,
                          std::optional<std::pair<Index, Index>> matrix_sides = {});

  void to_csv(const std::filesystem::path& path) const;

  Index n() const { return s_->x.rows(); }
  Index dim() const { return s_->x.cols(); }
  const Matrix& covariates() const { return s_->x; }
  const Vector& responses() const { return s_->y; }

  bool is_matrix_design() const { return s_->mat_rows > 0; }
  Index mat_rows() const { return s_->mat_rows; }
  Index mat_cols() const { return s_->mat_cols; }

  /// Full-design products X^T X and X^T y, built once on first use.
  /// Available only for moderate dimensions (see gram_cacheable()).
  bool gram_cacheable() const { return dim() <= 2048; }
  const Matrix& gram() const;
  const Vector& xty() const;

 private:
  struct Storage {
    Matrix x;
    Vector y;
    Index mat_rows = 0;
    Index mat_cols = 0;
    mutable std::once_flag gram_once;
    mutable Matrix gram;
    mutable Vector xty;
  };
  explicit Dataset(std::shared_ptr<const Storage> s) : s_(std::move(s)) {}
  std::shared_ptr<const Storage> s_;
};

/// Minibatch index set I_k, drawn without replacement by the solver.
/// Indices are kept sorted so a full batch coincides with the natural
/// data order.
struct Batch {
  std::vector<Index> idx;

  Index size() const { return static_cast<Index>(idx.size()); }
  bool is_full(Index n) const;
  void validate(Index n) const;  // distinct, in range, 1 <= b <= n
};

Batch full_batch(Index n);

/// A loss family bound to its dataset: per-batch value, gradient, and the
/// curvature weights the Newton prox solver needs.
class Model {
 public:
  static Model linear(Dataset data);
  static Model logistic(Dataset data);
  static Model huber(Dataset data, double delta);
  static Model matrix(Dataset data);

  Family family() const { return family_; }
  const Dataset& data() const { return data_; }
  double huber_delta() const { return delta_; }
  Index dim() const { return data_.dim(); }

 private:
  Model(Family family, Dataset data, double delta)
      : family_(family), data_(std::move(data)), delta_(delta) {}

  Family family_;
  Dataset data_;
  double delta_;
};

/// Mean per-sample loss over the batch. The linear and matrix families use
/// the half-scaled squared residual so that the closed-form proximal solve
/// holds without extra constants.
double loss(const Model& model, const Vector& theta, const Batch& batch);

/// Gradient of loss() at theta.
Vector gradient(const Model& model, const Vector& theta, const Batch& batch);

/// Logistic curvature weights w_i = sigma(x_i^T theta)(1 - sigma(x_i^T theta)),
/// one per batch row; each lies in (0, 0.25].
Vector hessian_weights(const Model& model, const Vector& theta, const Batch& batch);

/// Mean loss over the entire dataset.
double full_objective(const Model& model, const Vector& theta);

}  // namespace proxdist
