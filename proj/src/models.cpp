#include "proxdist/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "proxdist/csv.hpp"

namespace proxdist {

namespace {

// Linear predictors are clamped before exponentiation; the induced error is
// below 1e-13 at the clamp while keeping exp() finite.
constexpr double kLogitClamp = 30.0;

double sigmoid(double u) {
  const double uc = std::clamp(u, -kLogitClamp, kLogitClamp);
  return 1.0 / (1.0 + std::exp(-uc));
}

double log1p_exp(double u) {
  const double uc = std::clamp(u, -kLogitClamp, kLogitClamp);
  return uc > 0.0 ? uc + std::log1p(std::exp(-uc)) : std::log1p(std::exp(uc));
}

double huber_value(double a, double delta) {
  const double abs_a = std::abs(a);
  return abs_a <= delta ? 0.5 * a * a : delta * (abs_a - 0.5 * delta);
}

double huber_slope(double a, double delta) {
  // L'_delta(a) = min(|a|, delta) * sign(a)
  return std::min(std::abs(a), delta) * (a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0));
}

void check_theta(const Model& model, const Vector& theta, const char* op) {
  if (theta.size() != model.dim())
    throw std::invalid_argument(std::string(op) + ": parameter has dimension " +
                                std::to_string(theta.size()) + ", model expects " +
                                std::to_string(model.dim()));
}

void check_batch(const Model& model, const Batch& batch, const char* op) {
  if (batch.idx.empty()) throw std::invalid_argument(std::string(op) + ": empty batch");
  const Index n = model.data().n();
  for (Index i : batch.idx)
    if (i < 0 || i >= n)
      throw std::invalid_argument(std::string(op) + ": batch index out of range");
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::Linear: return "linear";
    case Family::Logistic: return "logistic";
    case Family::Huber: return "huber";
    case Family::Matrix: return "matrix";
  }
  return "?";
}

Dataset::Dataset(Matrix covariates, Vector responses) {
  if (covariates.rows() < 1) throw std::invalid_argument("Dataset: need at least one observation");
  if (covariates.cols() < 1) throw std::invalid_argument("Dataset: need at least one covariate");
  if (responses.size() != covariates.rows())
    throw std::invalid_argument("Dataset: response length must equal the number of rows");
  auto s = std::make_shared<Storage>();
  s->x = std::move(covariates);
  s->y = std::move(responses);
  s_ = std::move(s);
}

Dataset Dataset::matrix_design(Matrix covariates, Vector responses, Index rows, Index cols) {
  if (rows < 1 || cols < 1)
    throw std::invalid_argument("Dataset: matrix sides must be positive");
  if (covariates.cols() != rows * cols)
    throw std::invalid_argument("Dataset: design width must equal rows*cols");
  Dataset d(std::move(covariates), std::move(responses));
  auto s = std::const_pointer_cast<Storage>(d.s_);
  s->mat_rows = rows;
  s->mat_cols = cols;
  return d;
}

Dataset Dataset::from_csv(const std::filesystem::path& path,
                          std::optional<std::pair<Index, Index>> matrix_sides) {
  CsvTable table = read_csv(path);
  if (table.rows.empty()) throw CsvFormatError(path.string() + ": no data rows");
  const Index n = static_cast<Index>(table.rows.size());
  const Index width = static_cast<Index>(table.rows.front().size());
  if (width < 2)
    throw CsvFormatError(path.string() + ": need at least one covariate column plus the response");
  Matrix x(n, width - 1);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    for (Index j = 0; j + 1 < width; ++j) x(i, j) = row[static_cast<std::size_t>(j)];
    y[i] = row[static_cast<std::size_t>(width - 1)];
  }
  if (matrix_sides)
    return matrix_design(std::move(x), std::move(y), matrix_sides->first, matrix_sides->second);
  return Dataset(std::move(x), std::move(y));
}

void Dataset::to_csv(const std::filesystem::path& path) const {
  std::ostringstream out;
  const Index d = dim();
  for (Index j = 0; j < d; ++j) out << "x" << (j + 1) << ",";
  out << "y\n";
  for (Index i = 0; i < n(); ++i) {
    for (Index j = 0; j < d; ++j) out << format_double(s_->x(i, j)) << ",";
    out << format_double(s_->y[i]) << "\n";
  }
  write_text_file(path, out.str());
}

const Matrix& Dataset::gram() const {
  if (!gram_cacheable()) throw std::logic_error("Dataset::gram: dimension too large to cache");
  std::call_once(s_->gram_once, [this] {
    s_->gram = s_->x.transpose() * s_->x;
    s_->xty = s_->x.transpose() * s_->y;
  });
  return s_->gram;
}

const Vector& Dataset::xty() const {
  gram();
  return s_->xty;
}

bool Batch::is_full(Index n) const {
  // Sorted distinct indices spanning [0, n) are exactly 0..n-1.
  return size() == n && !idx.empty() && idx.front() == 0 && idx.back() == n - 1;
}

void Batch::validate(Index n) const {
  if (idx.empty()) throw std::invalid_argument("Batch: empty index set");
  if (size() > n) throw std::invalid_argument("Batch: more indices than observations");
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= n) throw std::invalid_argument("Batch: index out of range");
    if (i > 0 && idx[i] <= idx[i - 1])
      throw std::invalid_argument("Batch: indices must be strictly increasing");
  }
}

Batch full_batch(Index n) {
  Batch b;
  b.idx.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) b.idx[static_cast<std::size_t>(i)] = i;
  return b;
}

Model Model::linear(Dataset data) { return Model(Family::Linear, std::move(data), 0.0); }

Model Model::logistic(Dataset data) {
  const Vector& y = data.responses();
  for (Index i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw std::invalid_argument("Model::logistic: responses must be 0 or 1");
  return Model(Family::Logistic, std::move(data), 0.0);
}

Model Model::huber(Dataset data, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("Model::huber: delta must be positive");
  return Model(Family::Huber, std::move(data), delta);
}

Model Model::matrix(Dataset data) {
  if (!data.is_matrix_design())
    throw std::invalid_argument("Model::matrix: dataset lacks matrix covariate sides");
  return Model(Family::Matrix, std::move(data), 0.0);
}

double loss(const Model& model, const Vector& theta, const Batch& batch) {
  check_theta(model, theta, "loss");
  check_batch(model, batch, "loss");
  const Matrix& x = model.data().covariates();
  const Vector& y = model.data().responses();
  // Accumulate per sample in index order; full-batch values then agree with
  // the mean of single-sample losses to the last bit.
  double acc = 0.0;
  switch (model.family()) {
    case Family::Linear:
    case Family::Matrix:
      for (Index i : batch.idx) {
        const double r = y[i] - x.row(i).dot(theta);
        acc += 0.5 * r * r;
      }
      break;
    case Family::Logistic:
      for (Index i : batch.idx) {
        const double u = x.row(i).dot(theta);
        acc += -(y[i] * u - log1p_exp(u));
      }
      break;
    case Family::Huber:
      for (Index i : batch.idx) acc += huber_value(y[i] - x.row(i).dot(theta), model.huber_delta());
      break;
  }
  return acc / static_cast<double>(batch.size());
}

Vector gradient(const Model& model, const Vector& theta, const Batch& batch) {
  check_theta(model, theta, "gradient");
  check_batch(model, batch, "gradient");
  const Matrix& x = model.data().covariates();
  const Vector& y = model.data().responses();
  Vector g = Vector::Zero(model.dim());
  switch (model.family()) {
    case Family::Linear:
    case Family::Matrix:
      for (Index i : batch.idx) g.noalias() -= (y[i] - x.row(i).dot(theta)) * x.row(i).transpose();
      break;
    case Family::Logistic:
      for (Index i : batch.idx) {
        const double p = sigmoid(x.row(i).dot(theta));
        g.noalias() -= (y[i] - p) * x.row(i).transpose();
      }
      break;
    case Family::Huber:
      for (Index i : batch.idx) {
        const double s = huber_slope(y[i] - x.row(i).dot(theta), model.huber_delta());
        g.noalias() -= s * x.row(i).transpose();
      }
      break;
  }
  return g / static_cast<double>(batch.size());
}

Vector hessian_weights(const Model& model, const Vector& theta, const Batch& batch) {
  if (model.family() != Family::Logistic)
    throw std::invalid_argument("hessian_weights: defined for the logistic family only");
  check_theta(model, theta, "hessian_weights");
  check_batch(model, batch, "hessian_weights");
  const Matrix& x = model.data().covariates();
  Vector w(batch.size());
  for (Index i = 0; i < batch.size(); ++i) {
    const double p = sigmoid(x.row(batch.idx[static_cast<std::size_t>(i)]).dot(theta));
    w[i] = p * (1.0 - p);
  }
  return w;
}

double full_objective(const Model& model, const Vector& theta) {
  return loss(model, theta, full_batch(model.data().n()));
}

}  // namespace proxdist
