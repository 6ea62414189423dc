#include "proxdist/prox.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <stdexcept>

namespace proxdist {

namespace {

Matrix gather_rows(const Matrix& x, const Batch& batch) {
  Matrix out(batch.size(), x.cols());
  for (Index i = 0; i < batch.size(); ++i)
    out.row(i) = x.row(batch.idx[static_cast<std::size_t>(i)]);
  return out;
}

Vector gather(const Vector& y, const Batch& batch) {
  Vector out(batch.size());
  for (Index i = 0; i < batch.size(); ++i) out[i] = y[batch.idx[static_cast<std::size_t>(i)]];
  return out;
}

// Armijo backtracking on the surrogate h along direction d with
// h'(0) = slope < 0. Returns the accepted step, or nullopt after
// max_halvings rejections.
template <typename ValueFn>
std::optional<double> armijo_step(const ValueFn& h, double h0, double slope,
                                  const ProxControls& c) {
  double eta = c.step;
  for (int i = 0; i <= c.max_halvings; ++i) {
    if (h(eta) <= h0 + c.armijo_slope * eta * slope) return eta;
    eta *= c.armijo_shrink;
  }
  return std::nullopt;
}

}  // namespace

void ProxControls::validate() const {
  if (max_inner < 1) throw std::invalid_argument("ProxControls: max_inner must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("ProxControls: tol must be positive");
  if (!(step > 0.0)) throw std::invalid_argument("ProxControls: step must be positive");
  if (!(armijo_shrink > 0.0 && armijo_shrink < 1.0))
    throw std::invalid_argument("ProxControls: shrink must lie in (0,1)");
  if (!(armijo_slope > 0.0 && armijo_slope < 1.0))
    throw std::invalid_argument("ProxControls: slope must lie in (0,1)");
}

void ProxProblem::validate() const {
  if (model == nullptr) throw std::invalid_argument("ProxProblem: missing model");
  if (!(rho > 0.0)) throw std::invalid_argument("ProxProblem: rho must be positive");
  if (anchor.size() != model->dim())
    throw std::invalid_argument("ProxProblem: anchor dimension mismatch");
  if (init.size() > 0 && init.size() != model->dim())
    throw std::invalid_argument("ProxProblem: init dimension mismatch");
  batch.validate(model->data().n());
  controls.validate();
}

double surrogate_value(const ProxProblem& p, const Vector& theta) {
  return loss(*p.model, theta, p.batch) + 0.5 * p.rho * (theta - p.anchor).squaredNorm();
}

Vector surrogate_gradient(const ProxProblem& p, const Vector& theta) {
  return gradient(*p.model, theta, p.batch) + p.rho * (theta - p.anchor);
}

ProxResult prox_linear(const ProxProblem& p, LinearSolveBranch branch) {
  p.validate();
  const Family fam = p.model->family();
  if (fam != Family::Linear && fam != Family::Matrix)
    throw std::invalid_argument("prox_linear: linear or matrix family required");

  const Dataset& data = p.model->data();
  const Index b = p.batch.size();
  const Index d = p.model->dim();
  const double scale = static_cast<double>(b) * p.rho;

  if (branch == LinearSolveBranch::Auto)
    branch = b < d ? LinearSolveBranch::Woodbury : LinearSolveBranch::Direct;

  ProxResult res;
  if (branch == LinearSolveBranch::Direct) {
    Matrix m;
    Vector rhs;
    if (p.batch.is_full(data.n()) && data.gram_cacheable()) {
      m = data.gram();
      rhs = scale * p.anchor + data.xty();
    } else {
      const Matrix xb = gather_rows(data.covariates(), p.batch);
      m.noalias() = xb.transpose() * xb;
      rhs = scale * p.anchor + xb.transpose() * gather(data.responses(), p.batch);
    }
    m.diagonal().array() += scale;
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("prox_linear: direct system is not positive definite");
    res.theta = llt.solve(rhs);
  } else {
    const Matrix xb = gather_rows(data.covariates(), p.batch);
    const Vector yb = gather(data.responses(), p.batch);
    const Vector u = p.anchor + xb.transpose() * yb / scale;
    Matrix k(b, b);
    k.noalias() = xb * xb.transpose();
    k.diagonal().array() += scale;
    Eigen::LLT<Matrix> llt(k);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("prox_linear: Woodbury system is not positive definite");
    const Vector w = llt.solve(xb * u);
    res.theta = u - xb.transpose() * w;
  }
  return res;
}

ProxResult prox_newton_logistic(const ProxProblem& p) {
  p.validate();
  if (p.model->family() != Family::Logistic)
    throw std::invalid_argument("prox_newton_logistic: logistic family required");

  const Dataset& data = p.model->data();
  const Matrix xb = gather_rows(data.covariates(), p.batch);
  const Vector yb = gather(data.responses(), p.batch);
  const Index b = p.batch.size();
  const Index d = p.model->dim();
  const double bd = static_cast<double>(b);

  ProxResult res;
  Vector beta = p.start();
  for (int it = 0; it < p.controls.max_inner; ++it) {
    Vector probs(b);
    Vector w(b);
    for (Index i = 0; i < b; ++i) {
      const double u = std::clamp(xb.row(i).dot(beta), -30.0, 30.0);
      probs[i] = 1.0 / (1.0 + std::exp(-u));
      w[i] = probs[i] * (1.0 - probs[i]);
    }
    const Vector grad = -xb.transpose() * (yb - probs) / bd + p.rho * (beta - p.anchor);
    res.grad_norm = grad.norm();
    res.inner_iterations = it;
    if (res.grad_norm <= p.controls.tol) {
      res.theta = std::move(beta);
      return res;
    }

    // Newton direction d = -(rho I + X~^T W X~ / b)^-1 grad. For b < d the
    // Woodbury form works with the b x b system (b rho I + W X~ X~^T).
    Vector dir(d);
    if (b < d) {
      Matrix k = w.asDiagonal() * (xb * xb.transpose());
      k.diagonal().array() += bd * p.rho;
      Eigen::PartialPivLU<Matrix> lu(k);
      const Vector z = lu.solve(w.cwiseProduct(xb * grad));
      dir = -(grad - xb.transpose() * z) / p.rho;
    } else {
      Matrix h = xb.transpose() * w.asDiagonal() * xb / bd;
      h.diagonal().array() += p.rho;
      Eigen::LLT<Matrix> llt(h);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("prox_newton_logistic: Hessian factorization failed");
      dir = -llt.solve(grad);
    }

    const double h0 = surrogate_value(p, beta);
    const double slope = grad.dot(dir);
    const auto eta = armijo_step(
        [&](double e) { return surrogate_value(p, beta + e * dir); }, h0, slope, p.controls);
    if (!eta) {
      res.line_search_failed = true;
      res.theta = std::move(beta);
      return res;
    }
    beta += *eta * dir;
  }
  res.inner_iterations = p.controls.max_inner;
  res.grad_norm = surrogate_gradient(p, beta).norm();
  res.theta = std::move(beta);
  return res;
}

ProxResult prox_gd_huber(const ProxProblem& p) {
  p.validate();
  if (p.model->family() != Family::Huber)
    throw std::invalid_argument("prox_gd_huber: Huber family required");

  const Dataset& data = p.model->data();
  const Matrix xb = gather_rows(data.covariates(), p.batch);
  const Vector yb = gather(data.responses(), p.batch);
  const Index b = p.batch.size();
  const double bd = static_cast<double>(b);
  const double delta = p.model->huber_delta();

  ProxResult res;
  Vector beta = p.start();
  for (int it = 0; it < p.controls.max_inner; ++it) {
    Vector slopes(b);
    const Vector resid = yb - xb * beta;
    for (Index i = 0; i < b; ++i) {
      const double a = resid[i];
      slopes[i] = std::min(std::abs(a), delta) * (a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0));
    }
    const Vector grad = -xb.transpose() * slopes / bd + p.rho * (beta - p.anchor);
    res.grad_norm = grad.norm();
    res.inner_iterations = it;
    if (res.grad_norm <= p.controls.tol) {
      res.theta = std::move(beta);
      return res;
    }

    if (!p.controls.backtracking) {
      beta -= p.controls.step * grad;
      continue;
    }
    const double h0 = surrogate_value(p, beta);
    const double slope = -grad.squaredNorm();
    const auto eta = armijo_step(
        [&](double e) { return surrogate_value(p, beta - e * grad); }, h0, slope, p.controls);
    if (!eta) {
      res.line_search_failed = true;
      res.theta = std::move(beta);
      return res;
    }
    beta -= *eta * grad;
  }
  res.inner_iterations = p.controls.max_inner;
  res.grad_norm = surrogate_gradient(p, beta).norm();
  res.theta = std::move(beta);
  return res;
}

ProxResult solve_prox(const ProxProblem& p) {
  if (p.model == nullptr) throw std::invalid_argument("solve_prox: missing model");
  switch (p.model->family()) {
    case Family::Linear:
    case Family::Matrix:
      return prox_linear(p);
    case Family::Logistic:
      return prox_newton_logistic(p);
    case Family::Huber:
      return prox_gd_huber(p);
  }
  throw std::logic_error("solve_prox: unknown family");
}

}  // namespace proxdist
