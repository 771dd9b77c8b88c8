#include "gva/models.hpp"

#include <cmath>

namespace gva {

double log1p_exp(double u) {
  if (u > 0.0) return u + std::log1p(std::exp(-u));
  return std::log1p(std::exp(u));
}

double logistic_sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

LogisticModel::LogisticModel(Matrix X, Vector y, double sigma0_sq)
    : X_(std::move(X)), y_(std::move(y)), sigma0_sq_(sigma0_sq) {
  if (X_.rows() < 1 || X_.cols() < 1) {
    throw DimensionError("LogisticModel: design matrix must be at least 1x1");
  }
  if (y_.size() != X_.rows()) {
    throw DimensionError("LogisticModel: label vector length " + std::to_string(y_.size()) +
                         " does not match " + std::to_string(X_.rows()) + " rows");
  }
  for (Index i = 0; i < y_.size(); ++i) {
    if (y_[i] != 0.0 && y_[i] != 1.0) {
      throw std::invalid_argument("LogisticModel: label at row " + std::to_string(i) +
                                  " is not in {0,1}");
    }
  }
  if (!(sigma0_sq_ > 0.0)) {
    throw std::invalid_argument("LogisticModel: prior variance must be positive");
  }
}

ModelDerivatives LogisticModel::eval(const Vector& theta, bool want_hessian) const {
  const Index d = dim();
  if (theta.size() != d) {
    throw DimensionError("LogisticModel::eval: theta has length " + std::to_string(theta.size()) +
                         ", expected " + std::to_string(d));
  }
  const Vector eta = X_ * theta;

  ModelDerivatives out;
  double ll = 0.0;
  Vector pi(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    ll += y_[i] * eta[i] - log1p_exp(eta[i]);
    pi[i] = logistic_sigmoid(eta[i]);
  }
  ll -= 0.5 * d * std::log(2.0 * M_PI * sigma0_sq_);
  ll -= theta.squaredNorm() / (2.0 * sigma0_sq_);
  out.value = ll;

  out.grad = X_.transpose() * (y_ - pi) - theta / sigma0_sq_;

  if (want_hessian) {
    const Vector w = pi.array() * (1.0 - pi.array());
    Matrix h = -(X_.transpose() * w.asDiagonal() * X_);
    h.diagonal().array() -= 1.0 / sigma0_sq_;
    // Symmetrize away accumulation noise so downstream symmetry checks hold.
    out.hess = 0.5 * (h + h.transpose());
  }
  return out;
}

QuadraticModel::QuadraticModel(Vector theta_hat, Matrix P, double ell0)
    : theta_hat_(std::move(theta_hat)), P_(std::move(P)), ell0_(ell0) {
  if (P_.rows() != theta_hat_.size() || P_.cols() != theta_hat_.size()) {
    throw DimensionError("QuadraticModel: precision must be square and match the mode length");
  }
  cholesky(P_);  // validates symmetry and positive definiteness
}

ModelDerivatives QuadraticModel::eval(const Vector& theta, bool want_hessian) const {
  if (theta.size() != dim()) {
    throw DimensionError("QuadraticModel::eval: theta has length " + std::to_string(theta.size()) +
                         ", expected " + std::to_string(dim()));
  }
  const Vector delta = theta - theta_hat_;
  const Vector p_delta = P_ * delta;

  ModelDerivatives out;
  out.value = ell0_ - 0.5 * delta.dot(p_delta);
  out.grad = -p_delta;
  if (want_hessian) out.hess = -P_;
  return out;
}

}  // namespace gva
