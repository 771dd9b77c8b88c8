#ifndef GVA_MODELS_HPP
#define GVA_MODELS_HPP

#include <optional>
#include <utility>

#include "gva/common.hpp"
#include "gva/trimat.hpp"

namespace gva {

// Value, gradient and (optionally) Hessian of a log joint density at a point.
// The Hessian is computed only when asked for, so first-order algorithms
// never pay for it.
struct ModelDerivatives {
  double value = 0.0;
  Vector grad;
  std::optional<Matrix> hess;
};

// Log joint model density ell(theta) = log p(y, theta).
class LogJoint {
 public:
  virtual ~LogJoint() = default;
  virtual Index dim() const = 0;
  virtual ModelDerivatives eval(const Vector& theta, bool want_hessian) const = 0;
};

// Bayesian logistic regression: y_i | pi_i ~ Bernoulli(pi_i) with
// logit(pi_i) = theta^T x_i and a N(0, sigma0_sq I) prior on theta.
class LogisticModel final : public LogJoint {
 public:
  // X is n x d (rows x_i), y has entries in {0,1}, sigma0_sq > 0.
  LogisticModel(Matrix X, Vector y, double sigma0_sq);

  Index dim() const override { return X_.cols(); }
  Index n_obs() const { return X_.rows(); }
  double sigma0_sq() const { return sigma0_sq_; }

  ModelDerivatives eval(const Vector& theta, bool want_hessian) const override;

 private:
  Matrix X_;
  Vector y_;
  double sigma0_sq_;
};

// Quadratic expansion of a log joint about its mode theta_hat:
//   ell(theta) = ell0 - (theta - theta_hat)^T P (theta - theta_hat) / 2,
// with P symmetric positive definite. Its normalized posterior is
// N(theta_hat, P^{-1}) exactly, which makes it the exact-answer oracle for
// the optimizer and the variance comparisons.
class QuadraticModel final : public LogJoint {
 public:
  QuadraticModel(Vector theta_hat, Matrix P, double ell0);

  Index dim() const override { return theta_hat_.size(); }
  const Vector& theta_hat() const { return theta_hat_; }
  const Matrix& precision() const { return P_; }
  double ell0() const { return ell0_; }

  ModelDerivatives eval(const Vector& theta, bool want_hessian) const override;

 private:
  Vector theta_hat_;
  Matrix P_;
  double ell0_;
};

// log(1 + exp(u)) without overflow for large |u|.
double log1p_exp(double u);

// exp(u) / (1 + exp(u)) evaluated stably.
double logistic_sigmoid(double u);

}  // namespace gva

#endif  // GVA_MODELS_HPP
