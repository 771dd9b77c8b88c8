#ifndef GVA_DIAGNOSTICS_HPP
#define GVA_DIAGNOSTICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gva/common.hpp"
#include "gva/models.hpp"
#include "gva/trimat.hpp"
#include "gva/variational.hpp"

namespace gva {

// Numerically stable running mean/variance over flattened samples, with the
// pairwise combination rule so shards accumulated under independent streams
// can be merged deterministically.
class RunningMoments {
 public:
  explicit RunningMoments(Index size)
      : mean_(Vector::Zero(size)), m2_(Vector::Zero(size)) {}

  void push(const Vector& x);
  void merge(const RunningMoments& other);

  long count() const { return n_; }
  const Vector& mean() const { return mean_; }
  // Sample variance (n-1 divisor); zero vector while n < 2.
  Vector variance() const;
  // Standard error of the mean, entrywise.
  Vector std_error() const;

 private:
  long n_ = 0;
  Vector mean_;
  Vector m2_;
};

// The five Monte-Carlo-verifiable identities. The theorem checks compare the
// full G and F matrices; entrywise agreement subsumes coordinate probes.
enum class Identity { BonnetStein, Price, Lemma1, Thm1A, Thm1B };
std::string to_string(Identity id);

struct IdentityReport {
  Identity identity = Identity::BonnetStein;
  long n_samples = 0;
  Matrix lhs_mean;  // d x 1 for BonnetStein, d x d otherwise
  Matrix rhs_mean;
  double max_abs_gap = 0.0;
  double max_gap_in_se = 0.0;  // gap in combined standard-error units
};

// Monte Carlo check of one identity for the function f (value/grad/hess via
// the LogJoint surface) under draws from the state. Thm1A requires a
// covariance-parametrized state, Thm1B a precision-parametrized one.
IdentityReport check_identity(Identity which, const GaussianVariational& state,
                              const LogJoint& f, long n_samples, std::uint64_t seed);

struct VarianceReport {
  std::string estimator;  // "G1", "F1", "G2" or "F2"
  long n_samples = 0;
  LowerTriangular entry_variances;
  double max_entry_variance = 0.0;

  VarianceReport() : entry_variances(LowerTriangular::zero(1)) {}
};

// Entrywise sample variances of bar(G) vs bar(F) over shared draws: G1/F1
// for a covariance state, G2/F2 for a precision state. Returns the G report
// then the F report.
std::vector<VarianceReport> compare_variance(const GaussianVariational& state,
                                             const LogJoint& model, long n_samples,
                                             std::uint64_t seed);

struct ElboEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
};

// Monte Carlo estimate of the evidence lower bound E_q[h(theta)].
ElboEstimate elbo_estimate(const GaussianVariational& state, const LogJoint& model,
                           long n_samples, std::uint64_t seed);

// h(theta) = ell(theta) - log q(theta) as a standalone function of theta,
// for feeding the identity checks.
class HFunction final : public LogJoint {
 public:
  HFunction(const GaussianVariational& state, const LogJoint& model)
      : state_(&state), model_(&model) {}

  Index dim() const override { return state_->dim(); }
  ModelDerivatives eval(const Vector& theta, bool want_hessian) const override {
    return h_eval(*state_, *model_, theta, want_hessian);
  }

 private:
  const GaussianVariational* state_;
  const LogJoint* model_;
};

// Newton mode-finding on an exact-derivative model; returns the quadratic
// expansion at the mode (the Laplace approximation). Independent of the
// stochastic optimizer path.
QuadraticModel laplace_fit(const LogJoint& model, const Vector& x0, int max_newton = 200,
                           double grad_tol = 1e-10);

// log evidence of the Laplace approximation, which equals the ELBO of the
// mode-matched Gaussian on the quadratic model:
// ell0 + (d/2) log(2 pi) - (1/2) log |P|.
double laplace_elbo(const QuadraticModel& m);

// Closed-form ELBO of q = N(mu, Sigma) against a quadratic log joint:
// ell0 - tr(P Sigma)/2 - (mu - theta_hat)^T P (mu - theta_hat)/2
// + d(1 + log 2 pi)/2 + log|Sigma|/2.
double quadratic_elbo(const QuadraticModel& m, const GaussianVariational& state);

}  // namespace gva

#endif  // GVA_DIAGNOSTICS_HPP
