#ifndef GVA_VARIATIONAL_HPP
#define GVA_VARIATIONAL_HPP

#include "gva/common.hpp"
#include "gva/models.hpp"
#include "gva/rng.hpp"
#include "gva/trimat.hpp"

namespace gva {

// Whether the factor is the Cholesky factor C of the covariance (Sigma =
// C C^T) or the Cholesky factor T of the precision (Sigma^{-1} = T T^T).
enum class Parametrization { Covariance, Precision };

// The Gaussian variational state q(theta) = N(mu, Sigma). Sigma is held only
// through its triangular factor; the factor diagonal must stay strictly
// positive, which the constructor enforces and the optimizer monitors after
// every update.
class GaussianVariational {
 public:
  GaussianVariational(Vector mu, LowerTriangular factor, Parametrization parametrization);

  static GaussianVariational standard(Index d, Parametrization p) {
    return GaussianVariational(Vector::Zero(d), LowerTriangular::identity(d), p);
  }

  Index dim() const { return mu_.size(); }
  const Vector& mu() const { return mu_; }
  const LowerTriangular& factor() const { return factor_; }
  Parametrization parametrization() const { return param_; }

  // Replaces the state; the new factor must keep a strictly positive diagonal.
  void update(Vector mu, LowerTriangular factor);

  Matrix sigma() const;
  Matrix sigma_inv() const;

  // Sigma v and Sigma^{-1} v without forming dense matrices (factor products
  // and triangular solves only).
  Vector sigma_times(const Vector& v) const;
  Vector sigma_inv_times(const Vector& v) const;

 private:
  Vector mu_;
  LowerTriangular factor_;
  Parametrization param_;
};

// One reparametrized draw: z ~ N(0, I) and its transformed sample
// theta = mu + C z (covariance) or theta = mu + T^{-T} z (precision).
struct DrawContext {
  Vector z;
  Vector theta;
};

DrawContext draw(const GaussianVariational& state, NormalStream& rng);

// log N(theta | mu, Sigma) under the state's parametrization.
double log_q(const GaussianVariational& state, const Vector& theta);

// Value/gradient/Hessian of h(theta) = ell(theta) - log q(theta) at an
// arbitrary point.
ModelDerivatives h_eval(const GaussianVariational& state, const LogJoint& model,
                        const Vector& theta, bool want_hessian);

// Same, at a point drawn from the state. Uses ctx.z to apply Sigma^{-1}
// (C^{-T} z for the covariance form, T z for the precision form) instead of
// solving from theta.
ModelDerivatives h_derivs(const GaussianVariational& state, const LogJoint& model,
                          const DrawContext& ctx, bool want_hessian);

}  // namespace gva

#endif  // GVA_VARIATIONAL_HPP
