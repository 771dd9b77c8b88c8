#include "gva/variational.hpp"

#include <cmath>
#include <utility>

namespace gva {

GaussianVariational::GaussianVariational(Vector mu, LowerTriangular factor,
                                         Parametrization parametrization)
    : mu_(std::move(mu)), factor_(std::move(factor)), param_(parametrization) {
  if (mu_.size() != factor_.dim()) {
    throw DimensionError("GaussianVariational: mu length " + std::to_string(mu_.size()) +
                         " does not match factor dimension " + std::to_string(factor_.dim()));
  }
  if (!factor_.diagonal_positive()) {
    throw std::invalid_argument("GaussianVariational: factor diagonal must be strictly positive");
  }
}

void GaussianVariational::update(Vector mu, LowerTriangular factor) {
  if (mu.size() != mu_.size() || factor.dim() != factor_.dim()) {
    throw DimensionError("GaussianVariational::update: dimension mismatch");
  }
  if (!factor.diagonal_positive()) {
    throw std::invalid_argument("GaussianVariational::update: factor diagonal must stay positive");
  }
  mu_ = std::move(mu);
  factor_ = std::move(factor);
}

Matrix GaussianVariational::sigma() const {
  const Matrix& f = factor_.mat();
  if (param_ == Parametrization::Covariance) {
    return f * f.transpose();
  }
  // Sigma = (T T^T)^{-1} = T^{-T} T^{-1}
  const Matrix eye = Matrix::Identity(dim(), dim());
  const Matrix t_inv = tri_solve(factor_, eye, /*transposed=*/false);
  return t_inv.transpose() * t_inv;
}

Matrix GaussianVariational::sigma_inv() const {
  const Matrix& f = factor_.mat();
  if (param_ == Parametrization::Precision) {
    return f * f.transpose();
  }
  const Matrix eye = Matrix::Identity(dim(), dim());
  const Matrix c_inv = tri_solve(factor_, eye, /*transposed=*/false);
  return c_inv.transpose() * c_inv;
}

Vector GaussianVariational::sigma_times(const Vector& v) const {
  const Matrix& f = factor_.mat();
  if (param_ == Parametrization::Covariance) {
    return f * (f.transpose() * v);
  }
  return tri_solve(factor_, tri_solve(factor_, v, false), true);
}

Vector GaussianVariational::sigma_inv_times(const Vector& v) const {
  const Matrix& f = factor_.mat();
  if (param_ == Parametrization::Precision) {
    return f * (f.transpose() * v);
  }
  return tri_solve(factor_, tri_solve(factor_, v, false), true);
}

DrawContext draw(const GaussianVariational& state, NormalStream& rng) {
  DrawContext ctx;
  ctx.z = rng.next_vector(state.dim());
  if (state.parametrization() == Parametrization::Covariance) {
    ctx.theta = state.mu() + state.factor().mat() * ctx.z;
  } else {
    ctx.theta = state.mu() + tri_solve(state.factor(), ctx.z, /*transposed=*/true);
  }
  return ctx;
}

double log_q(const GaussianVariational& state, const Vector& theta) {
  const Index d = state.dim();
  if (theta.size() != d) {
    throw DimensionError("log_q: theta has length " + std::to_string(theta.size()) +
                         ", expected " + std::to_string(d));
  }
  const double log_2pi = std::log(2.0 * M_PI);
  const Vector delta = theta - state.mu();
  const Matrix& f = state.factor().mat();
  double log_diag = 0.0;
  for (Index j = 0; j < d; ++j) log_diag += std::log(f(j, j));

  if (state.parametrization() == Parametrization::Covariance) {
    const Vector w = tri_solve(state.factor(), delta, false);  // C^{-1}(theta - mu)
    return -0.5 * d * log_2pi - log_diag - 0.5 * w.squaredNorm();
  }
  const Vector w = f.transpose() * delta;  // T^T (theta - mu)
  return -0.5 * d * log_2pi + log_diag - 0.5 * w.squaredNorm();
}

namespace {

// - grad log q(theta) = Sigma^{-1}(theta - mu); cheap form given z.
Vector sigma_inv_delta_from_z(const GaussianVariational& state, const Vector& z) {
  if (state.parametrization() == Parametrization::Covariance) {
    return tri_solve(state.factor(), z, /*transposed=*/true);  // C^{-T} z
  }
  return state.factor().mat() * z;  // T z
}

ModelDerivatives assemble_h(const GaussianVariational& state, const LogJoint& model,
                            const Vector& theta, const Vector& sigma_inv_delta,
                            bool want_hessian) {
  ModelDerivatives h = model.eval(theta, want_hessian);
  h.value -= log_q(state, theta);
  h.grad += sigma_inv_delta;
  if (want_hessian) {
    if (!h.hess) {
      throw std::logic_error("h_derivs: model did not return the requested Hessian");
    }
    *h.hess += state.sigma_inv();
  }
  return h;
}

}  // namespace

ModelDerivatives h_eval(const GaussianVariational& state, const LogJoint& model,
                        const Vector& theta, bool want_hessian) {
  return assemble_h(state, model, theta, state.sigma_inv_times(theta - state.mu()), want_hessian);
}

ModelDerivatives h_derivs(const GaussianVariational& state, const LogJoint& model,
                          const DrawContext& ctx, bool want_hessian) {
  return assemble_h(state, model, ctx.theta, sigma_inv_delta_from_z(state, ctx.z), want_hessian);
}

}  // namespace gva
