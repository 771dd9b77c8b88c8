#include "gva/estimators.hpp"

namespace gva {

Vector mean_dir_euclidean(const Vector& gradh) { return gradh; }

Vector mean_dir_natural(const GaussianVariational& state, const Vector& gradh) {
  return state.sigma_times(gradh);
}

LowerTriangular g1(const Vector& gradh, const Vector& z) {
  if (gradh.size() != z.size()) {
    throw DimensionError("g1: gradient and z lengths differ");
  }
  return bar(gradh * z.transpose());
}

LowerTriangular f1(const Matrix& hessh, const LowerTriangular& c) {
  if (hessh.rows() != c.dim() || hessh.cols() != c.dim()) {
    throw DimensionError("f1: Hessian and factor dimensions differ");
  }
  return bar(hessh * c.mat());
}

LowerTriangular g2(const Vector& gradh, const Vector& z, const LowerTriangular& t) {
  if (gradh.size() != t.dim() || z.size() != t.dim()) {
    throw DimensionError("g2: dimension mismatch");
  }
  const Vector a = tri_solve(t, z, /*transposed=*/true);      // T^{-T} z = theta - mu
  const Vector b = tri_solve(t, gradh, /*transposed=*/false);  // T^{-1} grad h
  return bar(-a * b.transpose());
}

LowerTriangular f2(const Matrix& hessh, const LowerTriangular& t) {
  if (hessh.rows() != t.dim() || hessh.cols() != t.dim()) {
    throw DimensionError("f2: Hessian and factor dimensions differ");
  }
  // hess h T^{-T} = (T^{-1} hess h)^T for symmetric hess h, so the right
  // solve is d columnwise solves against T; then two left solves.
  const Matrix right = tri_solve(t, hessh, /*transposed=*/false).transpose();
  const Matrix mid = tri_solve(t, right, /*transposed=*/false);
  return bar(-tri_solve(t, mid, /*transposed=*/true));
}

LowerTriangular naturalize(const LowerTriangular& factor, const LowerTriangular& euclid_bar) {
  if (factor.dim() != euclid_bar.dim()) {
    throw DimensionError("naturalize: dimension mismatch");
  }
  const Matrix h = factor.mat().transpose() * euclid_bar.mat();
  return bar(factor.mat() * barbar(h).mat());
}

GradientEstimate estimate(const GaussianVariational& state, const ModelDerivatives& hd,
                          const DrawContext& ctx, Order order, Geometry geometry) {
  if (order == Order::Second && !hd.hess) {
    throw std::invalid_argument("estimate: second-order update requested without a Hessian");
  }

  const LowerTriangular& factor = state.factor();
  LowerTriangular euclid =
      state.parametrization() == Parametrization::Covariance
          ? (order == Order::First ? g1(hd.grad, ctx.z) : f1(*hd.hess, factor))
          : (order == Order::First ? g2(hd.grad, ctx.z, factor) : f2(*hd.hess, factor));

  GradientEstimate est{Vector(), LowerTriangular::zero(state.dim()), order, geometry};
  if (geometry == Geometry::Euclidean) {
    est.mu_dir = mean_dir_euclidean(hd.grad);
    est.factor_dir = std::move(euclid);
  } else {
    est.mu_dir = mean_dir_natural(state, hd.grad);
    est.factor_dir = naturalize(factor, euclid);
  }
  return est;
}

GradientEstimate estimate(const GaussianVariational& state, const LogJoint& model,
                          const DrawContext& ctx, Order order, Geometry geometry) {
  const ModelDerivatives hd = h_derivs(state, model, ctx, order == Order::Second);
  return estimate(state, hd, ctx, order, geometry);
}

}  // namespace gva
