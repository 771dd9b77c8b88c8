#ifndef GVA_ESTIMATORS_HPP
#define GVA_ESTIMATORS_HPP

#include "gva/common.hpp"
#include "gva/models.hpp"
#include "gva/trimat.hpp"
#include "gva/variational.hpp"

namespace gva {

enum class Order { First, Second };
enum class Geometry { Euclidean, Natural };

// One iteration's stochastic ascent direction: a vector for mu and a masked
// lower-triangular matrix for the factor. Only the lower triangle of the
// G/F matrices is ever formed or kept; the updates consume nothing else.
struct GradientEstimate {
  Vector mu_dir;
  LowerTriangular factor_dir;
  Order order;
  Geometry geometry;
};

// Euclidean ascent direction for mu: grad h itself.
Vector mean_dir_euclidean(const Vector& gradh);

// Natural ascent direction for mu: Sigma grad h, via factor products
// (covariance) or two triangular solves (precision).
Vector mean_dir_natural(const GaussianVariational& state, const Vector& gradh);

// First-order factor direction, covariance form: bar(G1), G1 = grad h z^T.
LowerTriangular g1(const Vector& gradh, const Vector& z);

// Second-order factor direction, covariance form: bar(F1), F1 = hess h C.
LowerTriangular f1(const Matrix& hessh, const LowerTriangular& c);

// First-order factor direction, precision form:
// bar(G2), G2 = -T^{-T} z grad h^T T^{-T}.
LowerTriangular g2(const Vector& gradh, const Vector& z, const LowerTriangular& t);

// Second-order factor direction, precision form:
// bar(F2), F2 = -T^{-T} T^{-1} hess h T^{-T}, triangular solves only.
LowerTriangular f2(const Matrix& hessh, const LowerTriangular& t);

// Natural-gradient rescaling of a Euclidean factor direction:
// factor * barbar(factor^T * euclid_bar). The same formula serves both
// parametrizations, with (C, bar G1/bar F1) or (T, bar G2/bar F2).
LowerTriangular naturalize(const LowerTriangular& factor, const LowerTriangular& euclid_bar);

// Full per-draw estimate from precomputed h derivatives. hd must carry a
// Hessian when order is Second.
GradientEstimate estimate(const GaussianVariational& state, const ModelDerivatives& hd,
                          const DrawContext& ctx, Order order, Geometry geometry);

// Convenience overload that performs the single model evaluation itself.
GradientEstimate estimate(const GaussianVariational& state, const LogJoint& model,
                          const DrawContext& ctx, Order order, Geometry geometry);

}  // namespace gva

#endif  // GVA_ESTIMATORS_HPP
