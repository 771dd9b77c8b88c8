#include "gva/diagnostics.hpp"

#include <cmath>

#include "gva/estimators.hpp"
#include "gva/rng.hpp"

namespace gva {

void RunningMoments::push(const Vector& x) {
  if (x.size() != mean_.size()) throw DimensionError("RunningMoments::push: size mismatch");
  ++n_;
  const Vector delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta.cwiseProduct(x - mean_);
}

void RunningMoments::merge(const RunningMoments& other) {
  if (other.mean_.size() != mean_.size()) throw DimensionError("RunningMoments::merge: size mismatch");
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const Vector delta = other.mean_ - mean_;
  mean_ = (na * mean_ + nb * other.mean_) / (na + nb);
  m2_ += other.m2_ + delta.cwiseProduct(delta) * (na * nb / (na + nb));
  n_ += other.n_;
}

Vector RunningMoments::variance() const {
  if (n_ < 2) return Vector::Zero(mean_.size());
  return m2_ / static_cast<double>(n_ - 1);
}

Vector RunningMoments::std_error() const {
  if (n_ < 2) return Vector::Zero(mean_.size());
  return (variance() / static_cast<double>(n_)).cwiseSqrt();
}

std::string to_string(Identity id) {
  switch (id) {
    case Identity::BonnetStein: return "BONNET_STEIN";
    case Identity::Price: return "PRICE";
    case Identity::Lemma1: return "LEMMA1";
    case Identity::Thm1A: return "THM1A";
    case Identity::Thm1B: return "THM1B";
  }
  return "?";
}

namespace {

Matrix reshape(const Vector& flat, Index rows, Index cols) {
  return Eigen::Map<const Matrix>(flat.data(), rows, cols);
}

Vector flatten(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

}  // namespace

IdentityReport check_identity(Identity which, const GaussianVariational& state,
                              const LogJoint& f, long n_samples, std::uint64_t seed) {
  if (n_samples < 2) throw std::invalid_argument("check_identity: need at least 2 samples");
  const Index d = state.dim();
  if (f.dim() != d) throw DimensionError("check_identity: state and function dimensions differ");
  if (which == Identity::Thm1A && state.parametrization() != Parametrization::Covariance) {
    throw std::invalid_argument("check_identity: THM1A needs a covariance-parametrized state");
  }
  if (which == Identity::Thm1B && state.parametrization() != Parametrization::Precision) {
    throw std::invalid_argument("check_identity: THM1B needs a precision-parametrized state");
  }

  const bool needs_hessian = which == Identity::Price || which == Identity::Thm1A ||
                             which == Identity::Thm1B;
  const bool vector_valued = which == Identity::BonnetStein;
  const Index flat = vector_valued ? d : d * d;

  RunningMoments lhs(flat);
  RunningMoments rhs(flat);
  NormalStream rng(seed);
  const LowerTriangular& factor = state.factor();

  for (long i = 0; i < n_samples; ++i) {
    const DrawContext ctx = draw(state, rng);
    const ModelDerivatives fd = f.eval(ctx.theta, needs_hessian);
    const Vector delta = ctx.theta - state.mu();
    // Sigma^{-1}(theta - mu), from z: C^{-T} z or T z.
    const Vector siginv_delta = state.parametrization() == Parametrization::Covariance
                                    ? tri_solve(factor, ctx.z, true)
                                    : Vector(factor.mat() * ctx.z);

    switch (which) {
      case Identity::BonnetStein:
        lhs.push(siginv_delta * fd.value);
        rhs.push(fd.grad);
        break;
      case Identity::Price:
        // As written: both sides carry the factor 1/2.
        lhs.push(flatten(0.5 * siginv_delta * fd.grad.transpose()));
        rhs.push(flatten(0.5 * *fd.hess));
        break;
      case Identity::Lemma1:
        lhs.push(flatten((siginv_delta * delta.transpose() - Matrix::Identity(d, d)) * fd.value));
        rhs.push(flatten(fd.grad * delta.transpose()));
        break;
      case Identity::Thm1A:
        // G1 = grad f (theta - mu)^T C^{-T} = grad f z^T; F1 = hess f C.
        lhs.push(flatten(fd.grad * ctx.z.transpose()));
        rhs.push(flatten(*fd.hess * factor.mat()));
        break;
      case Identity::Thm1B: {
        // G2 = -(theta - mu) grad f^T T^{-T}; F2 = -T^{-T} T^{-1} hess f T^{-T}.
        const Vector b = tri_solve(factor, fd.grad, false);
        lhs.push(flatten(-delta * b.transpose()));
        const Matrix right = tri_solve(factor, *fd.hess, false).transpose();
        rhs.push(flatten(-tri_solve(factor, Matrix(tri_solve(factor, right, false)), true)));
        break;
      }
    }
  }

  IdentityReport rep;
  rep.identity = which;
  rep.n_samples = n_samples;
  const Index rows = d;
  const Index cols = vector_valued ? 1 : d;
  rep.lhs_mean = reshape(lhs.mean(), rows, cols);
  rep.rhs_mean = reshape(rhs.mean(), rows, cols);

  const Vector gap = (lhs.mean() - rhs.mean()).cwiseAbs();
  const Vector se = (lhs.std_error().cwiseAbs2() + rhs.std_error().cwiseAbs2()).cwiseSqrt();
  rep.max_abs_gap = gap.maxCoeff();
  rep.max_gap_in_se = 0.0;
  for (Index k = 0; k < gap.size(); ++k) {
    const double g = gap[k] == 0.0 ? 0.0 : gap[k] / se[k];  // 0/0 counts as agreement
    rep.max_gap_in_se = std::max(rep.max_gap_in_se, g);
  }
  return rep;
}

std::vector<VarianceReport> compare_variance(const GaussianVariational& state,
                                             const LogJoint& model, long n_samples,
                                             std::uint64_t seed) {
  if (n_samples < 2) throw std::invalid_argument("compare_variance: need at least 2 samples");
  const Index d = state.dim();
  const Index flat = halfvec_len(d);
  const bool covariance = state.parametrization() == Parametrization::Covariance;

  RunningMoments g_mom(flat);
  RunningMoments f_mom(flat);
  NormalStream rng(seed);

  for (long i = 0; i < n_samples; ++i) {
    const DrawContext ctx = draw(state, rng);
    const ModelDerivatives hd = h_derivs(state, model, ctx, /*want_hessian=*/true);
    if (covariance) {
      g_mom.push(vech(g1(hd.grad, ctx.z).mat()));
      f_mom.push(vech(f1(*hd.hess, state.factor()).mat()));
    } else {
      g_mom.push(vech(g2(hd.grad, ctx.z, state.factor()).mat()));
      f_mom.push(vech(f2(*hd.hess, state.factor()).mat()));
    }
  }

  auto make_report = [&](const char* name, const RunningMoments& mom) {
    VarianceReport rep;
    rep.estimator = name;
    rep.n_samples = n_samples;
    rep.entry_variances = unvech(mom.variance());
    rep.max_entry_variance = mom.variance().maxCoeff();
    return rep;
  };
  return {make_report(covariance ? "G1" : "G2", g_mom),
          make_report(covariance ? "F1" : "F2", f_mom)};
}

ElboEstimate elbo_estimate(const GaussianVariational& state, const LogJoint& model,
                           long n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("elbo_estimate: need at least 1 sample");
  RunningMoments mom(1);
  NormalStream rng(seed);
  Vector h(1);
  for (long i = 0; i < n_samples; ++i) {
    const DrawContext ctx = draw(state, rng);
    h[0] = model.eval(ctx.theta, false).value - log_q(state, ctx.theta);
    mom.push(h);
  }
  return {mom.mean()[0], mom.std_error()[0], n_samples};
}

QuadraticModel laplace_fit(const LogJoint& model, const Vector& x0, int max_newton,
                           double grad_tol) {
  Vector theta = x0;
  if (theta.size() != model.dim()) throw DimensionError("laplace_fit: bad starting point length");
  double value = 0.0;
  for (int it = 0; it < max_newton; ++it) {
    const ModelDerivatives md = model.eval(theta, true);
    value = md.value;
    if (md.grad.lpNorm<Eigen::Infinity>() <= grad_tol) break;
    // Newton ascent step: solve (-hess) dx = grad with a damped fallback.
    const Matrix neg_hess = -*md.hess;
    const LowerTriangular l = cholesky(neg_hess);
    const Vector dx = tri_solve(l, tri_solve(l, md.grad, false), true);
    double step = 1.0;
    Vector cand = theta + step * dx;
    while (model.eval(cand, false).value < value && step > 1e-8) {
      step *= 0.5;
      cand = theta + step * dx;
    }
    theta = cand;
  }
  const ModelDerivatives md = model.eval(theta, true);
  return QuadraticModel(theta, -*md.hess, md.value);
}

double laplace_elbo(const QuadraticModel& m) {
  const LowerTriangular l = cholesky(m.precision());
  double half_logdet = 0.0;
  for (Index j = 0; j < l.dim(); ++j) half_logdet += std::log(l(j, j));
  return m.ell0() + 0.5 * m.dim() * std::log(2.0 * M_PI) - half_logdet;
}

double quadratic_elbo(const QuadraticModel& m, const GaussianVariational& state) {
  if (state.dim() != m.dim()) throw DimensionError("quadratic_elbo: dimension mismatch");
  const Matrix sigma = state.sigma();
  const Vector delta = state.mu() - m.theta_hat();
  const double d = static_cast<double>(m.dim());
  const LowerTriangular l = cholesky(sigma);
  double half_logdet = 0.0;
  for (Index j = 0; j < l.dim(); ++j) half_logdet += std::log(l(j, j));
  return m.ell0() - 0.5 * (m.precision() * sigma).trace() - 0.5 * delta.dot(m.precision() * delta) +
         0.5 * d * (1.0 + std::log(2.0 * M_PI)) + half_logdet;
}

}  // namespace gva
