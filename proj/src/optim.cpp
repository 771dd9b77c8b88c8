#include "gva/optim.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "gva/rng.hpp"
#include "gva/trimat.hpp"

namespace gva {

Parametrization algorithm_parametrization(Algorithm a) {
  return (a == Algorithm::A1E || a == Algorithm::A1N) ? Parametrization::Covariance
                                                      : Parametrization::Precision;
}

Geometry algorithm_geometry(Algorithm a) {
  return (a == Algorithm::A1E || a == Algorithm::A2E) ? Geometry::Euclidean : Geometry::Natural;
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::A1E: return "1E";
    case Algorithm::A1N: return "1N";
    case Algorithm::A2E: return "2E";
    case Algorithm::A2N: return "2N";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "1E") return Algorithm::A1E;
  if (s == "1N") return Algorithm::A1N;
  if (s == "2E") return Algorithm::A2E;
  if (s == "2N") return Algorithm::A2N;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected 1E, 1N, 2E or 2N)");
}

std::string to_string(Stepper s) { return s == Stepper::Adam ? "adam" : "snngm"; }

Stepper stepper_from_string(const std::string& s) {
  if (s == "adam") return Stepper::Adam;
  if (s == "snngm") return Stepper::Snngm;
  throw std::invalid_argument("unknown stepper '" + s + "' (expected adam or snngm)");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "CONVERGED";
    case Termination::MaxIters: return "MAX_ITERS";
    case Termination::FactorFailure: return "FACTOR_FAILURE";
  }
  return "?";
}

Vector AdamState::step(const Vector& g) {
  if (g.size() != m.size()) throw DimensionError("AdamState::step: gradient size mismatch");
  ++t;
  m = beta1 * m + (1.0 - beta1) * g;
  v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
  const double m_corr = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double v_corr = 1.0 - std::pow(beta2, static_cast<double>(t));
  return (alpha * (m / m_corr).array() / ((v / v_corr).array().sqrt() + eps)).matrix();
}

Vector SnngmState::step(const Vector& g) {
  if (g.size() != m.size()) throw DimensionError("SnngmState::step: gradient size mismatch");
  ++t;
  m = beta * m + (1.0 - beta) * g;
  const Vector m_hat = m / (1.0 - std::pow(beta, static_cast<double>(t)));
  if (!per_block) {
    return alpha * m_hat / std::max(m_hat.norm(), norm_floor);
  }
  Vector inc(m_hat.size());
  inc.head(mu_size) = alpha * m_hat.head(mu_size) / std::max(m_hat.head(mu_size).norm(), norm_floor);
  const Index rest = m_hat.size() - mu_size;
  inc.tail(rest) = alpha * m_hat.tail(rest) / std::max(m_hat.tail(rest).norm(), norm_floor);
  return inc;
}

void RunConfig::validate() const {
  if (stepper == Stepper::Snngm && algorithm_geometry(algorithm) == Geometry::Euclidean) {
    throw std::invalid_argument("RunConfig: Snngm is only valid with natural-gradient algorithms (1N/2N)");
  }
  if (max_iters < 1) throw std::invalid_argument("RunConfig: max_iters must be positive");
  if (window < 1) throw std::invalid_argument("RunConfig: window must be positive");
  if (window > max_iters) throw std::invalid_argument("RunConfig: window must not exceed max_iters");
  if (stop_tol < 0.0) throw std::invalid_argument("RunConfig: stop_tol must be nonnegative");
}

namespace {

constexpr int kMaxHalvings = 10;

double window_mean(const std::vector<double>& xs, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += xs[i];
  return s / static_cast<double>(end - begin);
}

}  // namespace

RunRecord run(const LogJoint& model, GaussianVariational& state, const RunConfig& cfg) {
  cfg.validate();
  if (state.parametrization() != algorithm_parametrization(cfg.algorithm)) {
    throw std::invalid_argument("run: state parametrization does not match algorithm " +
                                to_string(cfg.algorithm));
  }
  if (state.dim() != model.dim()) {
    throw DimensionError("run: state and model dimensions differ");
  }

  const Index d = state.dim();
  const Index stacked = d + halfvec_len(d);
  const Geometry geometry = algorithm_geometry(cfg.algorithm);
  const bool second = cfg.order == Order::Second;

  AdamState adam(stacked, cfg.alpha);
  SnngmState snngm(stacked, cfg.alpha);
  snngm.per_block = cfg.snngm_per_block;
  snngm.mu_size = d;

  NormalStream rng(cfg.seed);
  RunRecord rec;
  rec.elbo_trace.reserve(static_cast<std::size_t>(cfg.max_iters));
  rec.termination = Termination::MaxIters;

  double prev_window = 0.0;
  bool have_prev_window = false;

  const auto t0 = std::chrono::steady_clock::now();
  long t = 0;
  while (t < cfg.max_iters) {
    ++t;
    const DrawContext ctx = draw(state, rng);
    const ModelDerivatives hd = h_derivs(state, model, ctx, second);
    rec.elbo_trace.push_back(hd.value);

    const GradientEstimate est = estimate(state, hd, ctx, cfg.order, geometry);
    Vector g(stacked);
    g.head(d) = est.mu_dir;
    g.tail(stacked - d) = vech(est.factor_dir.mat());

    const Vector inc = cfg.stepper == Stepper::Adam ? adam.step(g) : snngm.step(g);
    const Vector mu_inc = inc.head(d);
    const LowerTriangular factor_inc = unvech(inc.tail(stacked - d));

    // Positive-diagonal policy: if the stepped factor would lose a positive
    // diagonal, halve the applied step and retry, up to kMaxHalvings times.
    double scale = 1.0;
    bool accepted = false;
    for (int attempt = 0; attempt <= kMaxHalvings; ++attempt) {
      Matrix trial = state.factor().mat();
      trial.triangularView<Eigen::Lower>() += scale * factor_inc.mat();
      if ((trial.diagonal().array() > 0.0).all()) {
        state.update(state.mu() + scale * mu_inc, bar(trial));
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) {
      rec.termination = Termination::FactorFailure;
      break;
    }

    // Non-overlapping window means drive the stopping test.
    if (t % cfg.window == 0) {
      const std::size_t end = static_cast<std::size_t>(t);
      const double wm = window_mean(rec.elbo_trace, end - static_cast<std::size_t>(cfg.window), end);
      if (have_prev_window && wm <= prev_window + cfg.stop_tol) {
        rec.termination = Termination::Converged;
        break;
      }
      prev_window = wm;
      have_prev_window = true;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();

  rec.iterations = t;
  rec.wall_time_s = std::chrono::duration<double>(t1 - t0).count();

  const std::size_t n = rec.elbo_trace.size();
  const std::size_t w = static_cast<std::size_t>(cfg.window);
  rec.averaged_trace.assign(n, std::numeric_limits<double>::quiet_NaN());
  if (n >= w) {
    double s = 0.0;
    for (std::size_t i = 0; i < w; ++i) s += rec.elbo_trace[i];
    rec.averaged_trace[w - 1] = s / static_cast<double>(w);
    for (std::size_t i = w; i < n; ++i) {
      s += rec.elbo_trace[i] - rec.elbo_trace[i - w];
      rec.averaged_trace[i] = s / static_cast<double>(w);
    }
  }
  rec.final_elbo = n == 0 ? 0.0 : window_mean(rec.elbo_trace, n >= w ? n - w : 0, n);
  return rec;
}

}  // namespace gva
