#ifndef GVA_OPTIM_HPP
#define GVA_OPTIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gva/common.hpp"
#include "gva/estimators.hpp"
#include "gva/models.hpp"
#include "gva/variational.hpp"

namespace gva {

// The four stochastic variational inference loops: 1x updates (mu, C), 2x
// updates (mu, T); E uses Euclidean gradient directions, N natural ones.
enum class Algorithm { A1E, A1N, A2E, A2N };

Parametrization algorithm_parametrization(Algorithm a);
Geometry algorithm_geometry(Algorithm a);
std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

enum class Stepper { Adam, Snngm };
std::string to_string(Stepper s);
Stepper stepper_from_string(const std::string& s);

// Adam over a flattened parameter block, ascent convention (the returned
// increment is added to the parameters).
struct AdamState {
  Vector m;
  Vector v;
  long t = 0;
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(Index size, double alpha_ = 1e-3)
      : m(Vector::Zero(size)), v(Vector::Zero(size)), alpha(alpha_) {}

  Vector step(const Vector& g);
};

// Stochastic normalized natural gradient ascent with momentum: the increment
// keeps the (bias-corrected, momentum-averaged) direction and fixes its
// magnitude at alpha. norm_floor guards the all-zero-gradient case.
struct SnngmState {
  Vector m;
  long t = 0;
  double alpha = 1e-3;
  double beta = 0.9;
  double norm_floor = 1e-12;
  bool per_block = false;  // normalize mu-block and factor-block separately
  Index mu_size = 0;       // used only when per_block

  explicit SnngmState(Index size, double alpha_ = 1e-3)
      : m(Vector::Zero(size)), alpha(alpha_) {}

  Vector step(const Vector& g);
};

struct RunConfig {
  Algorithm algorithm = Algorithm::A1E;
  Order order = Order::First;
  Stepper stepper = Stepper::Adam;
  long max_iters = 100000;
  long window = 1000;       // averaging/stopping window, in iterations
  double stop_tol = 0.0;    // stop once a window mean improves by <= this
  std::uint64_t seed = 0;
  double alpha = 1e-3;      // stepper learning rate
  bool snngm_per_block = false;

  // Throws on invalid combinations (Snngm with a Euclidean algorithm,
  // window > max_iters, non-positive sizes, negative stop_tol).
  void validate() const;
};

enum class Termination { Converged, MaxIters, FactorFailure };
std::string to_string(Termination t);

struct RunRecord {
  long iterations = 0;
  std::vector<double> elbo_trace;      // single-sample h(theta), one per iteration
  std::vector<double> averaged_trace;  // sliding window means; NaN until the first window fills
  double final_elbo = 0.0;             // mean of the last window (or all, if shorter)
  double wall_time_s = 0.0;
  Termination termination = Termination::MaxIters;
};

// Runs the configured algorithm, mutating state to the fitted values. One
// draw, one model evaluation and one joint (mu, factor) update per
// iteration. Fully deterministic given cfg.seed, wall time aside.
RunRecord run(const LogJoint& model, GaussianVariational& state, const RunConfig& cfg);

}  // namespace gva

#endif  // GVA_OPTIM_HPP
