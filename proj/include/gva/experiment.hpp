#ifndef GVA_EXPERIMENT_HPP
#define GVA_EXPERIMENT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gva/data.hpp"
#include "gva/models.hpp"
#include "gva/optim.hpp"

namespace gva {

struct SyntheticDataSpec {
  Index n = 500;
  Index d = 20;
  std::vector<double> theta_true;  // empty: drawn as N(0, theta_scale^2) from seed
  double theta_scale = 1.0;
  std::uint64_t seed = 1;
  bool intercept = false;
};

struct CsvDataSpec {
  std::string path;
  CsvSchema schema;
};

struct DataSpec {
  std::optional<CsvDataSpec> csv;
  std::optional<SyntheticDataSpec> synthetic;
};

// One experiment: a dataset, a prior variance, a grid of run configurations
// and output settings. Parsed from a JSON spec file (schema in the README).
struct ExperimentSpec {
  DataSpec dataset;
  double sigma0_sq = 100.0;
  std::vector<RunConfig> grid;
  std::string out_dir = "gva-out";
  long trace_thin = 10;
};

ExperimentSpec parse_spec_text(const std::string& text);
ExperimentSpec parse_spec_file(const std::string& path);

Dataset materialize_dataset(const DataSpec& spec);

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitGateFailure = 1;
inline constexpr int kExitConfigError = 2;

// Executes every grid cell (workers > 1 runs cells concurrently; each cell
// owns its RNG stream), writing per-cell trace + summary files and an
// aggregate summary table. Returns kExitGateFailure if any cell terminated
// with FACTOR_FAILURE and keep_going is false.
int cmd_run(const ExperimentSpec& spec, int workers = 1, bool keep_going = false);

struct CheckOptions {
  bool full = false;  // quick: n = 1e4, d = 3; full: n = 1e6, d = 5
  std::uint64_t seed = 20240901;
  std::string out_dir;               // empty: stdout only
  bool inject_hessian_sign_flip = false;  // fault-injection hook for tests
};

// Runs the five identity checks plus the variance comparison and gates them.
int cmd_check(const CheckOptions& opts);

struct VarianceOptions {
  std::optional<ExperimentSpec> spec;  // dataset source; absent: built-in synthetic
  std::string at = "optimum";          // "optimum" or "offset"
  long n_samples = 10000;
  std::uint64_t seed = 20240902;
  std::string out_dir;
};

// Variance comparison of the first- vs second-order factor estimators under
// both parametrizations. At "optimum" the target is the quadratic expansion
// at the Laplace mode (second-order estimators are exactly constant there);
// at "offset" the original model is evaluated with the mean displaced.
int cmd_variance(const VarianceOptions& opts);

struct DatagenOptions {
  Index n = 500;
  Index d = 20;
  double theta_scale = 1.0;
  std::uint64_t seed = 1;
  bool intercept = false;
  std::string out_path;
};

// Writes a synthetic logistic dataset as CSV plus a sidecar JSON recording
// the generating settings and true coefficients.
int cmd_datagen(const DatagenOptions& opts);

}  // namespace gva

#endif  // GVA_EXPERIMENT_HPP
