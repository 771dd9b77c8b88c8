// Command-line front end: run (fit a grid of configurations), check
// (Monte Carlo identity gates), variance (estimator variance comparison)
// and datagen (synthetic logistic data).
#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "gva/common.hpp"
#include "gva/experiment.hpp"
#include "gva/rng.hpp"

namespace {

int dispatch(int argc, char** argv) {
  CLI::App app{"Gaussian variational approximation by stochastic gradient ascent"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "Fit every cell of an experiment grid");
  std::string run_spec_path;
  std::string run_out;
  std::optional<std::uint64_t> run_seed;
  int workers = 1;
  bool keep_going = false;
  run_cmd->add_option("--spec", run_spec_path, "Experiment spec JSON file")->required();
  run_cmd->add_option("--out", run_out, "Output directory (overrides the spec)");
  run_cmd->add_option("--seed", run_seed, "Base seed (overrides the spec grid seed mix)");
  run_cmd->add_option("--workers", workers, "Concurrent grid cells")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--keep-going", keep_going, "Exit 0 even if a cell hits FACTOR_FAILURE");

  // check
  auto* check_cmd = app.add_subcommand("check", "Monte Carlo identity and variance gates");
  gva::CheckOptions check_opts;
  bool quick = false;
  bool full = false;
  check_cmd->add_flag("--quick", quick, "10^4 samples, d = 3 (default)");
  check_cmd->add_flag("--full", full, "10^6 samples, d = 5");
  check_cmd->add_option("--seed", check_opts.seed, "Seed for the checks");
  check_cmd->add_option("--out", check_opts.out_dir, "Directory for check_report.json");
  check_cmd
      ->add_flag("--inject-hessian-sign-flip", check_opts.inject_hessian_sign_flip,
                 "Fault injection: negate the model Hessian (the gates must then fail)")
      ->group("");  // hidden

  // variance
  auto* var_cmd = app.add_subcommand("variance", "First- vs second-order estimator variances");
  gva::VarianceOptions var_opts;
  std::string var_spec_path;
  var_cmd->add_option("--spec", var_spec_path, "Experiment spec JSON (dataset + prior source)");
  var_cmd->add_option("--at", var_opts.at, "\"optimum\" or \"offset\"")
      ->check(CLI::IsMember({"optimum", "offset"}));
  var_cmd->add_option("--samples", var_opts.n_samples, "Monte Carlo draws")
      ->check(CLI::PositiveNumber);
  var_cmd->add_option("--seed", var_opts.seed, "Seed for the draws");
  var_cmd->add_option("--out", var_opts.out_dir, "Directory for variance_report.json");

  // datagen
  auto* gen_cmd = app.add_subcommand("datagen", "Write a synthetic logistic dataset");
  gva::DatagenOptions gen_opts;
  gen_cmd->add_option("--n", gen_opts.n, "Rows")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--d", gen_opts.d, "Features")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--theta-scale", gen_opts.theta_scale, "Std dev of the true coefficients");
  gen_cmd->add_option("--seed", gen_opts.seed, "Seed");
  gen_cmd->add_flag("--intercept", gen_opts.intercept, "Make the first column all ones");
  gen_cmd->add_option("--out", gen_opts.out_path, "Output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) {
    gva::ExperimentSpec spec = gva::parse_spec_file(run_spec_path);
    if (!run_out.empty()) spec.out_dir = run_out;
    if (run_seed) {
      std::size_t idx = 0;
      for (auto& cell : spec.grid) cell.seed = gva::mix_seed(*run_seed, idx++);
    }
    return gva::cmd_run(spec, workers, keep_going);
  }
  if (check_cmd->parsed()) {
    if (quick && full) throw gva::LoadError("--quick and --full are mutually exclusive");
    check_opts.full = full;
    return gva::cmd_check(check_opts);
  }
  if (var_cmd->parsed()) {
    if (!var_spec_path.empty()) var_opts.spec = gva::parse_spec_file(var_spec_path);
    return gva::cmd_variance(var_opts);
  }
  return gva::cmd_datagen(gen_opts);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const gva::LoadError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gva::kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gva::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gva::kExitConfigError;
  }
}
