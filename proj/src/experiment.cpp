#include "gva/experiment.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "gva/diagnostics.hpp"
#include "gva/estimators.hpp"
#include "gva/rng.hpp"
#include "gva/trimat.hpp"
#include "gva/variational.hpp"

namespace gva {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

const json& require_key(const json& j, const std::string& key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw LoadError("spec: missing \"" + key + "\" in " + where);
  return *it;
}

double get_num(const json& j, const std::string& key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw LoadError("spec: \"" + key + "\" must be a number");
  return it->get<double>();
}

long get_int(const json& j, const std::string& key, long fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_integer()) throw LoadError("spec: \"" + key + "\" must be an integer");
  return it->get<long>();
}

bool get_bool(const json& j, const std::string& key, bool fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) throw LoadError("spec: \"" + key + "\" must be a boolean");
  return it->get<bool>();
}

std::string get_str(const json& j, const std::string& key, const std::string& fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_string()) throw LoadError("spec: \"" + key + "\" must be a string");
  return it->get<std::string>();
}

Order order_from_int(long o) {
  if (o == 1) return Order::First;
  if (o == 2) return Order::Second;
  throw LoadError("spec: order must be 1 or 2, got " + std::to_string(o));
}

int order_to_int(Order o) { return o == Order::First ? 1 : 2; }

void fill_cell_common(RunConfig& cfg, const json& g) {
  cfg.max_iters = get_int(g, "max_iters", cfg.max_iters);
  cfg.window = get_int(g, "window", cfg.window);
  cfg.stop_tol = get_num(g, "stop_tol", cfg.stop_tol);
  cfg.alpha = get_num(g, "alpha", cfg.alpha);
  cfg.snngm_per_block = get_bool(g, "snngm_per_block", cfg.snngm_per_block);
}

std::vector<RunConfig> parse_grid(const json& g) {
  std::vector<RunConfig> cells;
  if (g.contains("cells")) {
    const json& list = g.at("cells");
    if (!list.is_array() || list.empty())
      throw LoadError("spec: grid.cells must be a non-empty array");
    std::uint64_t base_seed = static_cast<std::uint64_t>(get_int(g, "seed", 1));
    std::size_t idx = 0;
    for (const json& c : list) {
      RunConfig cfg;
      cfg.algorithm = algorithm_from_string(require_key(c, "algorithm", "grid cell").get<std::string>());
      cfg.order = order_from_int(require_key(c, "order", "grid cell").get<long>());
      cfg.stepper = stepper_from_string(get_str(c, "stepper", "adam"));
      fill_cell_common(cfg, g);   // grid-level defaults first,
      fill_cell_common(cfg, c);   // then per-cell overrides
      cfg.seed = c.contains("seed") ? static_cast<std::uint64_t>(get_int(c, "seed", 0))
                                    : mix_seed(base_seed, idx);
      cfg.validate();
      cells.push_back(cfg);
      ++idx;
    }
    return cells;
  }

  // Cross product: algorithms x orders x steppers, skipping the invalid
  // Snngm-with-Euclidean combinations. Cell seeds are mixed from the base
  // seed by enumeration index so the assignment is stable.
  std::vector<Algorithm> algorithms;
  for (const json& a : require_key(g, "algorithms", "grid"))
    algorithms.push_back(algorithm_from_string(a.get<std::string>()));
  std::vector<Order> orders;
  if (g.contains("orders"))
    for (const json& o : g.at("orders")) orders.push_back(order_from_int(o.get<long>()));
  else
    orders = {Order::First, Order::Second};
  std::vector<Stepper> steppers;
  if (g.contains("steppers"))
    for (const json& s : g.at("steppers")) steppers.push_back(stepper_from_string(s.get<std::string>()));
  else
    steppers = {Stepper::Adam};

  std::uint64_t base_seed = static_cast<std::uint64_t>(get_int(g, "seed", 1));
  std::size_t idx = 0;
  for (Algorithm a : algorithms)
    for (Order o : orders)
      for (Stepper s : steppers) {
        std::size_t this_idx = idx++;
        if (s == Stepper::Snngm && algorithm_geometry(a) == Geometry::Euclidean) continue;
        RunConfig cfg;
        cfg.algorithm = a;
        cfg.order = o;
        cfg.stepper = s;
        fill_cell_common(cfg, g);
        cfg.seed = mix_seed(base_seed, this_idx);
        cfg.validate();
        cells.push_back(cfg);
      }
  if (cells.empty()) throw LoadError("spec: grid expands to zero cells");
  return cells;
}

DataSpec parse_dataset(const json& d) {
  DataSpec out;
  const std::string type = require_key(d, "type", "dataset").get<std::string>();
  if (type == "csv") {
    CsvDataSpec c;
    c.path = require_key(d, "path", "dataset").get<std::string>();
    c.schema.label_column = require_key(d, "label_column", "dataset").get<std::string>();
    c.schema.positive_label = get_str(d, "positive_label", "1");
    c.schema.standardize = get_bool(d, "standardize", false);
    c.schema.intercept = get_bool(d, "intercept", false);
    std::string delim = get_str(d, "delimiter", ",");
    if (delim.size() != 1) throw LoadError("spec: dataset.delimiter must be a single character");
    c.schema.delimiter = delim[0];
    out.csv = std::move(c);
  } else if (type == "synthetic") {
    SyntheticDataSpec s;
    s.n = get_int(d, "n", s.n);
    s.d = get_int(d, "d", s.d);
    s.theta_scale = get_num(d, "theta_scale", s.theta_scale);
    s.seed = static_cast<std::uint64_t>(get_int(d, "seed", 1));
    s.intercept = get_bool(d, "intercept", false);
    if (d.contains("theta_true")) {
      for (const json& v : d.at("theta_true")) s.theta_true.push_back(v.get<double>());
      if (static_cast<Index>(s.theta_true.size()) != s.d)
        throw LoadError("spec: theta_true length does not match d");
    }
    if (s.n < 1 || s.d < 1) throw LoadError("spec: synthetic n and d must be positive");
    out.synthetic = std::move(s);
  } else {
    throw LoadError("spec: dataset.type must be \"csv\" or \"synthetic\", got \"" + type + "\"");
  }
  return out;
}

}  // namespace

ExperimentSpec parse_spec_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw LoadError(std::string("spec: invalid JSON: ") + e.what());
  }
  ExperimentSpec spec;
  spec.dataset = parse_dataset(require_key(j, "dataset", "spec"));
  if (j.contains("model")) spec.sigma0_sq = get_num(j.at("model"), "sigma0_sq", spec.sigma0_sq);
  if (spec.sigma0_sq <= 0.0) throw LoadError("spec: model.sigma0_sq must be positive");
  spec.grid = parse_grid(require_key(j, "grid", "spec"));
  if (j.contains("output")) {
    const json& o = j.at("output");
    spec.out_dir = get_str(o, "dir", spec.out_dir);
    spec.trace_thin = get_int(o, "trace_thin", spec.trace_thin);
    if (spec.trace_thin < 1) throw LoadError("spec: output.trace_thin must be >= 1");
  }
  return spec;
}

ExperimentSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("spec: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec_text(ss.str());
}

Dataset materialize_dataset(const DataSpec& spec) {
  if (spec.csv.has_value() == spec.synthetic.has_value())
    throw LoadError("spec: dataset must be exactly one of csv or synthetic");
  if (spec.csv) return load_csv(spec.csv->path, spec.csv->schema);
  const SyntheticDataSpec& s = *spec.synthetic;
  Vector theta(s.d);
  if (!s.theta_true.empty()) {
    for (Index i = 0; i < s.d; ++i) theta[i] = s.theta_true[static_cast<std::size_t>(i)];
  } else {
    NormalStream rng(mix_seed(s.seed, 0x7e7a));
    theta = s.theta_scale * rng.next_vector(s.d);
  }
  return synth_logistic(s.n, s.d, theta, s.seed, s.intercept);
}

namespace {

struct CellResult {
  RunConfig cfg;
  RunRecord record;
  Vector mu;
  std::string error;  // non-empty: the cell threw
};

std::string cell_tag(std::size_t idx, const RunConfig& cfg) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "cell%02zu_%s_o%d_%s", idx,
                to_string(cfg.algorithm).c_str(), order_to_int(cfg.order),
                to_string(cfg.stepper).c_str());
  return buf;
}

void write_trace(const fs::path& path, const RunRecord& rec, long thin, long window) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  out << "iteration,elbo,elbo_avg\n";
  const long total = static_cast<long>(rec.elbo_trace.size());
  for (long t = 1; t <= total; ++t) {
    if (t % thin != 0 && t % window != 0 && t != total) continue;
    out << t << ',' << fmt(rec.elbo_trace[static_cast<std::size_t>(t - 1)]) << ',';
    double avg = rec.averaged_trace[static_cast<std::size_t>(t - 1)];
    out << (std::isnan(avg) ? std::string("nan") : fmt(avg)) << '\n';
  }
}

json run_config_json(const RunConfig& cfg) {
  return json{{"algorithm", to_string(cfg.algorithm)},
              {"order", order_to_int(cfg.order)},
              {"stepper", to_string(cfg.stepper)},
              {"max_iters", cfg.max_iters},
              {"window", cfg.window},
              {"stop_tol", cfg.stop_tol},
              {"alpha", cfg.alpha},
              {"snngm_per_block", cfg.snngm_per_block},
              {"seed", cfg.seed}};
}

}  // namespace

int cmd_run(const ExperimentSpec& spec, int workers, bool keep_going) {
  if (workers < 1) throw LoadError("workers must be >= 1");
  Dataset ds = materialize_dataset(spec.dataset);
  LogisticModel model(ds.X, ds.y, spec.sigma0_sq);

  fs::path out_dir(spec.out_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw LoadError("cannot create output directory " + spec.out_dir + ": " + ec.message());

  const std::size_t n_cells = spec.grid.size();
  std::vector<CellResult> results(n_cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n_cells) return;
      CellResult& r = results[i];
      r.cfg = spec.grid[i];
      try {
        GaussianVariational state = GaussianVariational::standard(
            model.dim(), algorithm_parametrization(r.cfg.algorithm));
        r.record = run(model, state, r.cfg);
        r.mu = state.mu();
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  if (workers == 1 || n_cells <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers), n_cells);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::ofstream summary(out_dir / "summary.csv");
  if (!summary) throw LoadError("cannot write summary.csv");
  summary << "algorithm,order,stepper,seed,iterations_thousands,"
             "final_averaged_elbo,wall_time_s,termination\n";

  bool any_failure = false;
  for (std::size_t i = 0; i < n_cells; ++i) {
    const CellResult& r = results[i];
    const std::string tag = cell_tag(i, r.cfg);
    if (!r.error.empty()) {
      std::cerr << tag << ": error: " << r.error << "\n";
      summary << to_string(r.cfg.algorithm) << ',' << order_to_int(r.cfg.order) << ','
              << to_string(r.cfg.stepper) << ',' << r.cfg.seed << ",nan,nan,nan,ERROR\n";
      any_failure = true;
      continue;
    }
    write_trace(out_dir / (tag + "_trace.csv"), r.record, spec.trace_thin, r.cfg.window);

    json cell{{"config", run_config_json(r.cfg)},
              {"sigma0_sq", spec.sigma0_sq},
              {"provenance", ds.provenance},
              {"iterations", r.record.iterations},
              {"final_averaged_elbo", r.record.final_elbo},
              {"wall_time_s", r.record.wall_time_s},
              {"termination", to_string(r.record.termination)},
              {"mu", std::vector<double>(r.mu.data(), r.mu.data() + r.mu.size())}};
    std::ofstream cell_out(out_dir / (tag + "_summary.json"));
    if (!cell_out) throw LoadError("cannot write cell summary for " + tag);
    cell_out << cell.dump(2) << '\n';

    summary << to_string(r.cfg.algorithm) << ',' << order_to_int(r.cfg.order) << ','
            << to_string(r.cfg.stepper) << ',' << r.cfg.seed << ','
            << fmt(static_cast<double>(r.record.iterations) / 1000.0) << ','
            << fmt(r.record.final_elbo) << ',' << fmt(r.record.wall_time_s) << ','
            << to_string(r.record.termination) << '\n';
    if (r.record.termination == Termination::FactorFailure) any_failure = true;

    std::cout << tag << ": " << to_string(r.record.termination) << " after "
              << r.record.iterations << " iterations, averaged ELBO "
              << fmt(r.record.final_elbo) << "\n";
  }
  std::cout << "wrote " << (out_dir / "summary.csv").string() << "\n";
  if (any_failure && !keep_going) return kExitGateFailure;
  return kExitOk;
}

namespace {

// Wraps a model, flipping the sign of its Hessian. Used by the check
// command's fault-injection hook to prove the gates can fail.
class HessianSignFlip final : public LogJoint {
 public:
  explicit HessianSignFlip(const LogJoint& inner) : inner_(inner) {}
  Index dim() const override { return inner_.dim(); }
  ModelDerivatives eval(const Vector& theta, bool want_hessian) const override {
    ModelDerivatives d = inner_.eval(theta, want_hessian);
    if (d.hess) *d.hess = -*d.hess;
    return d;
  }

 private:
  const LogJoint& inner_;
};

json report_json(const IdentityReport& r) {
  return json{{"identity", to_string(r.identity)},
              {"n_samples", r.n_samples},
              {"max_abs_gap", r.max_abs_gap},
              {"max_gap_in_se", r.max_gap_in_se}};
}

// A well-conditioned random SPD covariance and the matching pair of states
// (same mu, same Sigma under both parametrizations).
std::pair<GaussianVariational, GaussianVariational> random_state_pair(Index d,
                                                                      std::uint64_t seed) {
  NormalStream rng(seed);
  Matrix b(d, d);
  for (Index j = 0; j < d; ++j) b.col(j) = rng.next_vector(d);
  Matrix sigma = b * b.transpose() / static_cast<double>(d) + 0.5 * Matrix::Identity(d, d);
  Vector mu = 0.3 * rng.next_vector(d);
  LowerTriangular c = cholesky(sigma);
  const Matrix eye = Matrix::Identity(d, d);
  Matrix c_inv = tri_solve(c, eye, false);
  LowerTriangular t = cholesky(c_inv.transpose() * c_inv);
  return {GaussianVariational(mu, c, Parametrization::Covariance),
          GaussianVariational(mu, t, Parametrization::Precision)};
}

// States centred at the quadratic model's mode with Sigma = P^{-1}.
std::pair<GaussianVariational, GaussianVariational> mode_state_pair(
    const QuadraticModel& qm, const Vector& mu) {
  LowerTriangular l = cholesky(qm.precision());
  const Matrix eye = Matrix::Identity(qm.dim(), qm.dim());
  Matrix l_inv = tri_solve(l, eye, false);
  LowerTriangular c = cholesky(l_inv.transpose() * l_inv);
  return {GaussianVariational(mu, c, Parametrization::Covariance),
          GaussianVariational(mu, l, Parametrization::Precision)};
}

}  // namespace

int cmd_check(const CheckOptions& opts) {
  const long n_samples = opts.full ? 1000000 : 10000;
  const Index d = opts.full ? 5 : 3;
  const Index n_rows = 50;

  NormalStream theta_rng(mix_seed(opts.seed, 0x01));
  Vector theta_true = theta_rng.next_vector(d);
  Dataset ds = synth_logistic(n_rows, d, theta_true, mix_seed(opts.seed, 0x02));
  LogisticModel logistic(ds.X, ds.y, 100.0);
  const HessianSignFlip flipped(logistic);
  const LogJoint& model =
      opts.inject_hessian_sign_flip ? static_cast<const LogJoint&>(flipped) : logistic;

  auto [cov_state, prec_state] = random_state_pair(d, mix_seed(opts.seed, 0x03));
  HFunction h_cov(cov_state, model);
  HFunction h_prec(prec_state, model);

  struct Row {
    Identity identity;
    const GaussianVariational* state;
    const LogJoint* f;
  };
  const Row rows[] = {{Identity::BonnetStein, &cov_state, &h_cov},
                      {Identity::Price, &cov_state, &h_cov},
                      {Identity::Lemma1, &cov_state, &h_cov},
                      {Identity::Thm1A, &cov_state, &h_cov},
                      {Identity::Thm1B, &prec_state, &h_prec}};

  const double gate_se = 5.0;
  bool ok = true;
  json out = json::array();
  for (const Row& row : rows) {
    IdentityReport rep =
        check_identity(row.identity, *row.state, *row.f, n_samples,
                       mix_seed(opts.seed, 0x10 + static_cast<std::uint64_t>(row.identity)));
    bool pass = rep.max_gap_in_se <= gate_se;
    ok = ok && pass;
    std::cout << to_string(rep.identity) << ": max gap " << fmt(rep.max_abs_gap) << " ("
              << fmt(rep.max_gap_in_se) << " se) over " << rep.n_samples << " samples -> "
              << (pass ? "ok" : "FAIL") << "\n";
    if (!pass) std::cerr << report_json(rep).dump() << "\n";
    json r = report_json(rep);
    r["pass"] = pass;
    out.push_back(std::move(r));
  }

  // Variance comparison at the Laplace mode of the quadratic expansion:
  // the second-order estimates must be exactly constant, the first-order
  // ones must not.
  QuadraticModel qm = laplace_fit(model, Vector::Zero(d));
  auto [cov_mode, prec_mode] = mode_state_pair(qm, qm.theta_hat());
  const long n_var = opts.full ? 10000 : 2000;
  for (const GaussianVariational* state : {&cov_mode, &prec_mode}) {
    auto reports = compare_variance(*state, qm, n_var, mix_seed(opts.seed, 0x20));
    bool f_constant = reports[1].max_entry_variance <= 1e-24;
    bool g_noisy = reports[0].max_entry_variance > 0.0;
    bool pass = f_constant && g_noisy;
    ok = ok && pass;
    const char* tag =
        state->parametrization() == Parametrization::Covariance ? "covariance" : "precision";
    std::cout << "variance collapse (" << tag << "): G " << fmt(reports[0].max_entry_variance)
              << ", F " << fmt(reports[1].max_entry_variance) << " -> "
              << (pass ? "ok" : "FAIL") << "\n";
    out.push_back(json{{"check", std::string("variance_collapse_") + tag},
                       {"g_max_entry_variance", reports[0].max_entry_variance},
                       {"f_max_entry_variance", reports[1].max_entry_variance},
                       {"pass", pass}});
  }

  if (!opts.out_dir.empty()) {
    fs::path dir(opts.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw LoadError("cannot create output directory " + opts.out_dir);
    std::ofstream f(dir / "check_report.json");
    if (!f) throw LoadError("cannot write check_report.json");
    f << out.dump(2) << '\n';
  }
  std::cout << (ok ? "all checks passed" : "CHECK FAILED") << "\n";
  return ok ? kExitOk : kExitGateFailure;
}

namespace {

json variance_json(const VarianceReport& rep) {
  return json{{"estimator", rep.estimator},
              {"n_samples", rep.n_samples},
              {"max_entry_variance", rep.max_entry_variance}};
}

}  // namespace

int cmd_variance(const VarianceOptions& opts) {
  if (opts.at != "optimum" && opts.at != "offset")
    throw LoadError("--at must be \"optimum\" or \"offset\"");
  if (opts.n_samples < 2) throw LoadError("--samples must be >= 2");

  double sigma0_sq = 100.0;
  Dataset ds;
  if (opts.spec) {
    ds = materialize_dataset(opts.spec->dataset);
    sigma0_sq = opts.spec->sigma0_sq;
  } else {
    NormalStream theta_rng(mix_seed(opts.seed, 0x01));
    ds = synth_logistic(50, 4, theta_rng.next_vector(4), mix_seed(opts.seed, 0x02));
  }
  LogisticModel logistic(ds.X, ds.y, sigma0_sq);
  QuadraticModel qm = laplace_fit(logistic, Vector::Zero(logistic.dim()));

  Vector mu = qm.theta_hat();
  const LogJoint* target = &qm;
  if (opts.at == "offset") {
    mu.array() += 0.1;
    target = &logistic;
  }
  auto [cov_state, prec_state] = mode_state_pair(qm, mu);

  json out;
  out["at"] = opts.at;
  out["model"] = (opts.at == "offset") ? "logistic" : "quadratic expansion at mode";
  out["provenance"] = ds.provenance;
  for (const GaussianVariational* state : {&cov_state, &prec_state}) {
    auto reports = compare_variance(*state, *target, opts.n_samples, mix_seed(opts.seed, 0x30));
    const char* tag =
        state->parametrization() == Parametrization::Covariance ? "covariance" : "precision";
    out[tag] = json::array({variance_json(reports[0]), variance_json(reports[1])});
    std::cout << tag << ": " << reports[0].estimator << " max entry variance "
              << fmt(reports[0].max_entry_variance) << ", " << reports[1].estimator << " "
              << fmt(reports[1].max_entry_variance) << "\n";
  }

  if (!opts.out_dir.empty()) {
    fs::path dir(opts.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw LoadError("cannot create output directory " + opts.out_dir);
    std::ofstream f(dir / "variance_report.json");
    if (!f) throw LoadError("cannot write variance_report.json");
    f << out.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_datagen(const DatagenOptions& opts) {
  if (opts.out_path.empty()) throw LoadError("datagen: output path required");
  if (opts.n < 1 || opts.d < 1) throw LoadError("datagen: n and d must be positive");
  NormalStream theta_rng(mix_seed(opts.seed, 0x7e7a));
  Vector theta = opts.theta_scale * theta_rng.next_vector(opts.d);
  Dataset ds = synth_logistic(opts.n, opts.d, theta, opts.seed, opts.intercept);
  save_csv(ds, opts.out_path);

  json meta{{"n", opts.n},
            {"d", opts.d},
            {"theta_scale", opts.theta_scale},
            {"seed", opts.seed},
            {"intercept", opts.intercept},
            {"theta_true", std::vector<double>(theta.data(), theta.data() + theta.size())},
            {"provenance", ds.provenance}};
  std::ofstream f(opts.out_path + ".meta.json");
  if (!f) throw LoadError("cannot write " + opts.out_path + ".meta.json");
  f << meta.dump(2) << '\n';
  std::cout << "wrote " << opts.out_path << " (" << opts.n << " rows, " << opts.d
            << " features)\n";
  return kExitOk;
}

}  // namespace gva
