#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gva/experiment.hpp"
#include "gva/rng.hpp"

using namespace gva;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("gva_test_out") / name) {
    fs::remove_all(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(bool(in));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(s);
  while (std::getline(ss, cell, delim)) out.push_back(cell);
  return out;
}

// summary.csv rows with the wall-time column blanked, so two runs of the
// same spec can be compared for equality.
std::vector<std::string> summary_rows_sans_walltime(const fs::path& p) {
  std::vector<std::string> rows;
  std::stringstream ss(read_file(p));
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells = split(line, ',');
    if (!rows.empty() && cells.size() == 8) cells[6] = "";  // keep the header intact
    std::string joined;
    for (const auto& c : cells) joined += c + "|";
    rows.push_back(joined);
  }
  return rows;
}

const char* kSyntheticDataset =
    "\"dataset\": {\"type\": \"synthetic\", \"n\": 40, \"d\": 3, \"seed\": 5}";

}  // namespace

TEST_CASE("parse_spec_text expands a cross-product grid") {
  std::string text = std::string("{") + kSyntheticDataset +
                     ", \"grid\": {\"algorithms\": [\"1E\", \"2N\"],"
                     " \"steppers\": [\"adam\", \"snngm\"], \"seed\": 9,"
                     " \"alpha\": 0.02, \"max_iters\": 500, \"window\": 100}}";
  ExperimentSpec spec = parse_spec_text(text);
  // 2 algorithms x 2 default orders x 2 steppers = 8 enumerated, minus the
  // two invalid Snngm-with-1E combinations.
  REQUIRE(spec.grid.size() == 6);
  const RunConfig& first = spec.grid[0];
  CHECK(first.algorithm == Algorithm::A1E);
  CHECK(first.order == Order::First);
  CHECK(first.stepper == Stepper::Adam);
  CHECK(first.alpha == 0.02);
  CHECK(first.max_iters == 500);
  CHECK(first.window == 100);
  // Seeds follow the pre-skip enumeration index, so removing invalid cells
  // does not shift the seeds of the remaining ones.
  const std::uint64_t expect[] = {mix_seed(9, 0), mix_seed(9, 2), mix_seed(9, 4),
                                  mix_seed(9, 5), mix_seed(9, 6), mix_seed(9, 7)};
  for (std::size_t i = 0; i < 6; ++i) CHECK(spec.grid[i].seed == expect[i]);
  CHECK(spec.grid[2].algorithm == Algorithm::A2N);
  CHECK(spec.grid[3].stepper == Stepper::Snngm);
}

TEST_CASE("parse_spec_text honors explicit cells with per-cell overrides") {
  std::string text = std::string("{") + kSyntheticDataset +
                     ", \"grid\": {\"seed\": 3, \"alpha\": 0.01, \"max_iters\": 200,"
                     " \"window\": 50, \"cells\": ["
                     "{\"algorithm\": \"2N\", \"order\": 2, \"stepper\": \"snngm\","
                     " \"alpha\": 0.5, \"seed\": 42},"
                     "{\"algorithm\": \"1E\", \"order\": 1}]}}";
  ExperimentSpec spec = parse_spec_text(text);
  REQUIRE(spec.grid.size() == 2);
  CHECK(spec.grid[0].algorithm == Algorithm::A2N);
  CHECK(spec.grid[0].order == Order::Second);
  CHECK(spec.grid[0].stepper == Stepper::Snngm);
  CHECK(spec.grid[0].alpha == 0.5);
  CHECK(spec.grid[0].seed == 42);
  CHECK(spec.grid[0].window == 50);
  CHECK(spec.grid[1].stepper == Stepper::Adam);  // default
  CHECK(spec.grid[1].alpha == 0.01);             // grid-level default
  CHECK(spec.grid[1].seed == mix_seed(3, 1));
}

TEST_CASE("parse_spec_text applies defaults and model settings") {
  std::string minimal = std::string("{") + kSyntheticDataset +
                        ", \"grid\": {\"cells\": [{\"algorithm\": \"1N\", \"order\": 1}]}}";
  ExperimentSpec spec = parse_spec_text(minimal);
  CHECK(spec.sigma0_sq == 100.0);
  CHECK(spec.out_dir == "gva-out");
  CHECK(spec.trace_thin == 10);
  REQUIRE(spec.dataset.synthetic.has_value());
  CHECK(spec.dataset.synthetic->n == 40);
  CHECK(spec.dataset.synthetic->d == 3);
  CHECK_FALSE(spec.dataset.csv.has_value());

  std::string tuned = std::string("{") + kSyntheticDataset +
                      ", \"model\": {\"sigma0_sq\": 25.0},"
                      " \"output\": {\"dir\": \"elsewhere\", \"trace_thin\": 3},"
                      " \"grid\": {\"cells\": [{\"algorithm\": \"1N\", \"order\": 1}]}}";
  ExperimentSpec t = parse_spec_text(tuned);
  CHECK(t.sigma0_sq == 25.0);
  CHECK(t.out_dir == "elsewhere");
  CHECK(t.trace_thin == 3);
}

TEST_CASE("parse_spec_text parses csv dataset schemas") {
  std::string text =
      "{\"dataset\": {\"type\": \"csv\", \"path\": \"data.csv\","
      " \"label_column\": \"y\", \"positive_label\": \"yes\","
      " \"standardize\": true, \"intercept\": true, \"delimiter\": \";\"},"
      " \"grid\": {\"cells\": [{\"algorithm\": \"1E\", \"order\": 1}]}}";
  ExperimentSpec spec = parse_spec_text(text);
  REQUIRE(spec.dataset.csv.has_value());
  CHECK(spec.dataset.csv->path == "data.csv");
  CHECK(spec.dataset.csv->schema.label_column == "y");
  CHECK(spec.dataset.csv->schema.positive_label == "yes");
  CHECK(spec.dataset.csv->schema.standardize);
  CHECK(spec.dataset.csv->schema.intercept);
  CHECK(spec.dataset.csv->schema.delimiter == ';');
}

TEST_CASE("parse_spec_text rejects malformed specs") {
  auto cells = [](const std::string& dataset) {
    return "{" + dataset + ", \"grid\": {\"cells\": [{\"algorithm\": \"1E\", \"order\": 1}]}}";
  };
  CHECK_THROWS_AS(parse_spec_text("{nope"), LoadError);
  CHECK_THROWS_AS(parse_spec_text("{}"), LoadError);
  CHECK_THROWS_AS(parse_spec_text(std::string("{") + kSyntheticDataset + "}"), LoadError);
  CHECK_THROWS_AS(parse_spec_text(cells("\"dataset\": {\"type\": \"parquet\"}")), LoadError);
  CHECK_THROWS_AS(
      parse_spec_text(cells("\"dataset\": {\"type\": \"synthetic\", \"n\": 0, \"d\": 3}")),
      LoadError);
  CHECK_THROWS_AS(parse_spec_text(cells(
                      "\"dataset\": {\"type\": \"synthetic\", \"d\": 3, \"theta_true\": [1.0]}")),
                  LoadError);
  CHECK_THROWS_AS(parse_spec_text(cells("\"dataset\": {\"type\": \"csv\", \"path\": \"p\","
                                        " \"label_column\": \"y\", \"delimiter\": \";;\"}")),
                  LoadError);

  std::string base(kSyntheticDataset);
  CHECK_THROWS_AS(parse_spec_text("{" + base + ", \"grid\": {\"cells\": []}}"), LoadError);
  CHECK_THROWS_AS(parse_spec_text("{" + base +
                                  ", \"grid\": {\"cells\": [{\"algorithm\": \"1E\","
                                  " \"order\": 3}]}}"),
                  LoadError);
  CHECK_THROWS_AS(parse_spec_text("{" + base +
                                  ", \"grid\": {\"cells\": [{\"algorithm\": \"1E\", \"order\": 1,"
                                  " \"stepper\": \"snngm\"}]}}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_spec_text("{" + base + ", \"model\": {\"sigma0_sq\": 0},"
                                  " \"grid\": {\"cells\": [{\"algorithm\": \"1E\","
                                  " \"order\": 1}]}}"),
                  LoadError);
  CHECK_THROWS_AS(parse_spec_text("{" + base + ", \"output\": {\"trace_thin\": 0},"
                                  " \"grid\": {\"cells\": [{\"algorithm\": \"1E\","
                                  " \"order\": 1}]}}"),
                  LoadError);
}

TEST_CASE("materialize_dataset is deterministic and validates the source") {
  DataSpec spec;
  spec.synthetic = SyntheticDataSpec{};
  spec.synthetic->n = 30;
  spec.synthetic->d = 4;
  spec.synthetic->seed = 11;
  Dataset a = materialize_dataset(spec);
  Dataset b = materialize_dataset(spec);
  REQUIRE(a.n() == 30);
  REQUIRE(a.dim() == 4);
  CHECK(a.X.cwiseEqual(b.X).all());
  CHECK(a.y.cwiseEqual(b.y).all());

  spec.synthetic->seed = 12;
  Dataset c = materialize_dataset(spec);
  CHECK_FALSE(c.X.cwiseEqual(a.X).all());

  // Explicit coefficients bypass the drawn ones.
  spec.synthetic->seed = 11;
  spec.synthetic->theta_true = {5.0, 5.0, 5.0, 5.0};
  Dataset forced = materialize_dataset(spec);
  CHECK(forced.X.cwiseEqual(a.X).all());   // same design
  CHECK_FALSE(forced.y.cwiseEqual(a.y).all());  // different labels

  DataSpec both;
  both.synthetic = SyntheticDataSpec{};
  both.csv = CsvDataSpec{};
  CHECK_THROWS_AS(materialize_dataset(both), LoadError);
  CHECK_THROWS_AS(materialize_dataset(DataSpec{}), LoadError);
}

TEST_CASE("cmd_run writes traces, cell summaries and an aggregate table") {
  TempDir dir("run_basic");
  std::string text = std::string("{") + kSyntheticDataset +
                     ", \"output\": {\"dir\": \"" + dir.path.string() +
                     "\", \"trace_thin\": 50},"
                     " \"grid\": {\"seed\": 4, \"alpha\": 0.02, \"max_iters\": 300,"
                     " \"window\": 100, \"cells\": ["
                     "{\"algorithm\": \"1N\", \"order\": 1},"
                     "{\"algorithm\": \"2N\", \"order\": 2, \"stepper\": \"snngm\"}]}}";
  ExperimentSpec spec = parse_spec_text(text);
  CHECK(cmd_run(spec) == kExitOk);

  std::vector<std::string> rows = summary_rows_sans_walltime(dir.path / "summary.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] ==
        "algorithm|order|stepper|seed|iterations_thousands|final_averaged_elbo|"
        "wall_time_s|termination|");
  CHECK(rows[1].substr(0, 10) == "1N|1|adam|");
  CHECK(rows[2].substr(0, 11) == "2N|2|snngm|");

  json cell = json::parse(read_file(dir.path / "cell00_1N_o1_adam_summary.json"));
  CHECK(cell["config"]["algorithm"] == "1N");
  CHECK(cell["config"]["window"] == 100);
  CHECK(cell["iterations"].get<long>() > 0);
  CHECK(cell["iterations"].get<long>() <= 300);
  CHECK(cell["mu"].size() == 3);
  CHECK(cell["provenance"].get<std::string>().find("synthetic logistic") != std::string::npos);
  const std::string term = cell["termination"].get<std::string>();
  CHECK((term == "CONVERGED" || term == "MAX_ITERS"));

  // Trace rows appear at thinning multiples, window boundaries and the final
  // iteration; the averaged column is nan until the first window fills.
  std::vector<std::string> trace;
  {
    std::stringstream ss(read_file(dir.path / "cell01_2N_o2_snngm_trace.csv"));
    std::string line;
    while (std::getline(ss, line)) trace.push_back(line);
  }
  REQUIRE(trace.size() >= 2);
  CHECK(trace[0] == "iteration,elbo,elbo_avg");
  long prev = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    std::vector<std::string> cells = split(trace[i], ',');
    REQUIRE(cells.size() == 3);
    const long t = std::stol(cells[0]);
    CHECK(t > prev);
    prev = t;
    const bool scheduled = (t % 50 == 0) || (t % 100 == 0) || (i == trace.size() - 1);
    CHECK(scheduled);
    if (t < 100) CHECK(cells[2] == "nan");
    if (t >= 100) CHECK(cells[2] != "nan");
  }
  const long iters = json::parse(read_file(dir.path / "cell01_2N_o2_snngm_summary.json"))
                         ["iterations"].get<long>();
  CHECK(prev == iters);
}

TEST_CASE("cmd_run output is reproducible from the spec") {
  TempDir dir_a("run_repro_a");
  TempDir dir_b("run_repro_b");
  auto spec_for = [](const fs::path& out) {
    std::string text = std::string("{") + kSyntheticDataset +
                       ", \"output\": {\"dir\": \"" + out.string() + "\", \"trace_thin\": 25},"
                       " \"grid\": {\"seed\": 8, \"alpha\": 0.02, \"max_iters\": 200,"
                       " \"window\": 50, \"algorithms\": [\"1E\", \"2N\"]}}";
    return parse_spec_text(text);
  };
  REQUIRE(cmd_run(spec_for(dir_a.path), 1) == kExitOk);
  REQUIRE(cmd_run(spec_for(dir_b.path), 4) == kExitOk);  // workers must not matter

  CHECK(summary_rows_sans_walltime(dir_a.path / "summary.csv") ==
        summary_rows_sans_walltime(dir_b.path / "summary.csv"));
  for (const char* tag : {"cell00_1E_o1_adam", "cell01_1E_o2_adam", "cell02_2N_o1_adam",
                          "cell03_2N_o2_adam"}) {
    CHECK(read_file(dir_a.path / (std::string(tag) + "_trace.csv")) ==
          read_file(dir_b.path / (std::string(tag) + "_trace.csv")));
  }
}

TEST_CASE("cmd_run reports factor failures through its exit code") {
  // An absurd step size drives the factor diagonal negative beyond what
  // step-halving can rescue.
  TempDir dir("run_failure");
  std::string text = std::string("{") + kSyntheticDataset +
                     ", \"output\": {\"dir\": \"" + dir.path.string() + "\"},"
                     " \"grid\": {\"seed\": 6, \"alpha\": 1e7, \"max_iters\": 60,"
                     " \"window\": 10, \"cells\": [{\"algorithm\": \"1E\", \"order\": 1}]}}";
  ExperimentSpec spec = parse_spec_text(text);
  CHECK(cmd_run(spec, 1, false) == kExitGateFailure);
  CHECK(cmd_run(spec, 1, true) == kExitOk);  // --keep-going downgrades it
  std::string summary = read_file(dir.path / "summary.csv");
  CHECK(summary.find("FACTOR_FAILURE") != std::string::npos);
}

TEST_CASE("cmd_variance reports collapse at the optimum and noise at the offset") {
  TempDir dir("variance");
  VarianceOptions opts;
  opts.n_samples = 400;
  opts.out_dir = dir.path.string();

  opts.at = "optimum";
  REQUIRE(cmd_variance(opts) == kExitOk);
  json at_opt = json::parse(read_file(dir.path / "variance_report.json"));
  CHECK(at_opt["at"] == "optimum");
  for (const char* tag : {"covariance", "precision"}) {
    const json& g = at_opt[tag][0];
    const json& f = at_opt[tag][1];
    CHECK(g["n_samples"].get<long>() == 400);
    CHECK(f["max_entry_variance"].get<double>() <= 1e-24);
    CHECK(g["max_entry_variance"].get<double>() > 0.0);
  }
  CHECK(at_opt["covariance"][0]["estimator"] == "G1");
  CHECK(at_opt["covariance"][1]["estimator"] == "F1");
  CHECK(at_opt["precision"][0]["estimator"] == "G2");
  CHECK(at_opt["precision"][1]["estimator"] == "F2");

  opts.at = "offset";
  REQUIRE(cmd_variance(opts) == kExitOk);
  json at_off = json::parse(read_file(dir.path / "variance_report.json"));
  CHECK(at_off["model"] == "logistic");
  for (const char* tag : {"covariance", "precision"}) {
    for (int k : {0, 1}) {
      CHECK(at_off[tag][k]["max_entry_variance"].get<double>() > 0.0);
    }
  }

  opts.at = "sideways";
  CHECK_THROWS_AS(cmd_variance(opts), LoadError);
  opts.at = "optimum";
  opts.n_samples = 1;
  CHECK_THROWS_AS(cmd_variance(opts), LoadError);
}

TEST_CASE("cmd_datagen writes a loadable csv plus generator metadata") {
  TempDir dir("datagen");
  fs::create_directories(dir.path);
  DatagenOptions opts;
  opts.n = 35;
  opts.d = 4;
  opts.seed = 17;
  opts.intercept = true;
  opts.out_path = (dir.path / "synth.csv").string();
  REQUIRE(cmd_datagen(opts) == kExitOk);

  CsvSchema schema;
  schema.label_column = "label";
  schema.positive_label = "1";
  Dataset ds = load_csv(opts.out_path, schema);
  CHECK(ds.n() == 35);
  CHECK(ds.dim() == 4);
  CHECK(ds.feature_names[0] == "intercept");
  CHECK(ds.X.col(0).cwiseEqual(1.0).all());

  json meta = json::parse(read_file(dir.path / "synth.csv.meta.json"));
  CHECK(meta["n"] == 35);
  CHECK(meta["seed"] == 17);
  REQUIRE(meta["theta_true"].size() == 4);

  // The recorded coefficients really generated the labels: regenerating from
  // them reproduces the dataset bit for bit.
  Vector theta(4);
  for (Index i = 0; i < 4; ++i) theta[i] = meta["theta_true"][static_cast<std::size_t>(i)];
  Dataset regen = synth_logistic(35, 4, theta, 17, true);
  CHECK(regen.X.cwiseEqual(ds.X).all());
  CHECK(regen.y.cwiseEqual(ds.y).all());

  DatagenOptions bad = opts;
  bad.out_path.clear();
  CHECK_THROWS_AS(cmd_datagen(bad), LoadError);
}
