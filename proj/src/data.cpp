#include "gva/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "gva/models.hpp"
#include "gva/rng.hpp"

namespace gva {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delim)) cells.push_back(cell);
  if (!line.empty() && line.back() == delim) cells.emplace_back();
  return cells;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  const std::string t = strip(cell);
  if (t.empty()) {
    throw LoadError("load_csv: empty cell at row " + std::to_string(row) + ", column '" + col + "'");
  }
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != t.size()) {
    throw LoadError("load_csv: non-numeric cell '" + t + "' at row " + std::to_string(row) +
                    ", column '" + col + "'");
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw LoadError("load_csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw LoadError("load_csv: '" + path + "' is empty (header row required)");
  std::vector<std::string> header = split_line(line, schema.delimiter);
  for (auto& h : header) h = strip(h);

  const auto label_it = std::find(header.begin(), header.end(), schema.label_column);
  if (label_it == header.end()) {
    throw LoadError("load_csv: label column '" + schema.label_column + "' not found in '" + path + "'");
  }
  const std::size_t label_idx = static_cast<std::size_t>(label_it - header.begin());

  std::vector<std::string> feature_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != label_idx) feature_names.push_back(header[j]);
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::size_t row_no = 1;  // header is row 0
  while (std::getline(in, line)) {
    if (strip(line).empty()) {
      ++row_no;
      continue;
    }
    std::vector<std::string> cells = split_line(line, schema.delimiter);
    if (cells.size() != header.size()) {
      throw LoadError("load_csv: row " + std::to_string(row_no) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    }
    std::vector<double> row;
    row.reserve(header.size() - 1);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j == label_idx) {
        labels.push_back(strip(cells[j]) == schema.positive_label ? 1.0 : 0.0);
      } else {
        row.push_back(parse_cell(cells[j], row_no, header[j]));
      }
    }
    rows.push_back(std::move(row));
    ++row_no;
  }
  if (rows.empty()) throw LoadError("load_csv: no data rows in '" + path + "'");

  const Index n = static_cast<Index>(rows.size());
  const Index p = static_cast<Index>(feature_names.size());
  Matrix feats(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) feats(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }

  std::string prep;
  if (schema.standardize) {
    if (n < 2) throw LoadError("load_csv: standardization needs at least 2 rows");
    for (Index j = 0; j < p; ++j) {
      const double mean = feats.col(j).mean();
      const double sd = std::sqrt((feats.col(j).array() - mean).square().sum() /
                                  static_cast<double>(n - 1));
      if (sd == 0.0) {
        throw LoadError("load_csv: column '" + feature_names[static_cast<std::size_t>(j)] +
                        "' is constant; cannot standardize");
      }
      feats.col(j) = (feats.col(j).array() - mean) / sd;
    }
    prep += " standardized (sample sd, n-1 divisor);";
  }

  Dataset ds;
  if (schema.intercept) {
    ds.X.resize(n, p + 1);
    ds.X.col(0).setOnes();
    ds.X.rightCols(p) = feats;
    ds.feature_names.reserve(static_cast<std::size_t>(p) + 1);
    ds.feature_names.emplace_back("intercept");
    ds.feature_names.insert(ds.feature_names.end(), feature_names.begin(), feature_names.end());
    prep += " intercept column prepended;";
  } else {
    ds.X = std::move(feats);
    ds.feature_names = std::move(feature_names);
  }
  ds.y = Eigen::Map<Vector>(labels.data(), static_cast<Index>(labels.size()));
  ds.provenance = "loaded from '" + path + "'; label column '" + schema.label_column +
                  "' with positive label '" + schema.positive_label + "';" + prep;
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path, const std::string& label_name,
              char delimiter) {
  std::ofstream out(path);
  if (!out) throw LoadError("save_csv: cannot open '" + path + "' for writing");
  for (Index j = 0; j < ds.dim(); ++j) {
    out << ds.feature_names[static_cast<std::size_t>(j)] << delimiter;
  }
  out << label_name << "\n";
  char buf[40];
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index j = 0; j < ds.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.X(i, j));
      out << buf << delimiter;
    }
    out << (ds.y[i] == 1.0 ? "1" : "0") << "\n";
  }
  if (!out) throw LoadError("save_csv: write to '" + path + "' failed");
}

Dataset synth_logistic(Index n, Index d, const Vector& theta_true, std::uint64_t seed,
                       bool intercept) {
  if (theta_true.size() != d) {
    throw DimensionError("synth_logistic: theta_true length " + std::to_string(theta_true.size()) +
                         " does not match d = " + std::to_string(d));
  }
  if (n < 1 || d < 1) throw DimensionError("synth_logistic: n and d must be positive");

  NormalStream rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Dataset ds;
  ds.X.resize(n, d);
  Index first_col = 0;
  if (intercept) {
    ds.X.col(0).setOnes();
    ds.feature_names.emplace_back("intercept");
    first_col = 1;
  }
  for (Index j = first_col; j < d; ++j) {
    ds.feature_names.push_back("x" + std::to_string(j));
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = first_col; j < d; ++j) ds.X(i, j) = rng.next();
  }
  ds.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double pi = logistic_sigmoid(ds.X.row(i).dot(theta_true));
    ds.y[i] = unif(rng.engine()) < pi ? 1.0 : 0.0;
  }
  ds.provenance = "synthetic logistic data: n=" + std::to_string(n) + ", d=" + std::to_string(d) +
                  ", seed=" + std::to_string(seed) + (intercept ? ", intercept column" : "");
  return ds;
}

}  // namespace gva
