#ifndef GVA_DATA_HPP
#define GVA_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gva/common.hpp"

namespace gva {

struct Dataset {
  Matrix X;                                // n x d
  Vector y;                                // entries in {0,1}
  std::vector<std::string> feature_names;  // length d
  std::string provenance;                  // source + preprocessing description

  Index n() const { return X.rows(); }
  Index dim() const { return X.cols(); }
};

struct CsvSchema {
  std::string label_column;
  std::string positive_label;
  bool standardize = false;
  bool intercept = false;
  char delimiter = ',';
};

// Loads a delimited text file (UTF-8, header row required). Every column
// except the label column must be numeric; rows with unparseable cells are
// rejected with an error naming the row and column. Labels map to 1 when the
// cell equals positive_label, 0 otherwise. Standardization centers and
// scales each feature column to unit sample standard deviation (n-1
// divisor); a zero-variance column is an error. The intercept column, when
// requested, is prepended as a column of ones named "intercept".
Dataset load_csv(const std::string& path, const CsvSchema& schema);

// Writes X plus a final label column; reloading with a plain schema (no
// standardization, no intercept) reproduces X and y exactly.
void save_csv(const Dataset& ds, const std::string& path,
              const std::string& label_name = "label", char delimiter = ',');

// Synthetic logistic-regression data: X entries iid standard normal (first
// column all ones when intercept is set), y_i ~ Bernoulli(sigmoid(theta_true
// . x_i)). Deterministic given seed.
Dataset synth_logistic(Index n, Index d, const Vector& theta_true, std::uint64_t seed,
                       bool intercept = false);

}  // namespace gva

#endif  // GVA_DATA_HPP
