#ifndef GVA_COMMON_HPP
#define GVA_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace gva {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Input with incompatible sizes (non-square matrix, mismatched vector length,
// a half-vector whose length is not a triangular number, ...).
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// A triangular factor with a zero diagonal entry was asked to act as an
// invertible map.
class SingularFactorError : public std::runtime_error {
 public:
  explicit SingularFactorError(const std::string& what) : std::runtime_error(what) {}
};

// Cholesky factorization hit a non-positive pivot.
class NotPositiveDefiniteError : public std::runtime_error {
 public:
  explicit NotPositiveDefiniteError(const std::string& what) : std::runtime_error(what) {}
};

// Dataset ingestion failure; message names the offending row/column.
class LoadError : public std::runtime_error {
 public:
  explicit LoadError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gva

#endif  // GVA_COMMON_HPP
