#include "gva/trimat.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <utility>

namespace gva {

namespace {

void require_square(const Matrix& a, const char* op) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw DimensionError(std::string(op) + ": expected a square matrix, got " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

}  // namespace

LowerTriangular::LowerTriangular(Matrix m) : m_(std::move(m)) {
  require_square(m_, "LowerTriangular");
  for (Index i = 0; i < m_.rows(); ++i) {
    for (Index j = i + 1; j < m_.cols(); ++j) {
      if (m_(i, j) != 0.0) {
        throw DimensionError("LowerTriangular: nonzero entry above the diagonal at (" +
                             std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
}

LowerTriangular LowerTriangular::identity(Index d) {
  return LowerTriangular(Matrix::Identity(d, d), unchecked_t{});
}

LowerTriangular LowerTriangular::zero(Index d) {
  return LowerTriangular(Matrix::Zero(d, d), unchecked_t{});
}

void LowerTriangular::add_scaled(const LowerTriangular& other, double scale) {
  if (other.dim() != dim()) {
    throw DimensionError("add_scaled: dimension mismatch");
  }
  m_.triangularView<Eigen::Lower>() += scale * other.m_;
}

Index dim_from_halfvec_len(Index len) {
  // len = d(d+1)/2  =>  d = (-1 + sqrt(1 + 8 len)) / 2
  const Index d = static_cast<Index>((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0 + 0.5);
  if (d < 1 || halfvec_len(d) != len) {
    throw DimensionError("unvech: length " + std::to_string(len) + " is not a triangular number");
  }
  return d;
}

HalfVec vech(const Matrix& a) {
  require_square(a, "vech");
  const Index d = a.rows();
  HalfVec v(halfvec_len(d));
  Index k = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = j; i < d; ++i) {
      v[k++] = a(i, j);
    }
  }
  return v;
}

LowerTriangular unvech(const HalfVec& v) {
  const Index d = dim_from_halfvec_len(v.size());
  Matrix m = Matrix::Zero(d, d);
  Index k = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = j; i < d; ++i) {
      m(i, j) = v[k++];
    }
  }
  return LowerTriangular(std::move(m), LowerTriangular::unchecked_t{});
}

LowerTriangular bar(const Matrix& a) {
  require_square(a, "bar");
  Matrix m = Matrix::Zero(a.rows(), a.cols());
  m.triangularView<Eigen::Lower>() = a;
  return LowerTriangular(std::move(m), LowerTriangular::unchecked_t{});
}

LowerTriangular barbar(const Matrix& a) {
  require_square(a, "barbar");
  Matrix m = Matrix::Zero(a.rows(), a.cols());
  m.triangularView<Eigen::Lower>() = a;
  m.diagonal() *= 0.5;
  return LowerTriangular(std::move(m), LowerTriangular::unchecked_t{});
}

namespace {

void require_invertible(const LowerTriangular& t) {
  for (Index i = 0; i < t.dim(); ++i) {
    if (t(i, i) == 0.0) {
      throw SingularFactorError("tri_solve: zero diagonal entry at index " + std::to_string(i));
    }
  }
}

}  // namespace

Vector tri_solve(const LowerTriangular& t, const Vector& b, bool transposed) {
  if (b.size() != t.dim()) {
    throw DimensionError("tri_solve: right-hand side length " + std::to_string(b.size()) +
                         " does not match factor dimension " + std::to_string(t.dim()));
  }
  require_invertible(t);
  if (transposed) {
    return t.mat().triangularView<Eigen::Lower>().transpose().solve(b);
  }
  return t.mat().triangularView<Eigen::Lower>().solve(b);
}

Matrix tri_solve(const LowerTriangular& t, const Matrix& b, bool transposed) {
  if (b.rows() != t.dim()) {
    throw DimensionError("tri_solve: right-hand side has " + std::to_string(b.rows()) +
                         " rows, factor dimension is " + std::to_string(t.dim()));
  }
  require_invertible(t);
  if (transposed) {
    return t.mat().triangularView<Eigen::Lower>().transpose().solve(b);
  }
  return t.mat().triangularView<Eigen::Lower>().solve(b);
}

LowerTriangular cholesky(const Matrix& s) {
  require_square(s, "cholesky");
  const double scale = s.cwiseAbs().maxCoeff();
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, scale)) {
    throw DimensionError("cholesky: input is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
  Eigen::LLT<Matrix> llt(0.5 * (s + s.transpose()));
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("cholesky: matrix is not positive definite");
  }
  Matrix l = llt.matrixL();
  if (!(l.diagonal().array() > 0.0).all()) {
    throw NotPositiveDefiniteError("cholesky: non-positive pivot");
  }
  return bar(l);
}

}  // namespace gva
