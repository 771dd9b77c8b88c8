#ifndef GVA_TRIMAT_HPP
#define GVA_TRIMAT_HPP

#include "gva/common.hpp"

namespace gva {

// Dense d x d lower-triangular matrix (strict upper triangle identically
// zero). Covariance factors C, precision factors T and the masked/rescaled
// gradient directions all live in this type. Storage stays dense; the
// dimensions in play are small enough that packed storage buys nothing.
class LowerTriangular {
 public:
  // Requires m to be square with a zero strict upper triangle.
  explicit LowerTriangular(Matrix m);

  static LowerTriangular identity(Index d);
  static LowerTriangular zero(Index d);

  Index dim() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }

  double operator()(Index i, Index j) const { return m_(i, j); }

  bool diagonal_positive() const { return (m_.diagonal().array() > 0.0).all(); }

  // In-place m += scale * other. Only the lower triangle is touched, so the
  // invariant survives without a rescan.
  void add_scaled(const LowerTriangular& other, double scale);

  LowerTriangular& operator*=(double s) {
    m_ *= s;
    return *this;
  }

 private:
  struct unchecked_t {};
  LowerTriangular(Matrix m, unchecked_t) : m_(std::move(m)) {}

  Matrix m_;

  friend LowerTriangular bar(const Matrix& a);
  friend LowerTriangular barbar(const Matrix& a);
  friend LowerTriangular unvech(const Vector& v);
};

// Half-vectorization of a d x d matrix: length d(d+1)/2, columns stacked left
// to right with the supradiagonal elements eliminated.
using HalfVec = Vector;

inline Index halfvec_len(Index d) { return d * (d + 1) / 2; }

// Inverse of halfvec_len; throws DimensionError if len is not triangular.
Index dim_from_halfvec_len(Index len);

// vech(A): column-stacked lower-including-diagonal entries of A.
HalfVec vech(const Matrix& a);

// unvech(vech(A)) = A for lower-triangular A.
LowerTriangular unvech(const HalfVec& v);

// Lower-triangular mask: bar(A)[i,j] = A[i,j] for i >= j, else 0.
LowerTriangular bar(const Matrix& a);

// bar(A) - dg(A)/2: strict lower part kept, diagonal halved.
LowerTriangular barbar(const Matrix& a);

// Solve T x = b (forward substitution) or T^T x = b (back substitution when
// transposed). Throws SingularFactorError on a zero diagonal entry.
Vector tri_solve(const LowerTriangular& t, const Vector& b, bool transposed);

// Columnwise variant: solves T X = B or T^T X = B.
Matrix tri_solve(const LowerTriangular& t, const Matrix& b, bool transposed);

// Cholesky factor of a symmetric positive-definite matrix: returns lower
// triangular C with positive diagonal and C C^T = S. Throws DimensionError on
// a non-square or asymmetric input, NotPositiveDefiniteError on a
// non-positive pivot.
LowerTriangular cholesky(const Matrix& s);

}  // namespace gva

#endif  // GVA_TRIMAT_HPP
