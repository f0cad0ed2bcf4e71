#pragma once

// Dense complex elimination with largest-pivot selection, plus the 4x4
// adjugate used by the resolvent kernel.

#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "qsw/errors.hpp"

namespace qsw {

/// LU factorization with complete pivoting: at every step the entry of
/// largest magnitude in the trailing submatrix becomes the pivot.
template <class Scalar>
class PivotedLU {
public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit PivotedLU(Matrix a) : lu_(std::move(a)) {
    const Eigen::Index n = lu_.rows();
    if (n != lu_.cols()) throw ParameterError("PivotedLU needs a square matrix");
    row_perm_.resize(n);
    col_perm_.resize(n);
    std::iota(row_perm_.begin(), row_perm_.end(), Eigen::Index{0});
    std::iota(col_perm_.begin(), col_perm_.end(), Eigen::Index{0});
    norm1_ = n ? lu_.cwiseAbs().colwise().sum().maxCoeff() : 0.0;

    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::Index pr = k, pc = k;
      double best = -1.0;
      for (Eigen::Index j = k; j < n; ++j)
        for (Eigen::Index i = k; i < n; ++i) {
          const double m = std::abs(lu_(i, j));
          if (m > best) {
            best = m;
            pr = i;
            pc = j;
          }
        }
      if (best == 0.0) {
        singular_ = true;
        return;
      }
      if (pr != k) {
        lu_.row(k).swap(lu_.row(pr));
        std::swap(row_perm_[k], row_perm_[pr]);
      }
      if (pc != k) {
        lu_.col(k).swap(lu_.col(pc));
        std::swap(col_perm_[k], col_perm_[pc]);
      }
      const Scalar pivot = lu_(k, k);
      max_pivot_ = std::max(max_pivot_, best);
      min_pivot_ = std::min(min_pivot_, best);
      for (Eigen::Index i = k + 1; i < n; ++i) {
        const Scalar f = lu_(i, k) / pivot;
        lu_(i, k) = f;
        if (f == Scalar(0)) continue;
        lu_.row(i).tail(n - k - 1) -= f * lu_.row(k).tail(n - k - 1);
      }
    }
  }

  bool singular() const noexcept { return singular_; }
  Eigen::Index size() const noexcept { return lu_.rows(); }

  Vector solve(const Vector& b) const {
    if (singular_) throw SingularKernelError("matrix is exactly singular");
    const Eigen::Index n = lu_.rows();
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar acc = b(row_perm_[i]);
      for (Eigen::Index j = 0; j < i; ++j) acc -= lu_(i, j) * y(j);
      y(i) = acc;
    }
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      Scalar acc = y(i);
      for (Eigen::Index j = i + 1; j < n; ++j) acc -= lu_(i, j) * y(j);
      y(i) = acc / lu_(i, i);
    }
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(col_perm_[i]) = y(i);
    return x;
  }

  Matrix inverse() const {
    const Eigen::Index n = lu_.rows();
    Matrix inv(n, n);
    for (Eigen::Index j = 0; j < n; ++j) inv.col(j) = solve(Vector::Unit(n, j));
    return inv;
  }

  /// Exact 1-norm condition number ||A||_1 ||A^{-1}||_1.
  double condition1() const {
    if (singular_) return std::numeric_limits<double>::infinity();
    return norm1_ * inverse().cwiseAbs().colwise().sum().maxCoeff();
  }

  Scalar determinant() const {
    if (singular_) return Scalar(0);
    Scalar det(1);
    for (Eigen::Index i = 0; i < lu_.rows(); ++i) det *= lu_(i, i);
    return det * Scalar(permutation_sign(row_perm_) * permutation_sign(col_perm_));
  }

  double pivot_ratio() const noexcept { return max_pivot_ / min_pivot_; }

private:
  static int permutation_sign(std::vector<Eigen::Index> perm) {
    int sign = 1;
    for (std::size_t i = 0; i < perm.size(); ++i)
      while (perm[i] != static_cast<Eigen::Index>(i)) {
        std::swap(perm[i], perm[perm[i]]);
        sign = -sign;
      }
    return sign;
  }

  Matrix lu_;
  std::vector<Eigen::Index> row_perm_, col_perm_;
  double norm1_ = 0.0;
  double max_pivot_ = 0.0;
  double min_pivot_ = std::numeric_limits<double>::infinity();
  bool singular_ = false;
};

/// Classical adjoint of a 4x4 matrix from its 3x3 cofactors.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, 4, 4> adjugate4(const Eigen::MatrixBase<Derived>& m) {
  using S = typename Derived::Scalar;
  Eigen::Matrix<S, 4, 4> adj;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      int r[3], c[3];
      for (int k = 0, n = 0; k < 4; ++k)
        if (k != i) r[n++] = k;
      for (int k = 0, n = 0; k < 4; ++k)
        if (k != j) c[n++] = k;
      const S minor =
          m(r[0], c[0]) * (m(r[1], c[1]) * m(r[2], c[2]) - m(r[1], c[2]) * m(r[2], c[1])) -
          m(r[0], c[1]) * (m(r[1], c[0]) * m(r[2], c[2]) - m(r[1], c[2]) * m(r[2], c[0])) +
          m(r[0], c[2]) * (m(r[1], c[0]) * m(r[2], c[1]) - m(r[1], c[1]) * m(r[2], c[0]));
      // adj = transpose of the cofactor matrix
      adj(j, i) = ((i + j) % 2 == 0) ? minor : -minor;
    }
  return adj;
}

} // namespace qsw
