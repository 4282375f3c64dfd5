#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sketchls/errors.hpp"

namespace sketchls {

using Vec = std::vector<double>;

/// Row-major dense matrix. The only matrix representation in the library;
/// every subproblem at the scales we target fits comfortably in a dense block.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, rows*cols entries

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

namespace detail {

using ERowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const ERowMat> emap(const DenseMatrix& a) {
  return {a.data.data(), static_cast<Eigen::Index>(a.rows),
          static_cast<Eigen::Index>(a.cols)};
}

inline Eigen::Map<ERowMat> emap(DenseMatrix& a) {
  return {a.data.data(), static_cast<Eigen::Index>(a.rows),
          static_cast<Eigen::Index>(a.cols)};
}

inline Eigen::Map<const Eigen::VectorXd> evmap(const Vec& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

inline Eigen::Map<Eigen::VectorXd> evmap(Vec& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

inline DenseMatrix from_eigen(const Eigen::MatrixXd& m) {
  DenseMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  emap(out) = m;
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  return detail::evmap(a).dot(detail::evmap(b));
}

inline double norm2(const Vec& a) { return detail::evmap(a).norm(); }

inline double norm_inf(const Vec& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

/// y += c * x
inline void axpy(double c, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
  detail::evmap(y) += c * detail::evmap(x);
}

inline Vec scaled(const Vec& a, double c) {
  Vec out(a);
  for (double& x : out) x *= c;
  return out;
}

inline Vec subtract(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("subtract: length mismatch");
  Vec out(a);
  detail::evmap(out) -= detail::evmap(b);
  return out;
}

inline bool all_finite(const Vec& a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(const DenseMatrix& a) {
  for (double x : a.data)
    if (!std::isfinite(x)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

inline Vec matvec(const DenseMatrix& A, const Vec& x) {
  if (x.size() != A.cols) throw DimensionError("matvec: dimension mismatch");
  Vec out(A.rows);
  detail::evmap(out) = detail::emap(A) * detail::evmap(x);
  return out;
}

/// A^T x
inline Vec tmatvec(const DenseMatrix& A, const Vec& x) {
  if (x.size() != A.rows) throw DimensionError("tmatvec: dimension mismatch");
  Vec out(A.cols);
  detail::evmap(out) = detail::emap(A).transpose() * detail::evmap(x);
  return out;
}

inline DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B) {
  if (A.cols != B.rows) throw DimensionError("matmul: dimension mismatch");
  DenseMatrix out(A.rows, B.cols);
  detail::emap(out) = detail::emap(A) * detail::emap(B);
  return out;
}

/// A^T B
inline DenseMatrix tmatmul(const DenseMatrix& A, const DenseMatrix& B) {
  if (A.rows != B.rows) throw DimensionError("tmatmul: dimension mismatch");
  DenseMatrix out(A.cols, B.cols);
  detail::emap(out) = detail::emap(A).transpose() * detail::emap(B);
  return out;
}

/// A^T A (cols x cols), computed as a symmetric rank update.
inline DenseMatrix gram(const DenseMatrix& A) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A.cols),
                                            static_cast<Eigen::Index>(A.cols));
  g.selfadjointView<Eigen::Lower>().rankUpdate(detail::emap(A).transpose());
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return detail::from_eigen(g);
}

/// A A^T (rows x rows).
inline DenseMatrix outer_gram(const DenseMatrix& A) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A.rows),
                                            static_cast<Eigen::Index>(A.rows));
  g.selfadjointView<Eigen::Lower>().rankUpdate(detail::emap(A));
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return detail::from_eigen(g);
}

inline DenseMatrix transpose(const DenseMatrix& A) {
  DenseMatrix out(A.cols, A.rows);
  detail::emap(out) = detail::emap(A).transpose();
  return out;
}

/// A += c * I
inline void add_diagonal(DenseMatrix& A, double c) {
  if (A.rows != A.cols) throw DimensionError("add_diagonal: not square");
  for (std::size_t i = 0; i < A.rows; ++i) A(i, i) += c;
}

inline double max_abs(const DenseMatrix& A) {
  double m = 0.0;
  for (double x : A.data) m = std::max(m, std::abs(x));
  return m;
}

// ---------------------------------------------------------------------------
// The X-norm
// ---------------------------------------------------------------------------

/// ||w||_X = sqrt(w^T X^T X w / n) = ||X w||_2 / sqrt(n).
inline double xnorm(const DenseMatrix& X, const Vec& w) {
  if (w.size() != X.cols) throw DimensionError("xnorm: w length != cols(X)");
  const Vec xw = matvec(X, w);
  return norm2(xw) / std::sqrt(static_cast<double>(X.rows));
}

// ---------------------------------------------------------------------------
// SPD factorization (factor once, solve many)
// ---------------------------------------------------------------------------

inline bool is_symmetric(const DenseMatrix& A, double rel_tol = 1e-10) {
  if (A.rows != A.cols) return false;
  const double scale = max_abs(A);
  double dev = 0.0;
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = i + 1; j < A.cols; ++j)
      dev = std::max(dev, std::abs(A(i, j) - A(j, i)));
  return dev <= rel_tol * std::max(scale, 1e-300);
}

/// Cholesky factorization of a symmetric positive definite matrix.
struct SpdFactorization {
  std::size_t dim = 0;
  DenseMatrix factor;  // lower triangular L with L L^T = A
};

inline SpdFactorization spd_factor(const DenseMatrix& A) {
  if (A.rows != A.cols) throw DimensionError("spd_factor: matrix not square");
  if (!is_symmetric(A)) throw NotSymmetricError("spd_factor: matrix not symmetric");
  // Symmetrize first to absorb round-off from Gram-style assembly.
  Eigen::MatrixXd S = 0.5 * (detail::emap(A) + detail::emap(A).transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError("spd_factor: nonpositive pivot, matrix not positive definite");
  SpdFactorization f;
  f.dim = A.rows;
  f.factor = detail::from_eigen(llt.matrixL());
  return f;
}

inline Vec spd_solve(const SpdFactorization& F, const Vec& b) {
  if (b.size() != F.dim) throw DimensionError("spd_solve: rhs length mismatch");
  Vec x(b);
  auto L = detail::emap(F.factor);
  L.triangularView<Eigen::Lower>().solveInPlace(detail::evmap(x));
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(detail::evmap(x));
  return x;
}

// ---------------------------------------------------------------------------
// Symmetric eigenvalues and thin SVD
// ---------------------------------------------------------------------------

/// Smallest and largest eigenvalue of a symmetric matrix.
inline std::pair<double, double> extreme_eigs(const DenseMatrix& A) {
  if (A.rows != A.cols) throw DimensionError("extreme_eigs: matrix not square");
  if (!is_symmetric(A)) throw NotSymmetricError("extreme_eigs: matrix not symmetric");
  Eigen::MatrixXd S = 0.5 * (detail::emap(A) + detail::emap(A).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev(0), ev(ev.size() - 1)};
}

struct SvdResult {
  DenseMatrix U;        // rows x k, orthonormal columns
  Vec singular_values;  // k, nonincreasing
  DenseMatrix V;        // cols x k, orthonormal columns
};

/// Top-k singular triplets of X.
inline SvdResult thin_svd(const DenseMatrix& X, std::size_t k) {
  const std::size_t kmax = std::min(X.rows, X.cols);
  if (k > kmax) throw DimensionError("thin_svd: k out of range");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(detail::emap(X),
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto ik = static_cast<Eigen::Index>(k);
  SvdResult out;
  out.U = detail::from_eigen(svd.matrixU().leftCols(ik));
  out.V = detail::from_eigen(svd.matrixV().leftCols(ik));
  out.singular_values.assign(svd.singularValues().data(), svd.singularValues().data() + ik);
  return out;
}

}  // namespace sketchls
