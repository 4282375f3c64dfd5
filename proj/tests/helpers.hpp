#pragma once

#include <cmath>
#include <cstdint>

#include "sketchls/linalg.hpp"
#include "sketchls/rng.hpp"

namespace test_helpers {

using sketchls::DenseMatrix;
using sketchls::Rng;
using sketchls::Vec;

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (double& x : m.data) x = rng.normal();
  return m;
}

inline Vec random_vector(std::size_t n, Rng& rng) {
  Vec v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

/// G^T G / dim + I, comfortably SPD.
inline DenseMatrix random_spd(std::size_t dim, Rng& rng) {
  const DenseMatrix g = random_matrix(dim, dim, rng);
  DenseMatrix a = sketchls::gram(g);
  for (double& x : a.data) x /= static_cast<double>(dim);
  sketchls::add_diagonal(a, 1.0);
  return a;
}

inline double rel_err(const Vec& got, const Vec& want) {
  const double scale = sketchls::norm2(want);
  return sketchls::norm2(sketchls::subtract(got, want)) / (scale > 0.0 ? scale : 1.0);
}

inline double frob(const DenseMatrix& a) {
  double s = 0.0;
  for (double x : a.data) s += x * x;
  return std::sqrt(s);
}

/// Entrywise triple-loop product, the oracle for the fast paths.
inline DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k)
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += a(i, k) * b(k, j);
  return out;
}

inline Vec naive_matvec(const DenseMatrix& a, const Vec& x) {
  Vec out(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out[i] += a(i, j) * x[j];
  return out;
}

}  // namespace test_helpers
