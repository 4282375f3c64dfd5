#pragma once

#include <cstdint>
#include <stdexcept>

#include "sketchls/linalg.hpp"
#include "sketchls/rng.hpp"

namespace sketchls {

enum class SketchKind { Gaussian, Rademacher, Identity };

/// Seed-reproducible random sketching operator, materialized densely.
///
/// Entries are scaled so that E[S S^T] = I over the seed distribution:
/// Gaussian entries are N(0, 1/sketch_dim), Rademacher entries +-1/sqrt(sketch_dim).
/// The Identity kind (square, sketch_dim == input_dim) is a test instrument
/// that makes every sketched method exact.
struct SketchOperator {
  SketchKind kind = SketchKind::Gaussian;
  std::size_t input_dim = 0;   // n for a row sketch Pi, p for a column sketch R
  std::size_t sketch_dim = 0;  // m or d
  std::uint64_t seed = 0;
  DenseMatrix matrix;          // input_dim x sketch_dim
};

/// Deterministic in (kind, dims, seed); entries are drawn row-major.
inline SketchOperator make_sketch(SketchKind kind, std::size_t input_dim,
                                  std::size_t sketch_dim, std::uint64_t seed) {
  if (input_dim == 0 || sketch_dim == 0)
    throw std::invalid_argument("make_sketch: dimensions must be positive");
  if (kind == SketchKind::Identity && sketch_dim != input_dim)
    throw DimensionError("make_sketch: identity sketch requires sketch_dim == input_dim");

  SketchOperator op;
  op.kind = kind;
  op.input_dim = input_dim;
  op.sketch_dim = sketch_dim;
  op.seed = seed;

  switch (kind) {
    case SketchKind::Identity:
      op.matrix = DenseMatrix::identity(input_dim);
      break;
    case SketchKind::Gaussian: {
      op.matrix = DenseMatrix(input_dim, sketch_dim);
      Rng rng(seed);
      const double scale = 1.0 / std::sqrt(static_cast<double>(sketch_dim));
      for (double& x : op.matrix.data) x = scale * rng.normal();
      break;
    }
    case SketchKind::Rademacher: {
      op.matrix = DenseMatrix(input_dim, sketch_dim);
      Rng rng(seed);
      const double scale = 1.0 / std::sqrt(static_cast<double>(sketch_dim));
      for (double& x : op.matrix.data) x = scale * rng.sign();
      break;
    }
  }
  return op;
}

enum class SketchSide {
  LeftTranspose,  // Pi^T X, reduces the sample dimension: (n x m)^T (n x p) -> m x p
  Right           // X R, reduces the feature dimension: (n x p)(p x d) -> n x d
};

inline DenseMatrix apply_sketch(const DenseMatrix& X, const SketchOperator& op,
                                SketchSide side) {
  if (side == SketchSide::LeftTranspose) {
    if (op.input_dim != X.rows)
      throw DimensionError("apply_sketch: left sketch input_dim != rows(X)");
    return tmatmul(op.matrix, X);
  }
  if (op.input_dim != X.cols)
    throw DimensionError("apply_sketch: right sketch input_dim != cols(X)");
  return matmul(X, op.matrix);
}

}  // namespace sketchls
