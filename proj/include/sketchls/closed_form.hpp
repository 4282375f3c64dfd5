#pragma once

#include <cstddef>
#include <stdexcept>

#include "sketchls/linalg.hpp"
#include "sketchls/sketch.hpp"

namespace sketchls {

/// Ridge regression instance: min_w (1/2n)||y - Xw||_2^2 + (lambda/2)||w||_2^2.
/// lambda is strictly positive throughout the library; the dual conversions
/// divide by it and every factored system stays SPD.
struct RidgeProblem {
  DenseMatrix X;
  Vec y;
  double lambda = 0.0;

  std::size_t n() const { return X.rows; }
  std::size_t p() const { return X.cols; }
};

struct PrimalDualPair {
  Vec w;      // primal, length p
  Vec alpha;  // dual, length n
};

inline void validate_problem(const RidgeProblem& prob) {
  if (prob.y.size() != prob.n())
    throw DimensionError("ridge problem: y length != rows(X)");
  if (!(prob.lambda > 0.0))
    throw std::invalid_argument("ridge problem: lambda must be positive");
  if (!all_finite(prob.X) || !all_finite(prob.y) || !std::isfinite(prob.lambda))
    throw std::invalid_argument("ridge problem: non-finite input");
}

/// Primal objective value at w.
inline double ridge_objective(const RidgeProblem& prob, const Vec& w) {
  const Vec r = subtract(prob.y, matvec(prob.X, w));
  const double n = static_cast<double>(prob.n());
  const double rr = dot(r, r);
  const double ww = dot(w, w);
  return rr / (2.0 * n) + 0.5 * prob.lambda * ww;
}

enum class RidgeForm { Auto, PrimalForm, DualForm };

/// Desk-scale memory guard on the n x n dual solve.
constexpr std::size_t kMaxDualSolveDim = 5000;

/// alpha = y - Xw
inline Vec dual_from_primal(const RidgeProblem& prob, const Vec& w) {
  if (w.size() != prob.p()) throw DimensionError("dual_from_primal: w length != p");
  return subtract(prob.y, matvec(prob.X, w));
}

/// w = X^T alpha / (lambda n)
inline Vec primal_from_dual(const RidgeProblem& prob, const Vec& alpha) {
  if (alpha.size() != prob.n()) throw DimensionError("primal_from_dual: alpha length != n");
  return scaled(tmatvec(prob.X, alpha),
                1.0 / (prob.lambda * static_cast<double>(prob.n())));
}

/// Exact ridge solution by either normal-equation form. Auto factors the
/// smaller Gram matrix (primal when p <= n).
inline PrimalDualPair ridge_exact(const RidgeProblem& prob,
                                  RidgeForm form = RidgeForm::Auto,
                                  bool allow_large_dual = false) {
  validate_problem(prob);
  const double n = static_cast<double>(prob.n());
  if (form == RidgeForm::Auto)
    form = (prob.p() <= prob.n()) ? RidgeForm::PrimalForm : RidgeForm::DualForm;

  PrimalDualPair out;
  if (form == RidgeForm::PrimalForm) {
    DenseMatrix H = gram(prob.X);
    detail::emap(H) /= n;
    add_diagonal(H, prob.lambda);
    const SpdFactorization F = spd_factor(H);
    out.w = spd_solve(F, scaled(tmatvec(prob.X, prob.y), 1.0 / n));
  } else {
    if (prob.n() > kMaxDualSolveDim && !allow_large_dual)
      throw std::invalid_argument(
          "ridge_exact: dual form refused for n > 5000 (pass allow_large_dual to override)");
    DenseMatrix K = outer_gram(prob.X);
    detail::emap(K) /= n;
    add_diagonal(K, prob.lambda);
    const SpdFactorization F = spd_factor(K);
    const Vec t = spd_solve(F, prob.y);
    out.w = scaled(tmatvec(prob.X, t), 1.0 / n);
  }
  out.alpha = dual_from_primal(prob, out.w);
  return out;
}

enum class ClosedFormMethod {
  Original,
  ClassicalSketch,
  RandomProjection,
  HessianSketch,
  DualRandomProjection
};

/// One-shot sketched solutions.
///
/// ClassicalSketch sketches both the data and the response; HessianSketch
/// only the quadratic term (the linear term keeps the exact X^T y).
/// RandomProjection solves the d-dimensional compressed problem and recovers
/// naively as w = R z; DualRandomProjection recovers through the dual
/// variables (alpha = y - XRz, w = X^T alpha / (lambda n)), which is the
/// Woodbury evaluation of the n x n Gram-sketched closed form and factors
/// only d x d.
inline PrimalDualPair sketched_closed_form(const RidgeProblem& prob,
                                           ClosedFormMethod method,
                                           const SketchOperator& op) {
  validate_problem(prob);
  const double n = static_cast<double>(prob.n());

  PrimalDualPair out;
  switch (method) {
    case ClosedFormMethod::Original:
      return ridge_exact(prob);

    case ClosedFormMethod::ClassicalSketch:
    case ClosedFormMethod::HessianSketch: {
      if (op.input_dim != prob.n())
        throw DimensionError("sketched_closed_form: sample sketch Pi must have input_dim == n");
      const DenseMatrix S = apply_sketch(prob.X, op, SketchSide::LeftTranspose);  // m x p
      DenseMatrix Ht = gram(S);
      detail::emap(Ht) /= n;
      add_diagonal(Ht, prob.lambda);
      const SpdFactorization F = spd_factor(Ht);
      Vec rhs;
      if (method == ClosedFormMethod::ClassicalSketch) {
        const Vec ys = tmatvec(op.matrix, prob.y);  // Pi^T y
        rhs = scaled(tmatvec(S, ys), 1.0 / n);      // X^T Pi Pi^T y / n
      } else {
        rhs = scaled(tmatvec(prob.X, prob.y), 1.0 / n);  // X^T y / n
      }
      out.w = spd_solve(F, rhs);
      break;
    }

    case ClosedFormMethod::RandomProjection:
    case ClosedFormMethod::DualRandomProjection: {
      if (op.input_dim != prob.p())
        throw DimensionError("sketched_closed_form: projection R must have input_dim == p");
      const DenseMatrix G = apply_sketch(prob.X, op, SketchSide::Right);  // n x d
      DenseMatrix K = gram(G);
      detail::emap(K) /= n;
      add_diagonal(K, prob.lambda);
      const SpdFactorization F = spd_factor(K);
      const Vec z = spd_solve(F, scaled(tmatvec(G, prob.y), 1.0 / n));
      if (method == ClosedFormMethod::RandomProjection) {
        out.w = matvec(op.matrix, z);  // naive recovery w = R z
      } else {
        const Vec alpha = subtract(prob.y, matvec(G, z));
        out.w = primal_from_dual(prob, alpha);
      }
      break;
    }
  }
  out.alpha = dual_from_primal(prob, out.w);
  return out;
}

}  // namespace sketchls
