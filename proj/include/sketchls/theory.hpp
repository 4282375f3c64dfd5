#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <functional>
#include <stdexcept>
#include <utility>

#include "sketchls/closed_form.hpp"
#include "sketchls/linalg.hpp"
#include "sketchls/rng.hpp"
#include "sketchls/sketch.hpp"

namespace sketchls {

/// Bundle of the computable sketch-quality quantities for one problem/sketch.
struct TheoryReport {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double width_sq_estimate = 0.0;
  double kappa = 1.0;
  std::function<double(std::size_t)> envelope;  // t -> error bound
};

enum class SubspaceSet { ColumnSpace, RowSpace };

namespace detail {

/// Orthonormal basis of the column or row space of X; rank detected as the
/// number of singular values above 1e-10 of the largest.
inline DenseMatrix subspace_basis(const DenseMatrix& X, SubspaceSet set) {
  const std::size_t kmax = std::min(X.rows, X.cols);
  const SvdResult svd = thin_svd(X, kmax);
  std::size_t rank = 0;
  const double cutoff =
      svd.singular_values.empty() ? 0.0 : 1e-10 * svd.singular_values.front();
  for (double s : svd.singular_values)
    if (s > cutoff) ++rank;
  const DenseMatrix& full = set == SubspaceSet::ColumnSpace ? svd.U : svd.V;
  DenseMatrix basis(full.rows, rank);
  for (std::size_t i = 0; i < full.rows; ++i)
    for (std::size_t j = 0; j < rank; ++j) basis(i, j) = full(i, j);
  return basis;
}

/// Resolve which subspace of X the sketch acts on from its ambient dimension.
inline DenseMatrix basis_for_sketch(const DenseMatrix& X, const SketchOperator& S) {
  // rows first, so a square X defaults to its column space
  if (S.input_dim == X.rows) return subspace_basis(X, SubspaceSet::ColumnSpace);
  if (S.input_dim == X.cols) return subspace_basis(X, SubspaceSet::RowSpace);
  throw DimensionError("theory: sketch input_dim matches neither rows nor cols of X");
}

}  // namespace detail

/// rho1 = inf over unit vectors u of the subspace of u^T S S^T u, computed
/// exactly as the smallest eigenvalue of U^T S S^T U for an orthonormal basis
/// U of the subspace.
inline double rho1(const DenseMatrix& X, const SketchOperator& S) {
  const DenseMatrix U = detail::basis_for_sketch(X, S);
  if (U.cols == 0)
    throw std::invalid_argument("rho1: X has rank zero, the subspace sphere is empty");
  const DenseMatrix B = tmatmul(S.matrix, U);  // sketch_dim x rank
  return extreme_eigs(gram(B)).first;
}

/// rho2 = sup over unit vectors u of the subspace of |u^T (S S^T - I) v|,
/// the norm of the subspace projection of (S S^T - I) v.
inline double rho2(const DenseMatrix& X, const SketchOperator& S, const Vec& v) {
  if (v.size() != S.input_dim) throw DimensionError("rho2: v length != sketch input_dim");
  const DenseMatrix U = detail::basis_for_sketch(X, S);
  Vec t = matvec(S.matrix, tmatvec(S.matrix, v));  // S S^T v
  axpy(-1.0, v, t);
  return norm2(tmatvec(U, t));
}

/// Monte-Carlo estimate of the Gaussian width of the unit ball of the chosen
/// subspace of X: mean of ||U^T g||_2 over standard normal draws. Returns
/// (estimate, standard error).
inline std::pair<double, double> gaussian_width_mc(const DenseMatrix& X,
                                                   SubspaceSet set,
                                                   std::size_t trials,
                                                   std::uint64_t seed) {
  if (trials < 2) throw std::invalid_argument("gaussian_width_mc: trials must be >= 2");
  const DenseMatrix U = detail::subspace_basis(X, set);
  if (U.cols == 0) return {0.0, 0.0};
  Rng rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  Vec g(U.rows);
  for (std::size_t t = 0; t < trials; ++t) {
    for (double& x : g) x = rng.normal();
    const double val = norm2(tmatvec(U, g));
    sum += val;
    sum_sq += val * val;
  }
  const double nt = static_cast<double>(trials);
  const double mean = sum / nt;
  const double var = std::max(0.0, (sum_sq - nt * mean * mean) / (nt - 1.0));
  return {mean, std::sqrt(var / nt)};
}

enum class TheorySide { HS, DRP };

/// Desk-scale guard on the explicit symmetric-form eigenproblem.
constexpr std::size_t kMaxKappaDim = 2000;

/// Condition number kappa(Htilde^{-1} H) of the preconditioned system, via
/// the similar symmetric form Htilde^{-1/2} H Htilde^{-1/2}. HS works in the
/// primal space (p x p), DRP in the dual space (n x n).
inline double kappa_sketch(const RidgeProblem& prob, const SketchOperator& S,
                           TheorySide side) {
  validate_problem(prob);
  const double n = static_cast<double>(prob.n());
  const std::size_t dim = side == TheorySide::HS ? prob.p() : prob.n();
  if (dim > kMaxKappaDim)
    throw std::invalid_argument("kappa_sketch: eigenproblem dimension exceeds 2000");

  DenseMatrix H, Ht;
  if (side == TheorySide::HS) {
    if (S.input_dim != prob.n())
      throw DimensionError("kappa_sketch: HS sketch must have input_dim == n");
    H = gram(prob.X);
    Ht = gram(apply_sketch(prob.X, S, SketchSide::LeftTranspose));
  } else {
    if (S.input_dim != prob.p())
      throw DimensionError("kappa_sketch: DRP sketch must have input_dim == p");
    H = outer_gram(prob.X);
    Ht = outer_gram(apply_sketch(prob.X, S, SketchSide::Right));
  }
  detail::emap(H) /= n;
  add_diagonal(H, prob.lambda);
  detail::emap(Ht) /= n;
  add_diagonal(Ht, prob.lambda);

  // Htilde^{-1/2} by symmetric eigendecomposition
  Eigen::MatrixXd Hts = 0.5 * (detail::emap(Ht) + detail::emap(Ht).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hts);
  if (es.eigenvalues()(0) <= 0.0)
    throw NotPositiveDefiniteError("kappa_sketch: sketched Hessian not positive definite");
  Eigen::MatrixXd inv_sqrt =
      es.eigenvectors() *
      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();
  const DenseMatrix M = detail::from_eigen(inv_sqrt * detail::emap(H) * inv_sqrt);
  const auto [lo, hi] = extreme_eigs(M);
  return hi / lo;
}

/// t -> 2 ((sqrt(kappa)-1)/(sqrt(kappa)+1))^t * w_norm, the conjugate-gradient
/// error envelope for a preconditioned system of condition number kappa.
inline std::function<double(std::size_t)> rate_envelope(double kappa, double w_norm) {
  if (kappa < 1.0 - 1e-10) throw std::invalid_argument("rate_envelope: kappa must be >= 1");
  kappa = std::max(kappa, 1.0);
  const double sq = std::sqrt(kappa);
  const double ratio = (sq - 1.0) / (sq + 1.0);
  return [ratio, w_norm](std::size_t t) {
    return 2.0 * std::pow(ratio, static_cast<double>(t)) * w_norm;
  };
}

enum class IterScheme { IHS, AccIHS, IPDSOuter, IPDSInner };

/// Predicted iteration counts to reach eps accuracy given the contraction
/// input rho (a caller-supplied bound; the universal constants in front of
/// the width terms are not computable).
///   IHS:       ceil( (1+rho)/(1-rho)    * log(2 w_norm / eps) )
///   AccIHS:    ceil( sqrt(1/(1-2 rho))  * log(2 w_norm / eps) ), rho < 1/2
///   IPDSOuter: ceil( (1+rho)/(1-rho)    * log(4 w_norm / eps) )
///   IPDSInner: ceil( (1+rho)/(1-rho)    * log(40 w_norm / eps) )
/// For IPDSInner the caller passes w_norm = lambda_max^2(X^T X/n) ||w*||_2 / lambda;
/// the 40x multiplier is applied here.
inline std::size_t iteration_counts(double rho, double w_norm, double eps,
                                    IterScheme scheme) {
  if (!(eps > 0.0)) throw std::invalid_argument("iteration_counts: eps must be positive");
  if (w_norm < 0.0) throw std::invalid_argument("iteration_counts: w_norm must be >= 0");
  if (rho < 0.0 || rho >= 1.0)
    throw std::invalid_argument("iteration_counts: rho must lie in [0, 1)");
  if (scheme == IterScheme::AccIHS && rho >= 0.5)
    throw std::invalid_argument("iteration_counts: AccIHS requires rho < 1/2");

  const double factor = scheme == IterScheme::AccIHS
                            ? std::sqrt(1.0 / (1.0 - 2.0 * rho))
                            : (1.0 + rho) / (1.0 - rho);
  double mult = 2.0;
  if (scheme == IterScheme::IPDSOuter) mult = 4.0;
  if (scheme == IterScheme::IPDSInner) mult = 40.0;
  const double value = factor * std::log(mult * w_norm / eps);
  if (!(value > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(value));
}

/// Bundle of the side's computable quantities for one problem/sketch pair.
/// `direction` is the vector whose sketched distortion rho2 measures,
/// typically the unit vector along X w* (sample side) or X^T alpha*
/// (projection side); `envelope_norm` scales the rate envelope, typically
/// ||w*||_X or ||alpha*||_{X^T}.
inline TheoryReport make_theory_report(const RidgeProblem& prob,
                                       const SketchOperator& S, TheorySide side,
                                       const Vec& direction, double envelope_norm,
                                       std::size_t trials, std::uint64_t seed) {
  TheoryReport rep;
  rep.rho1 = rho1(prob.X, S);
  rep.rho2 = rho2(prob.X, S, direction);
  const auto [width, stderr_unused] = gaussian_width_mc(
      prob.X,
      side == TheorySide::HS ? SubspaceSet::ColumnSpace : SubspaceSet::RowSpace,
      trials, seed);
  rep.width_sq_estimate = width * width;
  rep.kappa = kappa_sketch(prob, S, side);
  rep.envelope = rate_envelope(rep.kappa, envelope_norm);
  return rep;
}

/// Explicit constants of the approximately-low-rank recovery bound and the
/// sketch-dimension precondition that activates it.
struct LowRankBoundConstants {
  double eps = 0.0;
  double tau = 0.0;
  double upsilon = 0.0;
  double bound = 0.0;           // multiplier of ||w*|| on the right-hand side
  bool thresholds_met = false;  // sketch_dim satisfies the precondition
};

/// sketch_dim is m (HS) or d (DRP); ambient is n (HS) or p (DRP); r is the
/// head rank; sigma_r1 the (r+1)-th singular value; rho_orth the tail
/// orthogonality ratio of w* appropriate to the side.
inline LowRankBoundConstants lowrank_bound_constants(std::size_t sketch_dim, std::size_t r,
                                              std::size_t ambient, double delta,
                                              double sigma_r1, double lambda,
                                              std::size_t n, TheorySide side,
                                              double rho_orth) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("lowrank_bound_constants: delta must lie in (0, 1)");
  if (r < 1 || r >= ambient)
    throw std::invalid_argument("lowrank_bound_constants: need 1 <= r < ambient");
  if (sketch_dim < 1)
    throw std::invalid_argument("lowrank_bound_constants: sketch_dim must be >= 1");
  if (!(lambda > 0.0) || n < 1)
    throw std::invalid_argument("lowrank_bound_constants: lambda > 0 and n >= 1 required");

  const double s = static_cast<double>(sketch_dim);
  const double a = static_cast<double>(ambient);
  const double rr = static_cast<double>(r);
  const double ln = lambda * static_cast<double>(n);
  const double sig_sq = sigma_r1 * sigma_r1;

  LowRankBoundConstants out;
  out.eps = 2.0 * std::sqrt(2.0 * (rr + 1.0) / s * std::log(2.0 * rr / delta));
  out.tau = (7.0 / 3.0) * std::sqrt(2.0 * (a - rr) / s * std::log(a / delta));
  out.upsilon =
      2.0 * std::sqrt(2.0 * (a - rr + 1.0) / s * std::log(2.0 * (a - rr) / delta));

  if (out.eps >= 1.0) {
    out.bound = std::numeric_limits<double>::infinity();
  } else {
    const double rho_sq = rho_orth * rho_orth;
    const double first = 1.0 / (1.0 - out.eps) + sig_sq / ln;
    const double second = (out.eps * out.eps + out.tau * out.tau * rho_sq) / (1.0 - out.eps) +
                          (out.tau * out.tau * sig_sq +
                           rho_sq * out.upsilon * out.upsilon * sig_sq) /
                              ln;
    out.bound = 4.0 * std::sqrt(first) * std::sqrt(second);
  }

  // precondition: m >= max(32(r+1), 4 log(2m/delta), 784 sigma^2/(9 lambda)) log(n/delta)
  // on the HS side; the DRP analogue carries p/(lambda n) in the third term.
  const double third = side == TheorySide::HS
                           ? 784.0 * sig_sq / (9.0 * lambda)
                           : 784.0 * a * sig_sq / (9.0 * ln);
  const double need = std::max({32.0 * (rr + 1.0),
                                4.0 * std::log(2.0 * s / delta), third}) *
                      std::log(a / delta);
  out.thresholds_met = s >= need;
  return out;
}

}  // namespace sketchls
