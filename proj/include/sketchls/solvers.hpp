#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "sketchls/closed_form.hpp"
#include "sketchls/pcg.hpp"
#include "sketchls/sketch.hpp"

namespace sketchls {

struct SolveRecord {
  std::size_t iter = 0;
  std::size_t subproblems = 0;  // cumulative factored-subproblem solves so far
  std::optional<double> err_x;  // ||w_t - w*||_X when a reference was supplied
  std::optional<double> err_2;  // ||w_t - w*||_2 likewise
  double objective = 0.0;       // primal objective at w_t
  std::int64_t wall_ns = 0;     // elapsed since the solve started
};

struct SolveReport {
  PrimalDualPair final;
  std::vector<SolveRecord> trace;  // one record per outer iterate, starting at 0
  RunStatus status = RunStatus::MaxIters;
  std::string method;
  std::size_t factored_dim = 0;   // side length of the largest factored system
  std::size_t sketched_rows = 0;  // shape of the sketched data the solver built
  std::size_t sketched_cols = 0;
  std::vector<PrimalDualPair> iterates;  // populated when record_iterates is set
};

struct SolverConfig {
  IterControl outer;  // tol applies to err_X with a reference, else to the
                      // gradient norm relative to its initial value
  // IPDS/Acc-IPDS inner loops. StepLinf here is measured relative to the
  // first inner step of each subproblem: the inner unknown's natural scale is
  // data-dependent (the projected correction can be orders of magnitude
  // smaller than w), and an absolute threshold would cut the inner solve off
  // at a fixed absolute error that the dual recovery then amplifies.
  IterControl inner{500, 1e-10, StopMetric::StepLinf, 1e6};
  std::optional<PrimalDualPair> reference;  // enables the err_X / err_2 columns
  bool record_iterates = false;
  bool allow_large_dual = false;  // lifts the n > 5000 dual-space guard
};

namespace detail {

/// Shared per-outer-iteration bookkeeping: trace rows, error columns against
/// the reference, and the stopping/divergence verdict for the outer loop.
class OuterRecorder {
 public:
  OuterRecorder(const RidgeProblem& prob, const SolverConfig& cfg, SolveReport& rep)
      : prob_(prob), cfg_(cfg), rep_(rep) {
    if (cfg_.reference) x_ref_ = matvec(prob_.X, cfg_.reference->w);
  }

  /// w is the primal iterate; alpha may be null for primal-only algorithms
  /// (then derived as y - Xw); count is the cumulative subproblem tally.
  IterDecision observe(std::size_t iter, const Vec& w, const Vec* alpha,
                       std::size_t count) {
    const double n = static_cast<double>(prob_.n());
    const Vec xw = matvec(prob_.X, w);
    const Vec resid = subtract(prob_.y, xw);
    SolveRecord rec;
    rec.iter = iter;
    rec.subproblems = count;
    rec.objective = dot(resid, resid) / (2.0 * n) + 0.5 * prob_.lambda * dot(w, w);
    rec.wall_ns = clock_.ns();

    double metric;
    if (cfg_.reference) {
      rec.err_x = norm2(subtract(xw, x_ref_)) / std::sqrt(n);
      rec.err_2 = norm2(subtract(w, cfg_.reference->w));
      metric = *rec.err_x;
    } else {
      // gradient of the primal objective
      Vec grad = scaled(tmatvec(prob_.X, resid), -1.0 / n);
      axpy(prob_.lambda, w, grad);
      metric = norm2(grad);
    }
    // a non-finite iterate is divergence; it is not recorded (trace rows keep
    // finite objectives)
    if (!std::isfinite(rec.objective) || !std::isfinite(metric))
      return IterDecision::Diverged;
    rep_.trace.push_back(rec);
    if (cfg_.record_iterates)
      rep_.iterates.push_back({w, alpha ? *alpha : resid});

    if (iter == 0) metric0_ = metric;
    const double target =
        cfg_.reference ? cfg_.outer.tol : cfg_.outer.tol * metric0_;
    if (metric <= target) return IterDecision::Converged;
    if (metric > cfg_.outer.divergence_factor * std::max(metric0_, 1e-300))
      return IterDecision::Diverged;
    return IterDecision::Continue;
  }

 private:
  const RidgeProblem& prob_;
  const SolverConfig& cfg_;
  SolveReport& rep_;
  Vec x_ref_;
  double metric0_ = 0.0;
  WallClock clock_;
};

inline RunStatus status_from(IterDecision d) {
  return d == IterDecision::Converged ? RunStatus::Converged : RunStatus::Diverged;
}

/// Observer that stops an inner run once the l-inf step falls below
/// rel_tol times the first step. Shared state lives behind a pointer so the
/// observer can be copied into std::function.
inline IterObserver relative_step_stop(double rel_tol) {
  struct State {
    Vec prev;
    double first_step = -1.0;
  };
  auto state = std::make_shared<State>();
  return [state, rel_tol](std::size_t iter, const Vec& x) {
    if (iter == 0) {
      state->prev = x;
      return IterDecision::Continue;
    }
    double step = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      step = std::max(step, std::abs(x[i] - state->prev[i]));
    state->prev = x;
    if (state->first_step < 0.0) {
      state->first_step = step;
      if (step == 0.0) return IterDecision::Converged;
    }
    return step <= rel_tol * state->first_step ? IterDecision::Converged
                                               : IterDecision::Continue;
  };
}

/// Inner-loop control: the relative-step rule is driven by the observer, so
/// the runner's own metric is disabled unless the caller asked for a
/// residual-based inner stop.
inline std::pair<IterControl, IterObserver> inner_stop(const IterControl& inner) {
  if (inner.tol_metric == StopMetric::ResidualL2) return {inner, {}};
  IterControl ctl = inner;
  ctl.tol = 0.0;
  return {ctl, relative_step_stop(inner.tol)};
}

/// H w = X^T (X w)/n + lambda w, applied matrix-free.
inline LinearOperator primal_hessian_op(const RidgeProblem& prob) {
  const double n = static_cast<double>(prob.n());
  return {prob.p(), [&prob, n](const Vec& w) {
            Vec g = scaled(tmatvec(prob.X, matvec(prob.X, w)), 1.0 / n);
            axpy(prob.lambda, w, g);
            return g;
          }};
}

/// (X X^T/n + lambda I_n) a, applied matrix-free.
inline LinearOperator dual_hessian_op(const RidgeProblem& prob) {
  const double n = static_cast<double>(prob.n());
  return {prob.n(), [&prob, n](const Vec& a) {
            Vec g = scaled(matvec(prob.X, tmatvec(prob.X, a)), 1.0 / n);
            axpy(prob.lambda, a, g);
            return g;
          }};
}

/// (A^T A / n + lambda I) from already-sketched data A, factored.
inline SpdFactorization regularized_gram_factor(const DenseMatrix& A, double n,
                                                double lambda) {
  DenseMatrix g = gram(A);
  emap(g) /= n;
  add_diagonal(g, lambda);
  return spd_factor(g);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sample-sketched solvers (Pi in R^{n x m})
// ---------------------------------------------------------------------------

/// Iterative Hessian sketch: the fixed-point iteration
/// w <- w - Htilde^{-1} grad P(w) with Htilde = X^T Pi Pi^T X/n + lambda I
/// factored once and reused across iterations.
inline SolveReport ihs(const RidgeProblem& prob, const SketchOperator& Pi,
                       const SolverConfig& cfg) {
  validate_problem(prob);
  if (Pi.input_dim != prob.n())
    throw DimensionError("ihs: Pi.input_dim must equal n");
  const double n = static_cast<double>(prob.n());

  SolveReport rep;
  rep.method = "ihs";
  const DenseMatrix S = apply_sketch(prob.X, Pi, SketchSide::LeftTranspose);
  rep.sketched_rows = S.rows;
  rep.sketched_cols = S.cols;
  const SpdFactorization F = detail::regularized_gram_factor(S, n, prob.lambda);
  rep.factored_dim = F.dim;

  std::size_t count = 0;
  const PreconditionerSolve M{prob.p(), [&F, &count](const Vec& r) {
                                ++count;
                                return spd_solve(F, r);
                              }};
  const LinearOperator A = detail::primal_hessian_op(prob);
  const Vec b = scaled(tmatvec(prob.X, prob.y), 1.0 / n);

  detail::OuterRecorder recorder(prob, cfg, rep);
  IterControl ctl = cfg.outer;
  ctl.tol = 0.0;  // stopping driven by the recorder
  auto [w, tr] = fixed_point_run(A, M, b, Vec(prob.p(), 0.0), ctl,
                                 [&](std::size_t iter, const Vec& x) {
                                   return recorder.observe(iter, x, nullptr, count);
                                 });
  rep.status = tr.status;
  rep.final.w = std::move(w);
  rep.final.alpha = dual_from_primal(prob, rep.final.w);
  return rep;
}

/// Accelerated IHS: preconditioned conjugate gradient on the exact normal
/// equations with the sketched Hessian as preconditioner. Same per-iteration
/// subproblem as ihs, strictly better iterates, and convergent even when the
/// sketch is too small for ihs.
inline SolveReport acc_ihs(const RidgeProblem& prob, const SketchOperator& Pi,
                           const SolverConfig& cfg) {
  validate_problem(prob);
  if (Pi.input_dim != prob.n())
    throw DimensionError("acc_ihs: Pi.input_dim must equal n");
  const double n = static_cast<double>(prob.n());

  SolveReport rep;
  rep.method = "acc-ihs";
  const DenseMatrix S = apply_sketch(prob.X, Pi, SketchSide::LeftTranspose);
  rep.sketched_rows = S.rows;
  rep.sketched_cols = S.cols;
  const SpdFactorization F = detail::regularized_gram_factor(S, n, prob.lambda);
  rep.factored_dim = F.dim;

  std::size_t count = 0;
  const PreconditionerSolve M{prob.p(), [&F, &count](const Vec& r) {
                                ++count;
                                return spd_solve(F, r);
                              }};
  const LinearOperator A = detail::primal_hessian_op(prob);
  const Vec b = scaled(tmatvec(prob.X, prob.y), 1.0 / n);

  detail::OuterRecorder recorder(prob, cfg, rep);
  IterControl ctl = cfg.outer;
  ctl.tol = 0.0;
  auto [w, tr] = pcg_run(A, M, b, Vec(prob.p(), 0.0), ctl,
                         [&](std::size_t iter, const Vec& x) {
                           return recorder.observe(iter, x, nullptr, count);
                         });
  rep.status = tr.status;
  rep.final.w = std::move(w);
  rep.final.alpha = dual_from_primal(prob, rep.final.w);
  return rep;
}

// ---------------------------------------------------------------------------
// Dimension-sketched solvers (R in R^{p x d})
// ---------------------------------------------------------------------------

/// Iterative dual random projection: each outer step solves the d x d
/// projected residual problem with the cached factorization, then refreshes
/// the dual and primal approximations through the optimality map.
inline SolveReport idrp(const RidgeProblem& prob, const SketchOperator& R,
                        const SolverConfig& cfg) {
  validate_problem(prob);
  if (R.input_dim != prob.p())
    throw DimensionError("idrp: R.input_dim must equal p");
  const double n = static_cast<double>(prob.n());

  SolveReport rep;
  rep.method = "idrp";
  const DenseMatrix G = apply_sketch(prob.X, R, SketchSide::Right);  // n x d
  rep.sketched_rows = G.rows;
  rep.sketched_cols = G.cols;
  const SpdFactorization F = detail::regularized_gram_factor(G, n, prob.lambda);
  rep.factored_dim = F.dim;

  std::size_t count = 0;
  detail::OuterRecorder recorder(prob, cfg, rep);
  Vec w(prob.p(), 0.0);
  Vec alpha(prob.n(), 0.0);

  IterDecision d = recorder.observe(0, w, &alpha, count);
  rep.status = RunStatus::MaxIters;
  if (d != IterDecision::Continue) {
    rep.status = detail::status_from(d);
  } else {
    for (std::size_t t = 1; t <= cfg.outer.max_iters; ++t) {
      const Vec resid = subtract(prob.y, matvec(prob.X, w));
      Vec rhs = scaled(tmatvec(G, resid), 1.0 / n);
      axpy(-prob.lambda, tmatvec(R.matrix, w), rhs);
      const Vec z = spd_solve(F, rhs);
      ++count;
      alpha = subtract(resid, matvec(G, z));
      w = primal_from_dual(prob, alpha);
      d = recorder.observe(t, w, &alpha, count);
      if (d != IterDecision::Continue) {
        rep.status = detail::status_from(d);
        break;
      }
    }
  }
  rep.final = {std::move(w), std::move(alpha)};
  return rep;
}

enum class AccIdrpVariant { PrimalVersion, DualVersion };

/// Accelerated IDRP: conjugate gradient in the dual space,
/// (X X^T/n + lambda I) alpha = lambda y, preconditioned by the
/// projection-sketched dual Hessian. The PrimalVersion preconditioner is
/// u = r - X R z with z from the projected residual problem; the DualVersion
/// solves (X R R^T X^T/n + lambda I) u = r through the same d x d
/// factorization (Woodbury push-through). The two differ by a constant factor
/// lambda, which conjugate gradient cancels, so their iterates coincide.
inline SolveReport acc_idrp(const RidgeProblem& prob, const SketchOperator& R,
                            AccIdrpVariant variant, const SolverConfig& cfg) {
  validate_problem(prob);
  if (R.input_dim != prob.p())
    throw DimensionError("acc_idrp: R.input_dim must equal p");
  if (variant == AccIdrpVariant::DualVersion && prob.n() > kMaxDualSolveDim &&
      !cfg.allow_large_dual)
    throw std::invalid_argument(
        "acc_idrp: dual version refused for n > 5000 (set allow_large_dual to override)");
  const double n = static_cast<double>(prob.n());

  SolveReport rep;
  rep.method = variant == AccIdrpVariant::PrimalVersion ? "acc-idrp" : "acc-idrp-dual";
  const DenseMatrix G = apply_sketch(prob.X, R, SketchSide::Right);
  rep.sketched_rows = G.rows;
  rep.sketched_cols = G.cols;
  const SpdFactorization F = detail::regularized_gram_factor(G, n, prob.lambda);
  rep.factored_dim = F.dim;

  std::size_t count = 0;
  // lambda * (X R R^T X^T/n + lambda I)^{-1} r, evaluated with the d x d factor
  auto sketched_dual_solve = [&](const Vec& r) {
    ++count;
    const Vec z = spd_solve(F, scaled(tmatvec(G, r), 1.0 / n));
    return subtract(r, matvec(G, z));
  };
  PreconditionerSolve M{prob.n(), sketched_dual_solve};
  if (variant == AccIdrpVariant::DualVersion) {
    const double lam = prob.lambda;
    M.solve = [sketched_dual_solve, lam](const Vec& r) {
      return scaled(sketched_dual_solve(r), 1.0 / lam);
    };
  }

  const LinearOperator A = detail::dual_hessian_op(prob);
  const Vec b = scaled(prob.y, prob.lambda);

  detail::OuterRecorder recorder(prob, cfg, rep);
  IterControl ctl = cfg.outer;
  ctl.tol = 0.0;
  auto [alpha, tr] = pcg_run(A, M, b, Vec(prob.n(), 0.0), ctl,
                             [&](std::size_t iter, const Vec& a) {
                               const Vec w = primal_from_dual(prob, a);
                               return recorder.observe(iter, w, &a, count);
                             });
  rep.status = tr.status;
  rep.final.alpha = std::move(alpha);
  rep.final.w = primal_from_dual(prob, rep.final.alpha);
  return rep;
}

// ---------------------------------------------------------------------------
// Primal-dual sketched solvers (Pi and R together; subproblems are m x d)
// ---------------------------------------------------------------------------

/// Iterative primal-dual sketch: the outer loop is idrp, but the projected
/// d-dimensional problem is itself solved approximately by Hessian-sketched
/// fixed-point iterations whose only factored matrix is d x d, built from the
/// doubly sketched m x d data Pi^T X R.
inline SolveReport ipds(const RidgeProblem& prob, const SketchOperator& Pi,
                        const SketchOperator& R, const SolverConfig& cfg) {
  validate_problem(prob);
  if (Pi.input_dim != prob.n())
    throw DimensionError("ipds: Pi.input_dim must equal n");
  if (R.input_dim != prob.p())
    throw DimensionError("ipds: R.input_dim must equal p");
  const double n = static_cast<double>(prob.n());
  const std::size_t dim = R.sketch_dim;

  SolveReport rep;
  rep.method = "ipds";
  const DenseMatrix G = apply_sketch(prob.X, R, SketchSide::Right);     // n x d
  const DenseMatrix SG = apply_sketch(G, Pi, SketchSide::LeftTranspose);  // m x d
  rep.sketched_rows = SG.rows;
  rep.sketched_cols = SG.cols;
  const SpdFactorization F = detail::regularized_gram_factor(SG, n, prob.lambda);
  rep.factored_dim = F.dim;

  std::size_t count = 0;
  const PreconditionerSolve Min{dim, [&F, &count](const Vec& r) {
                                  ++count;
                                  return spd_solve(F, r);
                                }};
  const LinearOperator Ain{dim, [&G, &prob, n](const Vec& z) {
                             Vec g = scaled(tmatvec(G, matvec(G, z)), 1.0 / n);
                             axpy(prob.lambda, z, g);
                             return g;
                           }};

  detail::OuterRecorder recorder(prob, cfg, rep);
  Vec w(prob.p(), 0.0);
  Vec alpha(prob.n(), 0.0);

  IterDecision d = recorder.observe(0, w, &alpha, count);
  rep.status = RunStatus::MaxIters;
  if (d != IterDecision::Continue) {
    rep.status = detail::status_from(d);
  } else {
    for (std::size_t t = 1; t <= cfg.outer.max_iters; ++t) {
      const Vec resid = subtract(prob.y, matvec(prob.X, w));
      Vec bin = scaled(tmatvec(G, resid), 1.0 / n);
      axpy(-prob.lambda, tmatvec(R.matrix, w), bin);
      const auto [ictl, iobs] = detail::inner_stop(cfg.inner);
      auto [z, itr] = fixed_point_run(Ain, Min, bin, Vec(dim, 0.0), ictl, iobs);
      if (itr.status == RunStatus::Diverged) {
        rep.status = RunStatus::Diverged;
        break;
      }
      alpha = subtract(resid, matvec(G, z));
      w = primal_from_dual(prob, alpha);
      d = recorder.observe(t, w, &alpha, count);
      if (d != IterDecision::Continue) {
        rep.status = detail::status_from(d);
        break;
      }
    }
  }
  rep.final = {std::move(w), std::move(alpha)};
  return rep;
}

/// Accelerated IPDS: conjugate gradient at both levels. The outer loop is the
/// acc_idrp dual iteration; its preconditioner solve runs an inner conjugate
/// gradient on the projected d-dimensional system, preconditioned by the
/// m x d doubly sketched operator. Every factored system is d x d.
inline SolveReport acc_ipds(const RidgeProblem& prob, const SketchOperator& Pi,
                            const SketchOperator& R, const SolverConfig& cfg) {
  validate_problem(prob);
  if (Pi.input_dim != prob.n())
    throw DimensionError("acc_ipds: Pi.input_dim must equal n");
  if (R.input_dim != prob.p())
    throw DimensionError("acc_ipds: R.input_dim must equal p");
  const double n = static_cast<double>(prob.n());
  const std::size_t dim = R.sketch_dim;

  SolveReport rep;
  rep.method = "acc-ipds";
  const DenseMatrix G = apply_sketch(prob.X, R, SketchSide::Right);
  const DenseMatrix SG = apply_sketch(G, Pi, SketchSide::LeftTranspose);
  rep.sketched_rows = SG.rows;
  rep.sketched_cols = SG.cols;
  const SpdFactorization F = detail::regularized_gram_factor(SG, n, prob.lambda);
  rep.factored_dim = F.dim;

  std::size_t count = 0;
  const PreconditionerSolve Min{dim, [&F, &count](const Vec& r) {
                                  ++count;
                                  return spd_solve(F, r);
                                }};
  const LinearOperator Ain{dim, [&G, &prob, n](const Vec& z) {
                             Vec g = scaled(tmatvec(G, matvec(G, z)), 1.0 / n);
                             axpy(prob.lambda, z, g);
                             return g;
                           }};

  bool inner_failed = false;
  // lambda * (sketched dual Hessian)^{-1} r, with the d x d system solved by
  // the inner conjugate gradient instead of an exact factorization
  const PreconditionerSolve M{prob.n(), [&](const Vec& r) {
                                const Vec bin = scaled(tmatvec(G, r), 1.0 / n);
                                const auto [ictl, iobs] = detail::inner_stop(cfg.inner);
                                auto [z, itr] =
                                    pcg_run(Ain, Min, bin, Vec(dim, 0.0), ictl, iobs);
                                if (itr.status == RunStatus::Diverged ||
                                    itr.status == RunStatus::Breakdown)
                                  inner_failed = true;
                                return subtract(r, matvec(G, z));
                              }};

  const LinearOperator A = detail::dual_hessian_op(prob);
  const Vec b = scaled(prob.y, prob.lambda);

  detail::OuterRecorder recorder(prob, cfg, rep);
  IterControl ctl = cfg.outer;
  ctl.tol = 0.0;
  auto [alpha, tr] = pcg_run(A, M, b, Vec(prob.n(), 0.0), ctl,
                             [&](std::size_t iter, const Vec& a) {
                               if (inner_failed) return IterDecision::Diverged;
                               const Vec w = primal_from_dual(prob, a);
                               return recorder.observe(iter, w, &a, count);
                             });
  rep.status = inner_failed && tr.status == RunStatus::MaxIters
                   ? RunStatus::Diverged
                   : tr.status;
  rep.final.alpha = std::move(alpha);
  rep.final.w = primal_from_dual(prob, rep.final.alpha);
  return rep;
}

// ---------------------------------------------------------------------------
// One-shot closed forms packaged as reports (trace with a single record)
// ---------------------------------------------------------------------------

inline SolveReport closed_form_report(const RidgeProblem& prob,
                                      ClosedFormMethod method,
                                      const SketchOperator* op,
                                      const SolverConfig& cfg) {
  validate_problem(prob);
  SolveReport rep;
  switch (method) {
    case ClosedFormMethod::Original: rep.method = "exact"; break;
    case ClosedFormMethod::ClassicalSketch: rep.method = "cs"; break;
    case ClosedFormMethod::RandomProjection: rep.method = "rp"; break;
    case ClosedFormMethod::HessianSketch: rep.method = "hs"; break;
    case ClosedFormMethod::DualRandomProjection: rep.method = "drp"; break;
  }
  detail::OuterRecorder recorder(prob, cfg, rep);
  PrimalDualPair pair;
  if (method == ClosedFormMethod::Original) {
    pair = ridge_exact(prob, RidgeForm::Auto, cfg.allow_large_dual);
    rep.factored_dim = std::min(prob.n(), prob.p());
  } else {
    if (op == nullptr)
      throw std::invalid_argument("closed_form_report: sketched method needs an operator");
    pair = sketched_closed_form(prob, method, *op);
    const bool sample_side = method == ClosedFormMethod::ClassicalSketch ||
                             method == ClosedFormMethod::HessianSketch;
    rep.factored_dim = sample_side ? prob.p() : op->sketch_dim;
    rep.sketched_rows = sample_side ? op->sketch_dim : prob.n();
    rep.sketched_cols = sample_side ? prob.p() : op->sketch_dim;
  }
  recorder.observe(0, pair.w, &pair.alpha, 1);
  rep.status = RunStatus::Converged;
  rep.final = std::move(pair);
  return rep;
}

}  // namespace sketchls
