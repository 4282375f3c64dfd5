#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <utility>

#include "sketchls/linalg.hpp"

namespace sketchls {

/// Symmetric linear map given by its action.
struct LinearOperator {
  std::size_t dim = 0;
  std::function<Vec(const Vec&)> apply;
};

/// Application of an (approximate) inverse, i.e. a preconditioner solve.
struct PreconditionerSolve {
  std::size_t dim = 0;
  std::function<Vec(const Vec&)> solve;
};

enum class StopMetric {
  ResidualL2,  // ||Ax - b||_2 relative to ||b||_2 (absolute when b = 0)
  StepLinf     // ||x_t - x_{t-1}||_inf, absolute
};

struct IterControl {
  std::size_t max_iters = 100;
  double tol = 1e-10;
  StopMetric tol_metric = StopMetric::ResidualL2;
  double divergence_factor = 1e6;
};

enum class RunStatus { Converged, MaxIters, Diverged, Breakdown };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::MaxIters: return "MaxIters";
    case RunStatus::Diverged: return "Diverged";
    case RunStatus::Breakdown: return "Breakdown";
  }
  return "Unknown";
}

struct IterRecord {
  std::size_t iter = 0;
  double residual_l2 = 0.0;  // ||A x - b||_2 at this iterate
  double step_linf = 0.0;    // ||x_t - x_{t-1}||_inf, 0 at iter 0
  std::int64_t wall_ns = 0;  // elapsed since the run started
};

struct IterTrace {
  std::vector<IterRecord> records;
  RunStatus status = RunStatus::MaxIters;
};

/// Verdict a caller-supplied observer may return after each recorded iterate;
/// lets the caller drive stopping on its own metric (e.g. error to a known
/// reference solution).
enum class IterDecision { Continue, Converged, Diverged };

using IterObserver = std::function<IterDecision(std::size_t iter, const Vec& x)>;

namespace detail {

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  std::int64_t ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline bool metric_met(const IterControl& ctl, double residual, double step_linf,
                       double bnorm, std::size_t iter) {
  if (ctl.tol_metric == StopMetric::ResidualL2)
    return residual <= ctl.tol * (bnorm > 0.0 ? bnorm : 1.0);
  return iter > 0 && step_linf <= ctl.tol;
}

}  // namespace detail

/// Preconditioned fixed-point iteration x <- x - M(Ax - b).
///
/// With M an approximate inverse of A this is the Newton-like update whose
/// contraction is governed by the spectrum of I - M A. Divergence is reported
/// as a status (residual exceeding divergence_factor times its initial value,
/// or a non-finite iterate), never as an exception.
inline std::pair<Vec, IterTrace> fixed_point_run(const LinearOperator& A,
                                                 const PreconditionerSolve& M,
                                                 const Vec& b, const Vec& x0,
                                                 const IterControl& ctl,
                                                 const IterObserver& observer = {}) {
  if (A.dim != M.dim || b.size() != A.dim || x0.size() != A.dim)
    throw DimensionError("fixed_point_run: dimension mismatch");

  detail::WallClock clock;
  IterTrace trace;
  Vec x = x0;
  Vec r = subtract(A.apply(x), b);
  const double bnorm = norm2(b);
  const double res0 = norm2(r);
  double res = res0;

  auto record = [&](std::size_t iter, double step) {
    trace.records.push_back({iter, res, step, clock.ns()});
  };

  record(0, 0.0);
  if (detail::metric_met(ctl, res, 0.0, bnorm, 0)) {
    trace.status = RunStatus::Converged;
    return {std::move(x), std::move(trace)};
  }
  if (observer) {
    const IterDecision d = observer(0, x);
    if (d != IterDecision::Continue) {
      trace.status = d == IterDecision::Converged ? RunStatus::Converged : RunStatus::Diverged;
      return {std::move(x), std::move(trace)};
    }
  }

  for (std::size_t t = 1; t <= ctl.max_iters; ++t) {
    const Vec u = M.solve(r);
    axpy(-1.0, u, x);
    r = subtract(A.apply(x), b);
    res = norm2(r);
    const double step = norm_inf(u);
    record(t, step);

    if (!std::isfinite(res) || !all_finite(x)) {
      trace.status = RunStatus::Diverged;
      return {std::move(x), std::move(trace)};
    }
    if (detail::metric_met(ctl, res, step, bnorm, t)) {
      trace.status = RunStatus::Converged;
      return {std::move(x), std::move(trace)};
    }
    if (res > ctl.divergence_factor * std::max(res0, 1e-300)) {
      trace.status = RunStatus::Diverged;
      return {std::move(x), std::move(trace)};
    }
    if (observer) {
      const IterDecision d = observer(t, x);
      if (d != IterDecision::Continue) {
        trace.status = d == IterDecision::Converged ? RunStatus::Converged : RunStatus::Diverged;
        return {std::move(x), std::move(trace)};
      }
    }
  }
  trace.status = RunStatus::MaxIters;
  return {std::move(x), std::move(trace)};
}

/// Preconditioned conjugate gradient on A x = b.
///
/// Residual convention: r = Ax - b (the gradient of the quadratic), so the
/// search direction p = -M r is a descent direction and the step length is
/// positive. beta uses the standard <r+, u+>/<r, u> quotient, the one that
/// preserves conjugacy and finite termination. Breakdown (curvature
/// <p, Ap> <= 1e-300) signals an indefinite operator or numerical collapse.
inline std::pair<Vec, IterTrace> pcg_run(const LinearOperator& A,
                                         const PreconditionerSolve& M, const Vec& b,
                                         const Vec& x0, const IterControl& ctl,
                                         const IterObserver& observer = {}) {
  if (A.dim != M.dim || b.size() != A.dim || x0.size() != A.dim)
    throw DimensionError("pcg_run: dimension mismatch");

  detail::WallClock clock;
  IterTrace trace;
  Vec x = x0;
  Vec r = subtract(A.apply(x), b);
  const double bnorm = norm2(b);
  const double res0 = norm2(r);
  double res = res0;

  auto record = [&](std::size_t iter, double step) {
    trace.records.push_back({iter, res, step, clock.ns()});
  };
  auto finish = [&](RunStatus s) {
    trace.status = s;
    return std::make_pair(std::move(x), std::move(trace));
  };

  record(0, 0.0);
  if (detail::metric_met(ctl, res, 0.0, bnorm, 0) || res0 == 0.0)
    return finish(RunStatus::Converged);
  if (observer) {
    const IterDecision d = observer(0, x);
    if (d != IterDecision::Continue)
      return finish(d == IterDecision::Converged ? RunStatus::Converged
                                                 : RunStatus::Diverged);
  }

  Vec u = M.solve(r);
  Vec p = scaled(u, -1.0);
  double rho = dot(r, u);

  for (std::size_t t = 1; t <= ctl.max_iters; ++t) {
    const Vec Ap = A.apply(p);
    const double curvature = dot(p, Ap);
    if (!std::isfinite(curvature) || curvature <= 1e-300)
      return finish(RunStatus::Breakdown);

    const double alpha = rho / curvature;
    axpy(alpha, p, x);
    axpy(alpha, Ap, r);
    res = norm2(r);
    const double step = std::abs(alpha) * norm_inf(p);
    record(t, step);

    if (!std::isfinite(res) || !all_finite(x)) return finish(RunStatus::Diverged);
    if (detail::metric_met(ctl, res, step, bnorm, t)) return finish(RunStatus::Converged);
    if (res > ctl.divergence_factor * std::max(res0, 1e-300))
      return finish(RunStatus::Diverged);
    if (observer) {
      const IterDecision d = observer(t, x);
      if (d != IterDecision::Continue)
        return finish(d == IterDecision::Converged ? RunStatus::Converged
                                                   : RunStatus::Diverged);
    }

    u = M.solve(r);
    const double rho_next = dot(r, u);
    const double beta = rho_next / rho;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = -u[i] + beta * p[i];
    rho = rho_next;
  }
  return finish(RunStatus::MaxIters);
}

}  // namespace sketchls
