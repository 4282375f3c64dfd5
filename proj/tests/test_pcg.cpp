#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "sketchls/pcg.hpp"

using namespace sketchls;
using test_helpers::random_matrix;
using test_helpers::random_spd;
using test_helpers::random_vector;
using test_helpers::rel_err;

namespace {

LinearOperator dense_op(const DenseMatrix& a) {
  return {a.rows, [&a](const Vec& x) { return matvec(a, x); }};
}

PreconditionerSolve identity_solve(std::size_t dim) {
  return {dim, [](const Vec& x) { return x; }};
}

PreconditionerSolve factored_solve(const SpdFactorization& f) {
  return {f.dim, [&f](const Vec& x) { return spd_solve(f, x); }};
}

}  // namespace

TEST_CASE("fixed point with the exact inverse converges in one step") {
  Rng rng(1);
  const DenseMatrix a = random_spd(9, rng);
  const SpdFactorization f = spd_factor(a);
  const Vec b = random_vector(9, rng);
  const Vec x0 = random_vector(9, rng);

  auto [x, trace] = fixed_point_run(dense_op(a), factored_solve(f), b, x0, {});
  CHECK(trace.status == RunStatus::Converged);
  CHECK(trace.records.back().iter == 1);
  CHECK(norm2(subtract(matvec(a, x), b)) <= 1e-10 * norm2(b));
}

TEST_CASE("exact preconditioning is a one-step solver on random SPD systems") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 2 + static_cast<std::size_t>(rng.uniform() * 38);
    const DenseMatrix a = random_spd(dim, rng);
    const SpdFactorization f = spd_factor(a);
    const Vec b = random_vector(dim, rng);
    IterControl ctl;
    ctl.max_iters = 1;
    ctl.tol = 0.0;
    auto [x, trace] =
        fixed_point_run(dense_op(a), factored_solve(f), b, Vec(dim, 0.0), ctl);
    const double res0 = trace.records.front().residual_l2;
    CHECK(trace.records.back().residual_l2 <= 1e-10 * res0);
  }
}

TEST_CASE("an unpreconditioned stiff iteration diverges with status, not throw") {
  DenseMatrix a(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 10.0;
  auto [x, trace] = fixed_point_run(dense_op(a), identity_solve(2), Vec(2, 0.0),
                                    Vec{0.0, 1.0}, {});
  CHECK(trace.status == RunStatus::Diverged);
  // error multiplies by |1 - 10| = 9 every step
  const auto& rec = trace.records;
  REQUIRE(rec.size() >= 3);
  CHECK(rec[2].residual_l2 == Catch::Approx(rec[1].residual_l2 * 9.0).epsilon(1e-12));
}

TEST_CASE("fixed point with an inexact preconditioner still reaches the solution") {
  Rng rng(3);
  const DenseMatrix a = random_spd(10, rng);
  DenseMatrix perturbed = a;
  const DenseMatrix noise = random_spd(10, rng);
  for (std::size_t i = 0; i < perturbed.data.size(); ++i)
    perturbed.data[i] += 0.1 * noise.data[i];
  const SpdFactorization f = spd_factor(perturbed);
  const Vec b = random_vector(10, rng);

  IterControl ctl;
  ctl.max_iters = 200;
  ctl.tol = 1e-12;
  auto [x, trace] = fixed_point_run(dense_op(a), factored_solve(f), b, Vec(10, 0.0), ctl);
  CHECK(trace.status == RunStatus::Converged);

  const Vec exact = spd_solve(spd_factor(a), b);
  CHECK(rel_err(x, exact) <= 1e-8);
}

TEST_CASE("step-metric stopping works") {
  Rng rng(4);
  const DenseMatrix a = random_spd(6, rng);
  const SpdFactorization f = spd_factor(a);
  IterControl ctl;
  ctl.tol_metric = StopMetric::StepLinf;
  ctl.tol = 1e-10;
  auto [x, trace] =
      fixed_point_run(dense_op(a), factored_solve(f), random_vector(6, rng),
                      Vec(6, 0.0), ctl);
  CHECK(trace.status == RunStatus::Converged);
  CHECK(trace.records.back().step_linf <= 1e-10);
}

TEST_CASE("pcg solves the identity in one iteration") {
  const DenseMatrix eye = DenseMatrix::identity(5);
  Rng rng(5);
  const Vec b = random_vector(5, rng);
  auto [x, trace] = pcg_run(dense_op(eye), identity_solve(5), b, Vec(5, 0.0), {});
  CHECK(trace.status == RunStatus::Converged);
  CHECK(trace.records.back().iter == 1);
  CHECK(rel_err(x, b) <= 1e-12);
}

TEST_CASE("unpreconditioned cg reaches the minimizer within dim iterations") {
  Rng rng(6);
  const DenseMatrix a = random_spd(30, rng);
  const Vec b = random_vector(30, rng);
  IterControl ctl;
  ctl.max_iters = 30;
  ctl.tol = 1e-8;
  auto [x, trace] = pcg_run(dense_op(a), identity_solve(30), b, Vec(30, 0.0), ctl);
  CHECK(trace.status == RunStatus::Converged);
  CHECK(trace.records.back().residual_l2 <= 1e-8 * norm2(b));
}

TEST_CASE("pcg with an inexact preconditioner matches the dense solve") {
  Rng rng(7);
  const DenseMatrix a = random_spd(10, rng);
  const DenseMatrix approx = random_spd(10, rng);
  const SpdFactorization f = spd_factor(approx);
  const Vec b = random_vector(10, rng);
  IterControl ctl;
  ctl.max_iters = 100;
  ctl.tol = 1e-14;
  auto [x, trace] = pcg_run(dense_op(a), factored_solve(f), b, Vec(10, 0.0), ctl);
  const Vec exact = spd_solve(spd_factor(a), b);
  CHECK(rel_err(x, exact) <= 1e-10);
}

TEST_CASE("pcg finite termination over random SPD instances") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 2 + static_cast<std::size_t>(rng.uniform() * 48);
    const DenseMatrix a = random_spd(dim, rng);
    const DenseMatrix pre = random_spd(dim, rng);
    const SpdFactorization f = spd_factor(pre);
    const Vec b = random_vector(dim, rng);
    IterControl ctl;
    ctl.max_iters = dim + 2;
    ctl.tol = 1e-8;
    auto [x, trace] = pcg_run(dense_op(a), factored_solve(f), b, Vec(dim, 0.0), ctl);
    CHECK(trace.status == RunStatus::Converged);
    CHECK(trace.records.back().iter <= dim + 2);
  }
}

TEST_CASE("pcg iterates are invariant to preconditioner scaling") {
  Rng rng(9);
  const DenseMatrix a = random_spd(15, rng);
  const DenseMatrix pre = random_spd(15, rng);
  const SpdFactorization f = spd_factor(pre);
  const Vec b = random_vector(15, rng);
  IterControl ctl;
  ctl.max_iters = 12;
  ctl.tol = 0.0;

  auto collect = [&](double c) {
    std::vector<Vec> iterates;
    PreconditionerSolve m{15, [&f, c](const Vec& r) { return scaled(spd_solve(f, r), c); }};
    pcg_run(dense_op(a), m, b, Vec(15, 0.0), ctl,
            [&](std::size_t, const Vec& x) {
              iterates.push_back(x);
              return IterDecision::Continue;
            });
    return iterates;
  };

  const std::vector<Vec> base = collect(1.0);
  for (double c : {0.5, 2.0, 7.0}) {
    const std::vector<Vec> scaled_run = collect(c);
    REQUIRE(scaled_run.size() == base.size());
    for (std::size_t t = 0; t < base.size(); ++t)
      CHECK(rel_err(scaled_run[t], base[t]) <= 1e-10);
  }
}

TEST_CASE("pcg error decreases monotonically in the A-norm") {
  Rng rng(10);
  const DenseMatrix a = random_spd(20, rng);
  const DenseMatrix pre = random_spd(20, rng);
  const SpdFactorization f = spd_factor(pre);
  const Vec b = random_vector(20, rng);
  const Vec star = spd_solve(spd_factor(a), b);

  std::vector<double> anorm;
  IterControl ctl;
  ctl.max_iters = 25;
  ctl.tol = 0.0;
  pcg_run(dense_op(a), factored_solve(f), b, Vec(20, 0.0), ctl,
          [&](std::size_t, const Vec& x) {
            const Vec e = subtract(x, star);
            anorm.push_back(std::sqrt(dot(e, matvec(a, e))));
            return IterDecision::Continue;
          });
  for (std::size_t t = 1; t < anorm.size(); ++t)
    CHECK(anorm[t] <= anorm[t - 1] + 1e-12);
}

TEST_CASE("nonpositive curvature reports breakdown") {
  DenseMatrix a(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -1.0;
  auto [x, trace] =
      pcg_run(dense_op(a), identity_solve(2), Vec{1.0, 1.0}, Vec(2, 0.0), {});
  CHECK(trace.status == RunStatus::Breakdown);
}

TEST_CASE("a zero right-hand side converges immediately") {
  Rng rng(11);
  const DenseMatrix a = random_spd(4, rng);
  auto [x, trace] = pcg_run(dense_op(a), identity_solve(4), Vec(4, 0.0), Vec(4, 0.0), {});
  CHECK(trace.status == RunStatus::Converged);
  CHECK(trace.records.size() == 1);
  CHECK(norm2(x) == 0.0);
}

TEST_CASE("observers can stop a run") {
  Rng rng(12);
  const DenseMatrix a = random_spd(8, rng);
  const Vec b = random_vector(8, rng);
  IterControl ctl;
  ctl.tol = 0.0;
  ctl.max_iters = 50;
  auto [x, trace] = pcg_run(dense_op(a), identity_solve(8), b, Vec(8, 0.0), ctl,
                            [](std::size_t iter, const Vec&) {
                              return iter == 2 ? IterDecision::Converged
                                               : IterDecision::Continue;
                            });
  CHECK(trace.status == RunStatus::Converged);
  CHECK(trace.records.back().iter == 2);
}

TEST_CASE("trace iteration indices increase from zero") {
  Rng rng(13);
  const DenseMatrix a = random_spd(7, rng);
  const Vec b = random_vector(7, rng);
  auto [x, trace] = pcg_run(dense_op(a), identity_solve(7), b, Vec(7, 0.0), {});
  for (std::size_t i = 0; i < trace.records.size(); ++i)
    CHECK(trace.records[i].iter == i);
}
