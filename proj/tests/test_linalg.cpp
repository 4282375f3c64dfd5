#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include "helpers.hpp"
#include "sketchls/linalg.hpp"

using namespace sketchls;
using test_helpers::frob;
using test_helpers::random_matrix;
using test_helpers::random_spd;
using test_helpers::random_vector;
using test_helpers::rel_err;

TEST_CASE("xnorm basics") {
  DenseMatrix X(2, 1);
  X(0, 0) = 1.0;
  X(1, 0) = 1.0;
  CHECK(xnorm(X, Vec{1.0}) == Catch::Approx(1.0).margin(1e-15));

  Rng rng(11);
  const DenseMatrix A = random_matrix(5, 3, rng);
  CHECK(xnorm(A, Vec(3, 0.0)) == 0.0);
  CHECK_THROWS_AS(xnorm(A, Vec(4, 1.0)), DimensionError);
}

TEST_CASE("xnorm equals the scaled euclidean norm of Xw") {
  Rng rng(17);
  const DenseMatrix X = random_matrix(6, 4, rng);
  const Vec w = random_vector(4, rng);
  const Vec xw = test_helpers::naive_matvec(X, w);
  CHECK(xnorm(X, w) == Catch::Approx(norm2(xw) / std::sqrt(6.0)).epsilon(1e-13));
}

TEST_CASE("xnorm squared times n matches ||Xw||^2 on random instances") {
  Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 20);
    const std::size_t p = 1 + static_cast<std::size_t>(rng.uniform() * 15);
    const DenseMatrix X = random_matrix(n, p, rng);
    const Vec w = random_vector(p, rng);
    const double lhs = xnorm(X, w) * xnorm(X, w) * static_cast<double>(n);
    const double rhs = dot(matvec(X, w), matvec(X, w));
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12).margin(1e-14));
  }
}

TEST_CASE("spd_factor identity and scalar matrices") {
  const DenseMatrix eye = DenseMatrix::identity(3);
  const SpdFactorization fi = spd_factor(eye);
  REQUIRE(fi.dim == 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(fi.factor(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-14));

  DenseMatrix four = DenseMatrix::identity(2);
  four(0, 0) = four(1, 1) = 4.0;
  const SpdFactorization f4 = spd_factor(four);
  CHECK(f4.factor(0, 0) == Catch::Approx(2.0).margin(1e-14));
  CHECK(f4.factor(1, 1) == Catch::Approx(2.0).margin(1e-14));
}

TEST_CASE("spd_factor reconstructs a random SPD matrix") {
  Rng rng(31);
  const DenseMatrix A = random_spd(8, rng);
  const SpdFactorization f = spd_factor(A);
  const DenseMatrix rec = matmul(f.factor, transpose(f.factor));
  double dev = 0.0;
  for (std::size_t i = 0; i < A.data.size(); ++i)
    dev = std::max(dev, std::abs(rec.data[i] - A.data[i]));
  CHECK(dev <= 1e-12 * max_abs(A));
}

TEST_CASE("spd_factor rejects asymmetric and indefinite input") {
  DenseMatrix bad(2, 2);
  bad(0, 0) = 1.0;
  bad(0, 1) = 2.0;
  bad(1, 0) = 0.0;
  bad(1, 1) = 1.0;
  CHECK_THROWS_AS(spd_factor(bad), NotSymmetricError);

  DenseMatrix indef = DenseMatrix::identity(2);
  indef(1, 1) = -1.0;
  CHECK_THROWS_AS(spd_factor(indef), NotPositiveDefiniteError);
}

TEST_CASE("spd_solve on identity and scalar systems") {
  const SpdFactorization fi = spd_factor(DenseMatrix::identity(4));
  const Vec b{1.0, -2.0, 3.0, 0.5};
  CHECK(rel_err(spd_solve(fi, b), b) <= 1e-15);

  DenseMatrix two = DenseMatrix::identity(4);
  for (std::size_t i = 0; i < 4; ++i) two(i, i) = 2.0;
  const SpdFactorization f2 = spd_factor(two);
  CHECK(rel_err(spd_solve(f2, b), scaled(b, 0.5)) <= 1e-15);
  CHECK_THROWS_AS(spd_solve(f2, Vec(3, 1.0)), DimensionError);
}

TEST_CASE("spd_solve is a left inverse of multiplication on random SPD systems") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 2 + static_cast<std::size_t>(rng.uniform() * 48);
    const DenseMatrix A = random_spd(dim, rng);
    const SpdFactorization f = spd_factor(A);
    const Vec b = random_vector(dim, rng);
    const Vec x = spd_solve(f, b);
    const double resid = norm2(subtract(matvec(A, x), b));
    CHECK(resid <= 1e-10 * norm2(b));
  }
}

TEST_CASE("extreme_eigs on diagonal matrices") {
  auto [lo, hi] = extreme_eigs(DenseMatrix::identity(3));
  CHECK(lo == Catch::Approx(1.0).margin(1e-12));
  CHECK(hi == Catch::Approx(1.0).margin(1e-12));

  DenseMatrix d(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 4.0;
  auto [lo2, hi2] = extreme_eigs(d);
  CHECK(lo2 == Catch::Approx(1.0).margin(1e-12));
  CHECK(hi2 == Catch::Approx(4.0).margin(1e-12));

  DenseMatrix bad(2, 2);
  bad(0, 1) = 1.0;
  bad(1, 0) = -1.0;
  CHECK_THROWS_AS(extreme_eigs(bad), NotSymmetricError);
}

TEST_CASE("extreme_eigs matches a general eigensolver on a random symmetric matrix") {
  Rng rng(53);
  DenseMatrix A = random_matrix(10, 10, rng);
  // symmetrize
  DenseMatrix S(10, 10);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) S(i, j) = 0.5 * (A(i, j) + A(j, i));

  // oracle: the unsymmetric QR algorithm, a different algorithm entirely
  Eigen::MatrixXd es(10, 10);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) es(static_cast<long>(i), static_cast<long>(j)) = S(i, j);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(es);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (long i = 0; i < 10; ++i) {
    lo = std::min(lo, solver.eigenvalues()(i).real());
    hi = std::max(hi, solver.eigenvalues()(i).real());
  }

  auto [got_lo, got_hi] = extreme_eigs(S);
  CHECK(got_lo == Catch::Approx(lo).epsilon(1e-8));
  CHECK(got_hi == Catch::Approx(hi).epsilon(1e-8));
}

TEST_CASE("extreme_eigs shifts with the diagonal") {
  Rng rng(59);
  DenseMatrix A = random_spd(12, rng);
  const auto base = extreme_eigs(A);
  for (double c : {0.0, 1.0, 10.0}) {
    DenseMatrix shifted = A;
    add_diagonal(shifted, c);
    const auto got = extreme_eigs(shifted);
    CHECK(got.first == Catch::Approx(base.first + c).epsilon(1e-10).margin(1e-10));
    CHECK(got.second == Catch::Approx(base.second + c).epsilon(1e-10).margin(1e-10));
  }
}

TEST_CASE("thin_svd identity and rank-1 cases") {
  const SvdResult id = thin_svd(DenseMatrix::identity(3), 3);
  for (double s : id.singular_values) CHECK(s == Catch::Approx(1.0).margin(1e-12));

  Rng rng(61);
  const Vec u = random_vector(7, rng);
  const Vec v = random_vector(4, rng);
  DenseMatrix outer(7, 4);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 4; ++j) outer(i, j) = u[i] * v[j];
  const SvdResult r1 = thin_svd(outer, 2);
  CHECK(r1.singular_values[0] == Catch::Approx(norm2(u) * norm2(v)).epsilon(1e-12));
  CHECK(r1.singular_values[1] <= 1e-12 * r1.singular_values[0]);

  CHECK_THROWS_AS(thin_svd(outer, 5), DimensionError);
}

TEST_CASE("thin_svd reconstructs a full-rank matrix") {
  Rng rng(67);
  const DenseMatrix X = random_matrix(12, 8, rng);
  const SvdResult svd = thin_svd(X, 8);

  DenseMatrix us(12, 8);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 8; ++j) us(i, j) = svd.U(i, j) * svd.singular_values[j];
  const DenseMatrix rec = matmul(us, transpose(svd.V));
  double dev = 0.0;
  for (std::size_t i = 0; i < X.data.size(); ++i) {
    const double diff = rec.data[i] - X.data[i];
    dev += diff * diff;
  }
  CHECK(std::sqrt(dev) <= 1e-10 * frob(X));

  // orthonormality of both factors
  const DenseMatrix utu = gram(svd.U);
  const DenseMatrix vtv = gram(svd.V);
  double worst = 0.0;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      const double target = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(utu(i, j) - target));
      worst = std::max(worst, std::abs(vtv(i, j) - target));
    }
  CHECK(worst <= 1e-10);
}

TEST_CASE("singular values come out nonincreasing") {
  Rng rng(71);
  const DenseMatrix X = random_matrix(9, 6, rng);
  const SvdResult svd = thin_svd(X, 6);
  for (std::size_t i = 1; i < svd.singular_values.size(); ++i)
    CHECK(svd.singular_values[i] <= svd.singular_values[i - 1] + 1e-15);
}
