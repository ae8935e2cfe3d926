#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "cadmm/linalg.hpp"

using namespace cadmm;

namespace {

Mat random_sym(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  }
  return 0.5 * (m + m.transpose());
}

SparseSymList small_list() {
  SparseSymList a(3);
  a.add({{0, 0, 1.0}});
  a.add({{0, 1, 0.5}, {2, 2, -1.0}});
  a.add({{2, 1, 2.0}});  // mirrored to (1, 2)
  return a;
}

}  // namespace

TEST_CASE("sparse list apply and adjoint agree with dense rows") {
  const SparseSymList a = small_list();
  const Mat rows = oracle::dense_rows(a);
  const Mat x = random_sym(3, 1);
  const Vec ax = a.apply(x);
  CHECK((ax - rows * oracle::vec(x)).norm() < 1e-14);
  CHECK(a.inner(1, x) == doctest::Approx(x(0, 1) - x(2, 2)));

  const Vec y = Vec::LinSpaced(3, -1.0, 2.0);
  CHECK((a.adjoint(y) - oracle::unvec(rows.transpose() * y, 3)).norm() < 1e-14);
  CHECK((a.gram() - rows * rows.transpose()).norm() < 1e-14);
  CHECK(a.frob_norm_sq(1) == doctest::Approx(1.5));
  CHECK(a.dense(2)(1, 2) == 2.0);
  CHECK(a.dense(2)(2, 1) == 2.0);
}

TEST_CASE("sparse list rejects bad entries") {
  SparseSymList a(3);
  CHECK_THROWS_AS(a.add({{0, 3, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(a.add({{0, 1, 1.0}, {1, 0, 2.0}}), std::invalid_argument);
  a.add({});
  CHECK(a.size() == 1);
  CHECK(a.subset({0}).size() == 1);
}

TEST_CASE("psd projection matches the polar-factor oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Mat m = random_sym(7, seed);
    const SymMat p = project_psd(m);
    CHECK((p - oracle::project_psd(m)).norm() < 1e-10);
    CHECK(oracle::min_eig(p) > -1e-12);
  }
  const Mat bad = Mat::Constant(2, 2, std::nan(""));
  CHECK_THROWS_AS(project_psd(bad), NumericalError);
}

TEST_CASE("psd projection keeps psd input and zeroes nsd input") {
  const Mat b = random_sym(5, 3);
  const Mat psd = b * b;
  CHECK((project_psd(psd) - psd).norm() < 1e-10 * psd.norm());
  CHECK(project_psd(-psd).norm() < 1e-10 * psd.norm());
}

TEST_CASE("power iteration finds the gram spectrum") {
  const SparseSymList a = small_list();
  const double exact = Eigen::SelfAdjointEigenSolver<Mat>(a.gram()).eigenvalues().maxCoeff();
  const LambdaEstimate est = lambda_max_gram(a);
  CHECK(est.converged);
  CHECK(est.value >= exact);
  CHECK(est.value == doctest::Approx(exact).epsilon(1e-5));
  CHECK_THROWS_AS(lambda_max_gram(SparseSymList(3)), std::invalid_argument);
}

TEST_CASE("gram solver solves and flags dependent rows") {
  const SparseSymList a = small_list();
  const GramSolver g(a);
  const Vec rhs = Vec::LinSpaced(3, 1.0, 3.0);
  CHECK((a.gram() * g.solve(rhs) - rhs).norm() < 1e-12);
  CHECK((gram_solve(a, rhs) - g.solve(rhs)).norm() < 1e-12);

  SparseSymList dep = a;
  dep.add({{0, 0, 2.0}});
  CHECK_THROWS_AS(GramSolver{dep}, NumericalError);
  CHECK(independent_rows(dep) == std::vector<int>{0, 1, 2});
}

TEST_CASE("symmetrize_upper copies the upper triangle") {
  Mat m(2, 2);
  m << 1, 2, 5, 4;
  const SymMat s = symmetrize_upper(m);
  CHECK(s(1, 0) == 2.0);
  CHECK(frob_inner(s, Mat::Identity(2, 2)) == 5.0);
}
