#include <algorithm>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "cadmm/io.hpp"
#include "cadmm/problems.hpp"

using namespace cadmm;

namespace {

// Largest violation of A_E X = b_E, A_I X >= b_I and X - M in K.
double infeasibility(const DnnSdpProblem& p, const Mat& x) {
  double v = (p.a_eq().apply(x) - p.b_eq()).cwiseAbs().maxCoeff();
  if (p.has_ineq()) {
    v = std::max(v, (p.ineq()->b - p.ineq()->a.apply(x)).cwiseMax(0.0).maxCoeff());
  }
  const Mat shifted = x - p.shift();
  v = std::max(v, (shifted - oracle::project_cone(shifted, p.pattern())).cwiseAbs().maxCoeff());
  return std::max(v, -std::min(0.0, oracle::min_eig(x)));
}

Mat lifted(const Vec& x) {
  Vec v(x.size() + 1);
  v << x, 1.0;
  return v * v.transpose();
}

Vec binary(int n, int mask) {
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = (mask >> i) & 1;
  return x;
}

}  // namespace

TEST_CASE("binary points are feasible for the BIQ relaxations with matching objective") {
  const BiqData d = random_biq(6, 3);
  const DnnSdpProblem biq = build_biq(d);
  const DnnSdpProblem ext = build_ext_biq(d);
  CHECK(biq.n() == 7);
  CHECK(biq.m_eq() == 7);
  for (int mask = 0; mask < 64; mask += 5) {
    const Vec x = binary(6, mask);
    const Mat xx = lifted(x);
    CHECK(infeasibility(biq, xx) < 1e-12);
    CHECK(infeasibility(ext, xx) < 1e-12);
    const double value = 0.5 * x.dot(d.q * x) + d.c.dot(x);
    CHECK(biq.objective(xx) == doctest::Approx(value));
    CHECK(ext.objective(xx) == doctest::Approx(value));
  }
}

TEST_CASE("extended BIQ cut counts and sampling") {
  const ExtBiqCuts small = ext_biq_cuts(6);
  CHECK(small.pair_rows == 3 * (4 * 5 / 2));
  CHECK(small.triangle_rows == 20);
  CHECK(small.block.a.size() == small.pair_rows + small.triangle_rows);

  ExtBiqOptions opts;
  opts.full_triangle_limit = 5;
  opts.max_triangles = 7;
  const ExtBiqCuts sampled = ext_biq_cuts(8, opts);
  CHECK(sampled.triangle_rows == 7);
  const ExtBiqCuts again = ext_biq_cuts(8, opts);
  for (int k = 0; k < sampled.block.a.size(); ++k) {
    CHECK(sampled.block.a.dense(k) == again.block.a.dense(k));
  }
  CHECK_THROWS_AS(ext_biq_cuts(2), std::invalid_argument);
}

TEST_CASE("brute force BIQ agrees with enumeration") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const BiqData d = random_biq(8, seed);
    CHECK(brute_force_biq(d) == doctest::Approx(oracle::brute_force_biq(d.q, d.c)));
  }
  CHECK_THROWS(brute_force_biq(random_biq(21, 1)));
}

TEST_CASE("stable sets are feasible for theta plus") {
  Graph g{5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}}, {}};
  const DnnSdpProblem p = build_theta_plus(g);
  Vec s = Vec::Zero(5);
  s[0] = s[2] = 1.0;
  const Mat x = s * s.transpose() / 2.0;
  CHECK(infeasibility(p, x) < 1e-12);
  CHECK(p.objective(x) == doctest::Approx(2.0));
  Graph bad{3, {{0, 0}}, {}};
  CHECK_THROWS_AS(build_theta_plus(bad), std::invalid_argument);
}

TEST_CASE("cluster partitions are feasible for RCP") {
  const SymMat w = random_clustered_affinity(6, 2, 1);
  CHECK(w.diagonal().norm() == 0.0);
  const DnnSdpProblem p = build_rcp(w, 2);
  Mat x = Mat::Zero(6, 6);
  x.topLeftCorner(3, 3).setConstant(1.0 / 3.0);
  x.bottomRightCorner(3, 3).setConstant(1.0 / 3.0);
  CHECK(infeasibility(p, x) < 1e-12);
  CHECK(p.objective(x) == doctest::Approx(w.trace() - (w.topLeftCorner(3, 3).sum() +
                                                       w.bottomRightCorner(3, 3).sum()) / 3.0));
  CHECK_THROWS_AS(build_rcp(w, 7), std::invalid_argument);
  const SymMat l = laplacian(w);
  CHECK((l * Vec::Ones(6)).norm() < 1e-12);
}

TEST_CASE("colorings are feasible for FAP") {
  Graph g{4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, {2.0, 1.0, 3.0, 1.0}};
  const std::vector<int> color = {0, 1, 0, 2};
  const int kappa = 3;
  const DnnSdpProblem p = build_fap(g, {0, 1}, kappa);
  Mat x(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = color[i] == color[j] ? 1.0 : -1.0 / (kappa - 1);
  }
  CHECK(infeasibility(p, x) < 1e-12);
  CHECK(p.pattern().kind(0, 1) == EntryKind::Zero);
  CHECK(p.pattern().kind(2, 3) == EntryKind::NonNeg);
  CHECK(p.pattern().kind(0, 2) == EntryKind::Free);

  const FapInstance inst = random_fap(10, 0.5, 3, 2);
  CHECK(inst.kappa == 3);
  for (int e : inst.u) CHECK(e < static_cast<int>(inst.graph.edges.size()));
}

TEST_CASE("permutations are feasible for QAP with matching objective") {
  const auto [a, b] = random_qap(4, 5);
  const DnnSdpProblem p = build_qap(a, b);
  CHECK(p.n() == 16);
  const QapRows rows = qap_constraints(4);
  for (int c : rows.family_counts) CHECK(c == 10);
  CHECK(p.m_eq() < rows.a.size());

  std::vector<int> perm(4);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    Mat pm = Mat::Zero(4, 4);
    for (int i = 0; i < 4; ++i) pm(perm[i], i) = 1.0;
    const Vec v = oracle::vec(pm);
    const Mat x = v * v.transpose();
    CHECK(infeasibility(p, x) < 1e-12);
    CHECK((rows.a.apply(x) - rows.b).norm() < 1e-12);
    const double value = (pm.array() * (a * pm * b).array()).sum();
    CHECK(p.objective(x) == doctest::Approx(value));
    best = std::min(best, value);
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(brute_force_qap(a, b) == doctest::Approx(best));
  CHECK_THROWS_AS(build_qap(Mat::Zero(9, 9), Mat::Zero(9, 9)), std::invalid_argument);
}

TEST_CASE("generators are deterministic and named") {
  for (const char* family : {"biq", "extbiq", "theta", "rcp", "fap", "qap"}) {
    const int size = std::string(family) == "qap" ? 3 : 8;
    const DnnSdpProblem a = generate(family, size, 4);
    CHECK(same_problem(a, generate(family, size, 4)));
    CHECK(a.info().family == family);
    CHECK(a.info().name == std::string(family) + "-" + std::to_string(size) + "-4");
  }
  CHECK_FALSE(same_problem(generate("biq", 8, 1), generate("biq", 8, 2)));
  CHECK_THROWS_AS(generate("maxcut", 8, 1), std::invalid_argument);
}

TEST_CASE("FAMILY:SIZE:SEED parsing") {
  const GenerateSpec g = parse_generate_spec("theta:12:7");
  CHECK(g.family == "theta");
  CHECK(g.size == 12);
  CHECK(g.seed == 7);
  CHECK_THROWS(parse_generate_spec("theta:12"));
  CHECK_THROWS(parse_generate_spec("theta:x:1"));
}

TEST_CASE("Biq Mac reader doubles the quadratic form") {
  std::istringstream in("3 3\n1 1 -2\n1 2 3\n2 3 1.5\n");
  const BiqData d = read_biqmac(in);
  CHECK(d.n() == 3);
  const Vec x = Vec::Ones(3);
  CHECK(0.5 * x.dot(d.q * x) == doctest::Approx(-2.0 + 2.0 * 3.0 + 2.0 * 1.5));
  std::istringstream short_in("3 2\n1 1 -2\n");
  CHECK_THROWS_AS(read_biqmac(short_in), std::runtime_error);
  std::istringstream range("2 1\n1 3 1\n");
  CHECK_THROWS_AS(read_biqmac(range), std::runtime_error);
}

TEST_CASE("QAPLIB reader") {
  std::istringstream in("2\n0 1\n1 0\n\n0 5\n5 0\n");
  const auto [a, b] = read_qaplib(in);
  CHECK(a(0, 1) == 1.0);
  CHECK(b(1, 0) == 5.0);
  std::istringstream asym("2\n0 1\n2 0\n0 5\n5 0\n");
  CHECK_THROWS_AS(read_qaplib(asym), std::runtime_error);
}

TEST_CASE("DIMACS reader") {
  std::istringstream in("c pentagon\np edge 5 6\ne 1 2\ne 2 3\ne 3 4\ne 4 5\ne 5 1\ne 2 1\n");
  const Graph g = read_dimacs(in);
  CHECK(g.n == 5);
  CHECK(g.edges.size() == 5);
  CHECK_NOTHROW(g.validate());
  std::istringstream bad("p edge 3 2\ne 1 2\n");
  CHECK_THROWS_AS(read_dimacs(bad), std::runtime_error);
  std::istringstream loop("p edge 3 1\ne 2 2\n");
  CHECK_THROWS_AS(read_dimacs(loop), std::runtime_error);
}
