#include "cadmm/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cadmm {

void Graph::validate() const {
  if (n < 1) throw std::invalid_argument("Graph: need at least one vertex");
  if (!weights.empty() && weights.size() != edges.size()) {
    throw std::invalid_argument("Graph: weight count does not match edge count");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, j] : edges) {
    if (i == j) throw std::invalid_argument("Graph: self-loop at vertex " + std::to_string(i));
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw std::invalid_argument("Graph: edge index out of range");
    }
    if (i > j) throw std::invalid_argument("Graph: edges must be stored with i < j");
    if (!seen.insert({i, j}).second) {
      throw std::invalid_argument("Graph: duplicate edge (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ")");
    }
  }
}

SymMat Graph::weight_matrix() const {
  SymMat w = SymMat::Zero(n, n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    w(edges[e].first, edges[e].second) = weight(e);
    w(edges[e].second, edges[e].first) = weight(e);
  }
  return w;
}

namespace {

void check_square_symmetric(const SymMat& m, const char* what) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + " must be square");
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + " has non-finite entries");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument(std::string(what) + " must be symmetric");
  }
}

SymMat biq_objective(const BiqData& d) {
  const int n = d.n();
  check_square_symmetric(d.q, "BiqData.q");
  if (d.q.rows() != n) throw std::invalid_argument("BiqData: Q and c sizes differ");
  SymMat c = SymMat::Zero(n + 1, n + 1);
  c.topLeftCorner(n, n) = 0.5 * d.q;
  c.topRightCorner(n, 1) = 0.5 * d.c;
  c.bottomLeftCorner(1, n) = 0.5 * d.c.transpose();
  return c;
}

std::pair<SparseSymList, Vec> biq_equalities(int n) {
  SparseSymList a(n + 1);
  Vec b = Vec::Zero(n + 1);
  for (int i = 0; i < n; ++i) a.add({{i, i, 1.0}, {i, n, -0.5}});
  a.add({{n, n, 1.0}});
  b[n] = 1.0;
  return {std::move(a), std::move(b)};
}

std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace

DnnSdpProblem build_biq(const BiqData& d, std::string name) {
  const int n = d.n();
  if (n < 1) throw std::invalid_argument("build_biq: empty instance");
  auto [a, b] = biq_equalities(n);
  return DnnSdpProblem(biq_objective(d), std::move(a), std::move(b), std::nullopt,
                       SymMat::Zero(n + 1, n + 1), ConePattern::nonneg(n + 1),
                       {std::move(name), "biq", 1.0, 0.0});
}

ExtBiqCuts ext_biq_cuts(int n, const ExtBiqOptions& opts) {
  if (n < 3) throw std::invalid_argument("ext_biq_cuts: need n >= 3");
  ExtBiqCuts out;
  SparseSymList a(n + 1);
  std::vector<double> b;
  const int x = n;  // index of the x column
  for (int j = 1; j <= n - 2; ++j) {
    for (int i = 0; i < j; ++i) {
      a.add({{i, j, -0.5}, {i, x, 0.5}});
      b.push_back(0.0);
      a.add({{i, j, -0.5}, {j, x, 0.5}});
      b.push_back(0.0);
      a.add({{i, j, 0.5}, {i, x, -0.5}, {j, x, -0.5}});
      b.push_back(-1.0);
      out.pair_rows += 3;
    }
  }
  std::vector<std::array<int, 3>> triples;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) triples.push_back({i, j, k});
    }
  }
  if (n > opts.full_triangle_limit &&
      triples.size() > static_cast<std::size_t>(std::max(opts.max_triangles, 0))) {
    std::vector<std::array<int, 3>> kept;
    auto rng = make_rng(opts.seed);
    std::sample(triples.begin(), triples.end(), std::back_inserter(kept), opts.max_triangles, rng);
    triples = std::move(kept);
  }
  for (const auto& [i, j, k] : triples) {
    a.add({{i, j, 0.5}, {i, k, 0.5}, {j, k, 0.5}, {i, x, -0.5}, {j, x, -0.5}, {k, x, -0.5}});
    b.push_back(-1.0);
    ++out.triangle_rows;
  }
  out.block.a = std::move(a);
  out.block.b = Eigen::Map<const Vec>(b.data(), static_cast<Eigen::Index>(b.size()));
  return out;
}

DnnSdpProblem build_ext_biq(const BiqData& d, const ExtBiqOptions& opts, std::string name) {
  const int n = d.n();
  auto [a, b] = biq_equalities(n);
  return DnnSdpProblem(biq_objective(d), std::move(a), std::move(b), ext_biq_cuts(n, opts).block,
                       SymMat::Zero(n + 1, n + 1), ConePattern::nonneg(n + 1),
                       {std::move(name), "extbiq", 1.0, 0.0});
}

DnnSdpProblem build_theta_plus(const Graph& g, std::string name) {
  g.validate();
  const int n = g.n;
  SparseSymList a(n);
  for (const auto& [i, j] : g.edges) a.add({{i, j, 1.0}});
  std::vector<SymEntry> trace;
  for (int i = 0; i < n; ++i) trace.push_back({i, i, 1.0});
  a.add(std::move(trace));
  Vec b = Vec::Zero(a.size());
  b[a.size() - 1] = 1.0;
  return DnnSdpProblem(-SymMat::Ones(n, n), std::move(a), std::move(b), std::nullopt,
                       SymMat::Zero(n, n), ConePattern::nonneg(n),
                       {std::move(name), "theta", -1.0, 0.0});
}

DnnSdpProblem build_rcp(const SymMat& w, int kappa, std::string name) {
  check_square_symmetric(w, "build_rcp: W");
  const int n = static_cast<int>(w.rows());
  if (kappa < 1 || kappa > n) {
    throw std::invalid_argument("build_rcp: kappa must lie in [1, n], got " +
                                std::to_string(kappa));
  }
  SparseSymList a(n);
  for (int r = 0; r < n; ++r) {
    std::vector<SymEntry> row;
    for (int j = 0; j < n; ++j) {
      if (j == r) {
        row.push_back({r, r, 1.0});
      } else {
        row.push_back({std::min(r, j), std::max(r, j), 0.5});
      }
    }
    a.add(std::move(row));
  }
  std::vector<SymEntry> trace;
  for (int i = 0; i < n; ++i) trace.push_back({i, i, 1.0});
  a.add(std::move(trace));
  Vec b = Vec::Ones(n + 1);
  b[n] = kappa;
  return DnnSdpProblem(-w, std::move(a), std::move(b), std::nullopt, SymMat::Zero(n, n),
                       ConePattern::nonneg(n), {std::move(name), "rcp", 1.0, w.trace()});
}

SymMat laplacian(const SymMat& w) {
  SymMat l = -w;
  l.diagonal() += w.rowwise().sum();
  return l;
}

DnnSdpProblem build_fap(const Graph& g, const std::vector<int>& u, int kappa, std::string name) {
  g.validate();
  if (kappa < 2) throw std::invalid_argument("build_fap: kappa must be at least 2");
  const int n = g.n;
  const SymMat w = g.weight_matrix();
  const double k = kappa;
  const SymMat obj =
      ((k - 1.0) / (2.0 * k)) * laplacian(w) - 0.5 * SymMat(w.rowwise().sum().asDiagonal());

  SparseSymList a(n);
  for (int i = 0; i < n; ++i) a.add({{i, i, 1.0}});
  Vec b = Vec::Ones(n);

  SymMat shift = SymMat::Zero(n, n);
  ConePattern pattern(n, EntryKind::Free);
  for (const auto& [i, j] : g.edges) {
    shift(i, j) = shift(j, i) = -1.0 / (k - 1.0);
    pattern.set(i, j, EntryKind::NonNeg);
  }
  for (int e : u) {
    if (e < 0 || e >= static_cast<int>(g.edges.size())) {
      throw std::invalid_argument("build_fap: U index out of range");
    }
    pattern.set(g.edges[e].first, g.edges[e].second, EntryKind::Zero);
  }
  return DnnSdpProblem(-obj, std::move(a), std::move(b), std::nullopt, std::move(shift),
                       std::move(pattern), {std::move(name), "fap", -1.0, 0.0});
}

QapRows qap_constraints(int n) {
  if (n < 1) throw std::invalid_argument("qap_constraints: need n >= 1");
  QapRows out;
  out.a = SparseSymList(n * n);
  std::vector<double> b;
  // sum_i Y^ii = I, upper triangle (a <= c)
  for (int r = 0; r < n; ++r) {
    for (int c = r; c < n; ++c) {
      std::vector<SymEntry> row;
      for (int i = 0; i < n; ++i) row.push_back({i * n + r, i * n + c, r == c ? 1.0 : 0.5});
      out.a.add(std::move(row));
      b.push_back(r == c ? 1.0 : 0.0);
      ++out.family_counts[0];
    }
  }
  // <I, Y^ij> = delta_ij
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      std::vector<SymEntry> row;
      for (int r = 0; r < n; ++r) row.push_back({i * n + r, j * n + r, i == j ? 1.0 : 0.5});
      out.a.add(std::move(row));
      b.push_back(i == j ? 1.0 : 0.0);
      ++out.family_counts[1];
    }
  }
  // <ones, Y^ij> = 1
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      std::vector<SymEntry> row;
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          if (i == j) {
            if (c < r) continue;
            row.push_back({i * n + r, i * n + c, 1.0});
          } else {
            row.push_back({i * n + r, j * n + c, 0.5});
          }
        }
      }
      out.a.add(std::move(row));
      b.push_back(1.0);
      ++out.family_counts[2];
    }
  }
  out.b = Eigen::Map<const Vec>(b.data(), static_cast<Eigen::Index>(b.size()));
  return out;
}

DnnSdpProblem build_qap(const SymMat& a, const SymMat& b, std::string name) {
  check_square_symmetric(a, "build_qap: A");
  check_square_symmetric(b, "build_qap: B");
  const int n = static_cast<int>(a.rows());
  if (b.rows() != n) throw std::invalid_argument("build_qap: A and B sizes differ");
  if (n > kMaxQapSize) {
    throw std::invalid_argument("build_qap: n = " + std::to_string(n) +
                                " exceeds the supported maximum " + std::to_string(kMaxQapSize) +
                                " (matrix order n^2)");
  }
  const int nn = n * n;
  SymMat c(nn, nn);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) c.block(i * n, j * n, n, n) = b(i, j) * a;
  }
  QapRows rows = qap_constraints(n);
  const std::vector<int> keep = independent_rows(rows.a);
  Vec rhs(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) rhs[k] = rows.b[keep[k]];
  return DnnSdpProblem(std::move(c), rows.a.subset(keep), std::move(rhs), std::nullopt,
                       SymMat::Zero(nn, nn), ConePattern::nonneg(nn),
                       {std::move(name), "qap", 1.0, 0.0});
}

double brute_force_biq(const BiqData& d) {
  const int n = d.n();
  if (n > 20) throw std::invalid_argument("brute_force_biq: n > 20 is not enumerable");
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> on;
  on.reserve(n);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    on.clear();
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) on.push_back(i);
    }
    double v = 0.0;
    for (int i : on) {
      v += d.c[i];
      for (int j : on) v += 0.5 * d.q(i, j);
    }
    best = std::min(best, v);
  }
  return best;
}

double brute_force_qap(const SymMat& a, const SymMat& b) {
  const int n = static_cast<int>(a.rows());
  if (n > 10) throw std::invalid_argument("brute_force_qap: n > 10 is not enumerable");
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    // <P, A P B> with P(p(i), i) = 1
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) v += a(p[i], p[j]) * b(j, i);
    }
    best = std::min(best, v);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

BiqData random_biq(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_biq: n must be positive");
  auto rng = make_rng(seed);
  std::uniform_int_distribution<int> val(-100, 100);
  std::bernoulli_distribution keep(0.5);
  BiqData d{SymMat::Zero(n, n), Vec::Zero(n)};
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (keep(rng)) d.q(i, j) = d.q(j, i) = val(rng);
    }
  }
  for (int i = 0; i < n; ++i) d.c[i] = val(rng);
  return d;
}

Graph random_graph(int n, double p, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_graph: n must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("random_graph: p must lie in [0, 1]");
  auto rng = make_rng(seed);
  std::bernoulli_distribution edge(p);
  Graph g;
  g.n = n;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (edge(rng)) g.edges.emplace_back(i, j);
    }
  }
  return g;
}

SymMat gaussian_affinity(const Mat& points, double bandwidth) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("gaussian_affinity: bandwidth must be > 0");
  const int n = static_cast<int>(points.rows());
  SymMat w = SymMat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d2 = (points.row(i) - points.row(j)).squaredNorm();
      w(i, j) = w(j, i) = std::exp(-d2 / (2.0 * bandwidth * bandwidth));
    }
  }
  return w;
}

SymMat random_clustered_affinity(int n, int kappa, std::uint64_t seed) {
  if (n < 1 || kappa < 1 || kappa > n) {
    throw std::invalid_argument("random_clustered_affinity: need 1 <= kappa <= n");
  }
  auto rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  Mat pts(n, 2);
  for (int i = 0; i < n; ++i) {
    const int cluster = i % kappa;
    const double angle = 2.0 * M_PI * cluster / kappa;
    pts(i, 0) = 4.0 * std::cos(angle) + noise(rng);
    pts(i, 1) = 4.0 * std::sin(angle) + noise(rng);
  }
  return gaussian_affinity(pts, 1.0);
}

FapInstance random_fap(int n, double p, int kappa, std::uint64_t seed) {
  if (kappa < 2) throw std::invalid_argument("random_fap: kappa must be at least 2");
  FapInstance inst;
  inst.kappa = kappa;
  inst.graph = random_graph(n, p, seed);
  auto rng = make_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<int> weight(1, 10);
  std::uniform_int_distribution<int> colour(0, kappa - 1);
  std::bernoulli_distribution pick(0.5);
  std::vector<int> colours(n);
  for (int& c : colours) c = colour(rng);
  for (std::size_t e = 0; e < inst.graph.edges.size(); ++e) {
    inst.graph.weights.push_back(weight(rng));
    const auto [i, j] = inst.graph.edges[e];
    if (colours[i] != colours[j] && pick(rng)) inst.u.push_back(static_cast<int>(e));
  }
  return inst;
}

std::pair<SymMat, SymMat> random_qap(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_qap: n must be positive");
  auto rng = make_rng(seed);
  std::uniform_int_distribution<int> val(0, 10);
  SymMat a = SymMat::Zero(n, n);
  SymMat b = SymMat::Zero(n, n);
  for (SymMat* m : {&a, &b}) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) (*m)(i, j) = (*m)(j, i) = val(rng);
    }
  }
  return {a, b};
}

DnnSdpProblem generate(std::string_view family, int size, std::uint64_t seed) {
  const std::string name =
      std::string(family) + "-" + std::to_string(size) + "-" + std::to_string(seed);
  if (family == "biq") return build_biq(random_biq(size, seed), name);
  if (family == "extbiq") {
    ExtBiqOptions opts;
    opts.seed = seed;
    return build_ext_biq(random_biq(size, seed), opts, name);
  }
  if (family == "theta") return build_theta_plus(random_graph(size, 0.3, seed), name);
  if (family == "rcp") return build_rcp(random_clustered_affinity(size, 2, seed), 2, name);
  if (family == "fap") {
    const FapInstance f = random_fap(size, 0.5, 3, seed);
    return build_fap(f.graph, f.u, f.kappa, name);
  }
  if (family == "qap") {
    const auto [a, b] = random_qap(size, seed);
    return build_qap(a, b, name);
  }
  throw std::invalid_argument("unknown problem family '" + std::string(family) +
                              "' (expected biq, extbiq, theta, rcp, fap or qap)");
}

GenerateSpec parse_generate_spec(std::string_view text) {
  const auto first = text.find(':');
  const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
  if (second == std::string_view::npos) {
    throw std::invalid_argument("expected FAMILY:SIZE:SEED, got '" + std::string(text) + "'");
  }
  GenerateSpec spec;
  spec.family = std::string(text.substr(0, first));
  try {
    std::size_t used = 0;
    const std::string size(text.substr(first + 1, second - first - 1));
    spec.size = std::stoi(size, &used);
    if (used != size.size()) throw std::invalid_argument("size");
    const std::string seed(text.substr(second + 1));
    spec.seed = std::stoull(seed, &used);
    if (used != seed.size()) throw std::invalid_argument("seed");
  } catch (const std::exception&) {
    throw std::invalid_argument("expected FAMILY:SIZE:SEED with integer SIZE and SEED, got '" +
                                std::string(text) + "'");
  }
  if (spec.size < 1) throw std::invalid_argument("SIZE must be positive");
  return spec;
}

namespace {

// Token reader that remembers the line of the last token.
class Tokens {
 public:
  Tokens(std::istream& in, std::string format) : in_(in), format_(std::move(format)) {}

  bool next(std::string& tok) {
    while (!(line_stream_ >> tok)) {
      std::string line;
      if (!std::getline(in_, line)) return false;
      ++line_no_;
      line_ = line;
      line_stream_.clear();
      line_stream_.str(line);
    }
    return true;
  }

  template <typename T>
  T read(const char* what) {
    std::string tok;
    if (!next(tok)) fail(std::string("unexpected end of input while reading ") + what);
    std::istringstream s(tok);
    T v{};
    if (!(s >> v) || !s.eof()) fail(std::string("cannot parse ") + what + " from '" + tok + "'");
    return v;
  }

  void expect_end() {
    std::string tok;
    if (next(tok)) fail("unexpected trailing token '" + tok + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error(format_ + " line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::string format_;
  std::istringstream line_stream_;
  std::string line_;
  int line_no_ = 0;
};

}  // namespace

BiqData read_biqmac(std::istream& in) {
  Tokens t(in, "biqmac");
  const int n = t.read<int>("n");
  const int m = t.read<int>("m");
  if (n < 1 || m < 0) t.fail("invalid header");
  BiqData d{SymMat::Zero(n, n), Vec::Zero(n)};
  for (int e = 0; e < m; ++e) {
    const int i = t.read<int>("row index") - 1;
    const int j = t.read<int>("column index") - 1;
    const double v = t.read<double>("value");
    if (i < 0 || j < 0 || i >= n || j >= n) t.fail("index out of range");
    if (i == j) {
      d.q(i, i) += 2.0 * v;
    } else {
      d.q(i, j) += 2.0 * v;
      d.q(j, i) += 2.0 * v;
    }
  }
  t.expect_end();
  return d;
}

std::pair<SymMat, SymMat> read_qaplib(std::istream& in) {
  Tokens t(in, "qaplib");
  const int n = t.read<int>("n");
  if (n < 1) t.fail("invalid size");
  SymMat a(n, n), b(n, n);
  for (SymMat* m : {&a, &b}) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) (*m)(i, j) = t.read<double>("matrix entry");
    }
  }
  t.expect_end();
  if (a != a.transpose() || b != b.transpose()) {
    throw std::runtime_error("qaplib: only symmetric instances are supported");
  }
  return {a, b};
}

Graph read_dimacs(std::istream& in) {
  std::string line;
  int line_no = 0;
  int expected = -1;
  Graph g;
  std::set<std::pair<int, int>> seen;
  int edge_lines = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw std::runtime_error("dimacs line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream s(line);
    std::string tag;
    if (!(s >> tag) || tag == "c") continue;
    if (tag == "p") {
      std::string kind;
      if (expected >= 0) fail("duplicate problem line");
      if (!(s >> kind >> g.n >> expected) || (kind != "edge" && kind != "col") || g.n < 1 ||
          expected < 0) {
        fail("expected 'p edge n m'");
      }
    } else if (tag == "e") {
      if (expected < 0) fail("edge before problem line");
      int i = 0, j = 0;
      if (!(s >> i >> j)) fail("expected 'e i j'");
      if (i < 1 || j < 1 || i > g.n || j > g.n || i == j) fail("invalid edge");
      ++edge_lines;
      const std::pair<int, int> key{std::min(i, j) - 1, std::max(i, j) - 1};
      if (seen.insert(key).second) g.edges.emplace_back(key.first, key.second);
    } else {
      fail("unknown line type '" + tag + "'");
    }
  }
  if (expected < 0) throw std::runtime_error("dimacs: missing problem line");
  if (edge_lines != expected) {
    throw std::runtime_error("dimacs: header announces " + std::to_string(expected) +
                             " edges, found " + std::to_string(edge_lines));
  }
  return g;
}

}  // namespace cadmm
