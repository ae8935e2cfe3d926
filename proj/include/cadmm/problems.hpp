#ifndef CADMM_PROBLEMS_HPP_
#define CADMM_PROBLEMS_HPP_

// Builders for the DNN-SDP test families, seeded random instance generators,
// brute-force oracles for tiny instances and readers for the native dataset
// formats (Biq Mac, QAPLIB, DIMACS).
//
// Every builder stores its problem in the max -<C, X> form and records in
// ProblemInfo how <C, X> maps back to the source objective. Constraint rows
// are emitted in a fixed order: diagonal rows ascending, then the corner or
// trace row, then each remaining family in the order it is listed.

#include <array>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cadmm/dnnsdp.hpp"

namespace cadmm {

struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // i < j, no duplicates
  std::vector<double> weights;             // empty, or one per edge

  /// Throws std::invalid_argument on self-loops, out-of-range or duplicate
  /// edges, or a weight count mismatch.
  void validate() const;
  double weight(std::size_t e) const { return weights.empty() ? 1.0 : weights[e]; }
  /// Dense symmetric weight matrix (zero off the edge set).
  SymMat weight_matrix() const;
};

// min 1/2 x'Qx + <c, x> over x in {0,1}^n.
struct BiqData {
  SymMat q;
  Vec c;
  int n() const { return static_cast<int>(c.size()); }
};

/// Order n+1 relaxation; the last row/column carries x and the corner alpha.
DnnSdpProblem build_biq(const BiqData& d, std::string name = "biq");

struct ExtBiqOptions {
  int full_triangle_limit = 25;  // all triangle rows up to this n
  int max_triangles = 2300;      // sampled uniformly beyond it
  std::uint64_t seed = 1;
};

struct ExtBiqCuts {
  InequalityBlock block;
  int pair_rows = 0;
  int triangle_rows = 0;
};

/// The valid inequalities of the extended BIQ relaxation over order n+1.
/// Pair cuts use 0-based i < j with 1 <= j <= n-2, three rows per pair in
/// the order x_i - Y_ij >= 0, x_j - Y_ij >= 0, Y_ij - x_i - x_j >= -1.
/// Triangle rows use unordered i < j < k.
ExtBiqCuts ext_biq_cuts(int n, const ExtBiqOptions& opts = {});

DnnSdpProblem build_ext_biq(const BiqData& d, const ExtBiqOptions& opts = {},
                            std::string name = "extbiq");

/// theta_+(G); the source value is -<C, X>.
DnnSdpProblem build_theta_plus(const Graph& g, std::string name = "theta");

/// Relaxed clustering with affinity W and kappa clusters; the source value is
/// <C, X> + tr W. Throws std::invalid_argument unless 1 <= kappa <= n.
DnnSdpProblem build_rcp(const SymMat& w, int kappa, std::string name = "rcp");

/// Frequency assignment relaxation. `u` lists indices into g.edges that are
/// fixed to M_ij = -1/(kappa-1). The source value is -<C, X>.
DnnSdpProblem build_fap(const Graph& g, const std::vector<int>& u, int kappa,
                        std::string name = "fap");

/// Laplacian Diag(W e) - W.
SymMat laplacian(const SymMat& w);

inline constexpr int kMaxQapSize = 8;

struct QapRows {
  SparseSymList a;
  Vec b;
  std::array<int, 3> family_counts{};  // before dependent rows are dropped
};

/// The three equality families over order n^2, all rows kept.
QapRows qap_constraints(int n);

/// QAP relaxation over order n^2 with objective B (x) A. Linearly dependent
/// rows are dropped. Throws std::invalid_argument for n > kMaxQapSize.
DnnSdpProblem build_qap(const SymMat& a, const SymMat& b, std::string name = "qap");

/// Exact minimum by enumeration; refuses n > 20.
double brute_force_biq(const BiqData& d);

/// min over permutation matrices P of <P, A P B>; refuses n > 10.
double brute_force_qap(const SymMat& a, const SymMat& b);

// Seeded generators. Equal arguments give bit-identical instances.

/// Integer entries: off-diagonal Q uniform in [-100, 100] with density 0.5,
/// zero diagonal, c uniform in [-100, 100].
BiqData random_biq(int n, std::uint64_t seed);
/// Erdos-Renyi G(n, p), unit weights.
Graph random_graph(int n, double p, std::uint64_t seed);
/// Gaussian kernel affinity exp(-|p_i - p_j|^2 / (2 h^2)) with zero diagonal.
SymMat gaussian_affinity(const Mat& points, double bandwidth);
/// kappa well-separated planar point clusters turned into an affinity matrix
/// with bandwidth 1.
SymMat random_clustered_affinity(int n, int kappa, std::uint64_t seed);

struct FapInstance {
  Graph graph;
  std::vector<int> u;
  int kappa = 2;
};

/// G(n, p) with integer weights in [1, 10]. U is drawn from the edges whose
/// endpoints differ in a hidden random kappa-coloring, so the instance is
/// feasible.
FapInstance random_fap(int n, double p, int kappa, std::uint64_t seed);

/// Symmetric integer matrices with entries in [0, 10] and zero diagonal.
std::pair<SymMat, SymMat> random_qap(int n, std::uint64_t seed);

/// Instance from a FAMILY:SIZE:SEED style request. Families: biq, extbiq,
/// theta, rcp, fap, qap. Throws std::invalid_argument for unknown families.
DnnSdpProblem generate(std::string_view family, int size, std::uint64_t seed);

/// Parses "FAMILY:SIZE:SEED".
struct GenerateSpec {
  std::string family;
  int size = 0;
  std::uint64_t seed = 0;
};
GenerateSpec parse_generate_spec(std::string_view text);

// Readers. Whitespace is free-form; counts are checked strictly. Errors are
// std::runtime_error carrying the offending line.

/// Biq Mac: header "n m", then m triples "i j q" (1-based) of the upper
/// triangle of a symmetric Q in min x'Qx. Returned as 1/2 x'(2Q)x.
BiqData read_biqmac(std::istream& in);
/// QAPLIB: n, then A, then B, row by row. Both must be symmetric.
std::pair<SymMat, SymMat> read_qaplib(std::istream& in);
/// DIMACS edge format: "c" comments, "p edge n m", m lines "e i j".
Graph read_dimacs(std::istream& in);

}  // namespace cadmm

#endif  // CADMM_PROBLEMS_HPP_
