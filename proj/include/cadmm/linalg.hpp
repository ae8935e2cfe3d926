#ifndef CADMM_LINALG_HPP_
#define CADMM_LINALG_HPP_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cadmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Dense symmetric matrix. Symmetry is a contract, not enforced by the type;
// routines that need it read the upper triangle.
using SymMat = Eigen::MatrixXd;

/// Raised when an iterate or an input contains non-finite values, or a
/// factorization cannot proceed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Copies the upper triangle of `m` onto the lower one.
SymMat symmetrize_upper(const SymMat& m);

/// Frobenius inner product.
inline double frob_inner(const Mat& a, const Mat& b) {
  return (a.array() * b.array()).sum();
}

// One stored entry of a sparse symmetric matrix. `value` sits at both (row,
// col) and (col, row), so <A, X> picks up 2 * value * X(row, col) for an
// off-diagonal entry.
struct SymEntry {
  int row;
  int col;
  double value;
};

/// A list of m sparse symmetric n x n matrices A_1..A_m, viewed as the linear
/// map X -> (<A_k, X>)_k and its adjoint y -> sum_k y_k A_k.
class SparseSymList {
 public:
  SparseSymList() = default;
  explicit SparseSymList(int n);

  int dim() const { return n_; }
  int size() const { return static_cast<int>(mats_.size()); }
  bool empty() const { return mats_.empty(); }

  /// Appends a matrix. Entries with row > col are mirrored; an empty entry
  /// list is allowed. Throws std::invalid_argument on out-of-range or
  /// duplicate positions.
  void add(std::vector<SymEntry> entries);

  const std::vector<SymEntry>& matrix(int k) const { return mats_.at(k); }

  /// (<A_k, X>)_k. X need not be symmetric; both triangles are read.
  Vec apply(const Mat& x) const;
  /// sum_k y_k A_k.
  SymMat adjoint(const Vec& y) const;
  /// <A_k, X>.
  double inner(int k, const Mat& x) const;
  /// Dense copy of A_k.
  SymMat dense(int k) const;
  /// Squared Frobenius norm of A_k.
  double frob_norm_sq(int k) const;

  /// The m x m matrix of pairwise inner products <A_k, A_l>.
  Mat gram() const;

  /// Keeps only the matrices whose indices appear in `keep` (in that order).
  SparseSymList subset(const std::vector<int>& keep) const;

 private:
  int n_ = 0;
  std::vector<std::vector<SymEntry>> mats_;
};

/// Nearest positive semidefinite matrix in the Frobenius norm. Eigenvalues
/// below 1e-12 * max|lambda| are clamped to zero.
/// Throws NumericalError on non-finite input.
SymMat project_psd(const SymMat& m);

/// Eigenvalue clamp threshold used by project_psd for a given spectrum.
double eig_tolerance(const Vec& eigenvalues);

struct LambdaEstimate {
  double value = 0.0;  // inflated estimate used to build the proximal term
  double raw = 0.0;    // Rayleigh quotient at exit
  int iterations = 0;
  bool converged = false;  // false: value is the trace bound sum ||A_k||_F^2
};

struct PowerIterationOptions {
  int max_iters = 200;
  double rel_tol = 1e-8;
  double safety = 1e-6;
  std::uint64_t seed = 20150210;
};

/// Largest eigenvalue of a symmetric PSD operator of dimension `dim` by power
/// iteration from a seeded random start. `fallback` is returned (with
/// converged = false) when the iteration stalls.
LambdaEstimate power_iteration(const std::function<Vec(const Vec&)>& op, int dim,
                               double fallback,
                               const PowerIterationOptions& opts = {});

/// lambda_max(A A*) for the Gram operator of `a`, inflated by (1 + safety).
/// Throws std::invalid_argument if `a` is empty.
LambdaEstimate lambda_max_gram(const SparseSymList& a,
                               const PowerIterationOptions& opts = {});

/// Cached Cholesky factorization of the Gram matrix A A*.
class GramSolver {
 public:
  static constexpr int kMaxDenseSize = 5000;

  /// Throws NumericalError naming the first constraint whose pivot drops
  /// below 1e-12 times the largest pivot seen.
  explicit GramSolver(const SparseSymList& a);

  int size() const { return static_cast<int>(gram_.rows()); }
  const Mat& gram() const { return gram_; }

  /// Solves (A A*) y = rhs with one step of iterative refinement.
  Vec solve(const Vec& rhs) const;

 private:
  Mat gram_;
  Mat lower_;
};

/// One-shot gram solve; prefer GramSolver when solving repeatedly.
Vec gram_solve(const SparseSymList& a, const Vec& rhs);

/// Indices of a maximal linearly independent prefix-greedy subset of the
/// constraint matrices, in their original order. A row is dropped when its
/// Cholesky pivot against the rows kept so far is below rel_tol times its own
/// squared norm.
std::vector<int> independent_rows(const SparseSymList& a, double rel_tol = 1e-10);

}  // namespace cadmm

#endif  // CADMM_LINALG_HPP_
