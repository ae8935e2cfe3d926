#ifndef CADMM_ENGINE_HPP_
#define CADMM_ENGINE_HPP_

// Generic p-block corrected semi-proximal ADMM for
//
//   min  sum_i theta_i(z_i)   s.t.  sum_i A_i^* z_i = c,
//
// together with the directly extended multi-block ADMM baseline and the dense
// operators (M, H, G = M H) over blocks 2..p used to check the correction step.
//
// All spaces are flattened to Eigen vectors with the Euclidean inner product.

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cadmm/cones.hpp"
#include "cadmm/linalg.hpp"
#include "cadmm/status.hpp"

namespace cadmm {

/// The map A_i : X -> Z_i and its adjoint A_i^* : Z_i -> X.
struct LinearBlockMap {
  int block_dim = 0;
  int space_dim = 0;
  std::function<Vec(const Vec&)> apply;
  std::function<Vec(const Vec&)> apply_adjoint;

  /// From the dense matrix of A_i^* (space_dim x block_dim).
  static LinearBlockMap dense(Mat adjoint_matrix);
  static LinearBlockMap identity(int dim);
};

/// Choice of the semi-proximal operator T_i.
struct SemiProx {
  enum class Kind { Zero, ScaledIdentity };
  Kind kind = Kind::Zero;
  double rho = 0.0;  // T_i = rho I - A_i A_i^*, requires rho >= lambda_max(A_i A_i^*)

  static SemiProx zero() { return {}; }
  static SemiProx scaled_identity(double rho) { return {Kind::ScaledIdentity, rho}; }
};

// argmin_z theta(z) + <x, A^* z> + sigma/2 ||A^* z + r||^2 + sigma/2 ||z - center||_T^2
using SubSolver = std::function<Vec(const Vec& x, const Vec& r, const Vec& center, double sigma)>;
using LinearOp = std::function<Vec(const Vec&)>;

struct BlockSpec {
  std::string name;
  LinearBlockMap map;
  SemiProx semiprox;
  // Optional for ScaledIdentity blocks with a prox: the engine then solves the
  // subproblem as one prox step at a shifted point.
  SubSolver subsolve;
  // (T_i + A_i A_i^*)^{-1}; needed for blocks 2..p-1. Supplied automatically
  // for ScaledIdentity blocks.
  LinearOp einv;
  // Prox of theta_i, used by kkt_residual and by the ScaledIdentity collapse.
  ProxOracle prox;
};

struct MultiBlockProblem {
  std::vector<BlockSpec> blocks;
  Vec c;

  int num_blocks() const { return static_cast<int>(blocks.size()); }
  int space_dim() const { return static_cast<int>(c.size()); }

  /// Checks dimensions and per-block requirements and fills in derived
  /// oracles (collapsed subsolve, einv). Throws std::invalid_argument.
  void prepare();
};

struct SolverConfig {
  double sigma = 1.0;
  double alpha = 0.999;
  double tau_bar = 0.1;
  double eps = 0.1;
  double tau0 = 1.95;
  double tol = 1e-6;
  int max_iters = 20000;
  bool record_history = false;
  double divergence_threshold = 1e12;

  /// Throws std::invalid_argument if a parameter lies outside its range.
  void validate() const;
};

struct IterateState {
  std::vector<Vec> z;
  std::vector<Vec> z_tilde;
  std::vector<Vec> adj_tilde;  // A_i^* z_tilde_i
  Vec x;
  double tau = 1.95;
  int k = 0;
};

/// Zero blocks, zero multiplier, tau = tau0.
IterateState initial_state(const MultiBlockProblem& prob, const SolverConfig& cfg);

/// State from given block values (z_tilde = z) and multiplier.
IterateState make_state(const MultiBlockProblem& prob, std::vector<Vec> z, Vec x, double tau);

struct Prediction {
  std::vector<Vec> z;    // z^{k+1}
  std::vector<Vec> adj;  // A_i^* z_i^{k+1}
  Vec f_pred;            // F(z_1^{k+1}, z~_2^k, ..., z~_p^k)
  Vec f_full;            // F(z_1^{k+1}, ..., z_p^{k+1})
};

/// One Gauss-Seidel sweep over the blocks with proximal centers z_tilde.
Prediction predict(const IterateState& state, const MultiBlockProblem& prob,
                   const SolverConfig& cfg);

/// Infeasibility ratio delta_k; +infinity when ||F_full||^2 == 0.
double compute_delta(double f_pred_sq, double f_full_sq, double last_block_change_sq,
                     double eps);

/// Step-size law: min(1 + delta, tau_prev) if 1 + delta > tau_bar, else tau_bar.
double update_tau(double tau_prev, double delta, double tau_bar);

Vec update_multiplier(const Vec& x, double tau, double sigma, const Vec& f_full);

struct Correction {
  std::vector<Vec> z_tilde;
  std::vector<Vec> adj_tilde;
};

/// Correction of the middle blocks, from block p-1 down to 2. Blocks 1 and p
/// take their predicted values.
Correction correct(const IterateState& state, const Prediction& pred,
                   const MultiBlockProblem& prob, double alpha);

// Scalar measure compared against cfg.tol; the default is
// max(||F(z)|| / (1 + ||c||), kkt_residual).
using ResidualMeasure = std::function<double(const MultiBlockProblem&, const IterateState&)>;

struct IterationTrace {
  int k = 0;
  const IterateState* before = nullptr;
  const Prediction* prediction = nullptr;
  const IterateState* after = nullptr;
  double delta = 0.0;
};
using IterationObserver = std::function<void(const IterationTrace&)>;

struct SolveResult {
  SolveStatus status = SolveStatus::MaxIters;
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  IterateState state;
  std::vector<double> tau_history;
  std::vector<double> residual_history;
  double seconds = 0.0;
  std::string message;
};

/// The corrected semi-proximal ADMM. Throws NumericalError on non-finite
/// iterates and propagates oracle failures.
SolveResult solve(MultiBlockProblem prob, const SolverConfig& cfg,
                  const ResidualMeasure& measure = {}, const IterationObserver& observer = {});

/// Directly extended multi-block ADMM with a fixed step tau. Iterate norms
/// beyond cfg.divergence_threshold, or non-finite iterates, end the run with
/// status Diverged.
SolveResult solve_direct_extended(MultiBlockProblem prob, const SolverConfig& cfg, double tau = 1.618,
                                  const ResidualMeasure& measure = {});

struct TheoryOperators {
  Mat m;
  Mat h;
  Mat g;
  std::vector<int> offsets;  // start of block i+2 (1-based) in the stacked space
};

/// Dense M, H and G = M H over Z_2 x ... x Z_p. Throws std::invalid_argument
/// when the stacked dimension exceeds 500.
TheoryOperators build_theory_operators(MultiBlockProblem prob, double alpha);

struct KktReport {
  double value = 0.0;
  double feasibility = 0.0;      // ||F(z)||
  std::vector<double> block;     // ||z_i - prox_i(z_i - A_i x, 1)||, NaN when skipped
  std::vector<int> skipped;      // blocks without a prox oracle
};

/// Prox-based residual of the optimality conditions with t = 1.
KktReport kkt_residual(const MultiBlockProblem& prob, const std::vector<Vec>& z, const Vec& x);

/// theta(z) = 1/2 z'Qz + q'z with dense A^* (space_dim x block_dim). The
/// subsolve handles any SemiProx by a dense solve; prox and einv are exact.
BlockSpec dense_quadratic_block(std::string name, Mat q_mat, Vec q_vec, Mat adjoint_matrix,
                                SemiProx semiprox = SemiProx::zero());

/// Dense A_i^* (space_dim x block_dim) obtained by applying the adjoint to unit
/// vectors.
Mat densify_adjoint(const LinearBlockMap& map);

/// Dense T_i for the block's SemiProx.
Mat dense_semiprox(const BlockSpec& block);

}  // namespace cadmm

#endif  // CADMM_ENGINE_HPP_
