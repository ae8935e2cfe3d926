#ifndef CADMM_DNNSDP_HPP_
#define CADMM_DNNSDP_HPP_

// Doubly nonnegative SDPs
//
//   max { -<C, X> | A_E X = b_E, A_I X >= b_I, X psd, X - M in K }
//
// solved through their dual
//
//   min  (delta_+(y_I) - <b_I, y_I>) + (delta_K*(Z) - <M, Z>) - <b_E, y_E> + delta_psd(S)
//   s.t. A_I^* y_I + Z + A_E^* y_E + S = C
//
// with the corrected ADMM in block order y_I -> Z -> y_E -> S. Without the
// inequality block the problem has three blocks Z -> y_E -> S.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cadmm/cones.hpp"
#include "cadmm/engine.hpp"
#include "cadmm/linalg.hpp"
#include "cadmm/status.hpp"

namespace cadmm {

struct InequalityBlock {
  SparseSymList a;
  Vec b;
};

// Bookkeeping that maps <C, X> back to the source problem's objective:
// value = scale * <C, X> + offset.
struct ProblemInfo {
  std::string name;
  std::string family;
  double objective_scale = 1.0;
  double objective_offset = 0.0;
};

class DnnSdpProblem {
 public:
  /// Validates dimensions, symmetry and surjectivity of A_E (factorizes its
  /// Gram matrix), and estimates lambda_max(A_I A_I^*) when inequalities are
  /// present. Throws std::invalid_argument or NumericalError.
  DnnSdpProblem(SymMat c, SparseSymList a_eq, Vec b_eq, std::optional<InequalityBlock> ineq,
                SymMat shift, ConePattern pattern, ProblemInfo info = {});

  int n() const { return static_cast<int>(c_.rows()); }
  int m_eq() const { return a_eq_.size(); }
  int m_ineq() const { return ineq_ ? ineq_->a.size() : 0; }
  bool has_ineq() const { return ineq_.has_value(); }
  int num_blocks() const { return has_ineq() ? 4 : 3; }

  const SymMat& c() const { return c_; }
  const SparseSymList& a_eq() const { return a_eq_; }
  const Vec& b_eq() const { return b_eq_; }
  const std::optional<InequalityBlock>& ineq() const { return ineq_; }
  const SymMat& shift() const { return shift_; }
  const ConePattern& pattern() const { return pattern_; }
  const ProblemInfo& info() const { return info_; }

  const GramSolver& gram_eq() const { return *gram_; }
  /// Inflated lambda_max(A_I A_I^*); 0 for three-block problems.
  double lambda_ineq() const { return lambda_.value; }
  const LambdaEstimate& lambda_estimate() const { return lambda_; }

  /// A_I^* y, or the zero matrix without inequalities.
  SymMat ineq_adjoint(const Vec& y) const;

  /// Objective of the source problem at X.
  double objective(const SymMat& x) const {
    return info_.objective_scale * frob_inner(c_, x) + info_.objective_offset;
  }

 private:
  SymMat c_;
  SparseSymList a_eq_;
  Vec b_eq_;
  std::optional<InequalityBlock> ineq_;
  SymMat shift_;
  ConePattern pattern_;
  ProblemInfo info_;
  std::shared_ptr<const GramSolver> gram_;
  LambdaEstimate lambda_;
};

struct DnnSdpIterate {
  Vec y_i;
  SymMat z;
  Vec y_e;
  SymMat s;
  SymMat x;
  Vec y_i_t;
  SymMat z_t;
  Vec y_e_t;
  SymMat s_t;
  double tau = 1.95;
  double sigma = 1.0;
  int k = 0;
};

/// All-zero start (zero lies in every cone), tau = tau0.
DnnSdpIterate initial_iterate(const DnnSdpProblem& prob, const SolverConfig& cfg);

struct ResidualReport {
  double eta_p = 0.0;
  double eta_d = 0.0;
  double eta_s = 0.0;
  double eta_k = 0.0;
  double eta_s_dual = 0.0;
  double eta_k_dual = 0.0;
  double eta_c1 = 0.0;
  double eta_c2 = 0.0;
  std::optional<double> eta_i;
  std::optional<double> eta_i_dual;
  double eta = 0.0;
  double eta_g = 0.0;
  double primal_objective = 0.0;  // <C, X>
  double dual_objective = 0.0;    // <b_E, y_E> + <b_I, y_I> + <M, Z>

  double primal_infeasibility() const { return std::max({eta_p, eta_s, eta_k}); }
  double dual_infeasibility() const { return std::max({eta_d, eta_s_dual, eta_k_dual}); }
  /// (name, value) for every present component, in reporting order.
  std::vector<std::pair<std::string, double>> components() const;
};

ResidualReport residuals(const DnnSdpIterate& it, const DnnSdpProblem& prob);

// Subproblem solvers. Each takes the k-th iterate (tilde variables are the
// proximal centers) plus the blocks already updated in this sweep.
Vec update_y_i(const DnnSdpIterate& it, const DnnSdpProblem& prob, double sigma);
SymMat update_z(const DnnSdpIterate& it, const DnnSdpProblem& prob, double sigma,
                const Vec& y_i_new);
Vec update_y_e(const DnnSdpIterate& it, const DnnSdpProblem& prob, double sigma,
               const Vec& y_i_new, const SymMat& z_new);
SymMat update_s(const DnnSdpIterate& it, const DnnSdpProblem& prob, double sigma,
                const Vec& y_i_new, const SymMat& z_new, const Vec& y_e_new);

enum class Variant { Corrected, DirectExtended };

struct StepInfo {
  double delta = 0.0;
  double f_pred_sq = 0.0;
  double f_full_sq = 0.0;
};

/// One iteration. For Corrected, tau follows the adaptive law (tau0 at k = 0)
/// and the middle blocks are corrected; for DirectExtended the multiplier step
/// is cfg-independent `fixed_tau` and every tilde equals its value.
DnnSdpIterate cadmm_step(const DnnSdpIterate& it, const DnnSdpProblem& prob,
                         const SolverConfig& cfg, Variant variant = Variant::Corrected,
                         double fixed_tau = 1.618, StepInfo* info = nullptr);

struct TuningPolicy {
  bool tune_sigma = true;
  int check_period = 50;
  double balance_ratio = 5.0;
  double sigma_factor = 1.5;
  double sigma_min = 1e-4;
  double sigma_max = 1e4;
  int freeze_after = -1;  // < 0: 0.75 * max_iters
  bool restart = true;
  int restart_stall_window = 100;
  double restart_decrease_threshold = 0.01;

  static TuningPolicy disabled() {
    TuningPolicy p;
    p.tune_sigma = false;
    p.restart = false;
    return p;
  }
  int freeze_iteration(int max_iters) const {
    return freeze_after >= 0 ? freeze_after : static_cast<int>(0.75 * max_iters);
  }
};

/// Residual balancing of the penalty. Every check_period iterations before the
/// freeze point, with rho = primal_infeasibility / dual_infeasibility:
/// rho > balance_ratio divides sigma by sigma_factor, rho < 1 / balance_ratio
/// multiplies it, both clamped to [sigma_min, sigma_max].
double tune_sigma(const ResidualReport& report, double sigma, int k, const TuningPolicy& policy,
                  int max_iters);

/// When eta has not dropped by the relative threshold over the stall window,
/// resets every tilde variable to its value and tau to tau0. `eta_history`
/// holds the residuals since the last restart, newest last. Returns true on
/// restart.
bool maybe_restart(std::span<const double> eta_history, DnnSdpIterate& it,
                   const TuningPolicy& policy, double tau0);

struct DnnSolveResult {
  SolveStatus status = SolveStatus::MaxIters;
  int iterations = 0;
  ResidualReport report;
  DnnSdpIterate iterate;
  double seconds = 0.0;
  std::vector<double> tau_history;
  std::vector<double> eta_history;
  std::vector<int> restarts;  // iteration counts at which a restart fired
  std::string message;
};

struct DnnSolveOptions {
  Variant variant = Variant::Corrected;
  double fixed_tau = 1.618;
  std::function<void(const DnnSdpIterate&)> observer;
};

/// Runs cadmm_step with residual checks until eta < cfg.tol or cfg.max_iters.
/// Throws NumericalError with a diagnostic on non-finite iterates.
DnnSolveResult cadmm_solve(const DnnSdpProblem& prob, const SolverConfig& cfg,
                           const TuningPolicy& policy = {}, const DnnSolveOptions& opts = {});

/// Default iteration cap: 20000 for three blocks, 40000 for four.
int default_max_iters(const DnnSdpProblem& prob);

// Bridge to the generic engine. X, Z and S are flattened column-major n*n
// vectors; block order is y_I (if present), Z, y_E, S.
MultiBlockProblem to_multiblock(const DnnSdpProblem& prob);
std::vector<Vec> flatten_blocks(const DnnSdpIterate& it, const DnnSdpProblem& prob,
                                bool tilde = false);
Vec flatten(const SymMat& m);
SymMat unflatten(const Vec& v, int n);

}  // namespace cadmm

#endif  // CADMM_DNNSDP_HPP_
