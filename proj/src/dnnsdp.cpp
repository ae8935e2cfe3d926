#include "cadmm/dnnsdp.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cadmm {

namespace {

void require_symmetric(const SymMat& m, int n, const char* what) {
  if (m.rows() != n || m.cols() != n) {
    throw std::invalid_argument(std::string("DnnSdpProblem: ") + what + " must be n x n");
  }
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string("DnnSdpProblem: ") + what + " has non-finite entries");
  }
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument(std::string("DnnSdpProblem: ") + what + " is not symmetric");
  }
}

// Frobenius norm of the negative part of the spectrum of m.
double negative_spectrum_norm(const SymMat& m) {
  if (!m.allFinite()) throw NumericalError("residuals: non-finite matrix");
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize_upper(m), Eigen::EigenvaluesOnly);
  const Vec& lam = eig.eigenvalues();
  double sq = 0.0;
  for (int i = 0; i < lam.size(); ++i) {
    if (lam[i] < 0.0) sq += lam[i] * lam[i];
  }
  return std::sqrt(sq);
}

}  // namespace

DnnSdpProblem::DnnSdpProblem(SymMat c, SparseSymList a_eq, Vec b_eq,
                             std::optional<InequalityBlock> ineq, SymMat shift,
                             ConePattern pattern, ProblemInfo info)
    : c_(std::move(c)),
      a_eq_(std::move(a_eq)),
      b_eq_(std::move(b_eq)),
      ineq_(std::move(ineq)),
      shift_(std::move(shift)),
      pattern_(std::move(pattern)),
      info_(std::move(info)) {
  const int dim = static_cast<int>(c_.rows());
  if (dim < 1) throw std::invalid_argument("DnnSdpProblem: empty objective matrix");
  require_symmetric(c_, dim, "C");
  require_symmetric(shift_, dim, "M");
  c_ = symmetrize_upper(c_);
  shift_ = symmetrize_upper(shift_);
  if (pattern_.dim() != dim) throw std::invalid_argument("DnnSdpProblem: pattern dimension mismatch");
  if (a_eq_.dim() != dim) throw std::invalid_argument("DnnSdpProblem: A_E dimension mismatch");
  if (a_eq_.empty()) throw std::invalid_argument("DnnSdpProblem: need at least one equality");
  if (b_eq_.size() != a_eq_.size()) throw std::invalid_argument("DnnSdpProblem: b_E length mismatch");
  if (!b_eq_.allFinite()) throw std::invalid_argument("DnnSdpProblem: b_E has non-finite entries");
  try {
    gram_ = std::make_shared<const GramSolver>(a_eq_);
  } catch (const NumericalError& e) {
    throw std::invalid_argument(std::string("DnnSdpProblem: A_E is not surjective: ") + e.what());
  }
  if (ineq_) {
    if (ineq_->a.dim() != dim) throw std::invalid_argument("DnnSdpProblem: A_I dimension mismatch");
    if (ineq_->a.empty()) throw std::invalid_argument("DnnSdpProblem: empty inequality block");
    if (ineq_->b.size() != ineq_->a.size()) {
      throw std::invalid_argument("DnnSdpProblem: b_I length mismatch");
    }
    lambda_ = lambda_max_gram(ineq_->a);
    if (!(lambda_.value > 0.0)) {
      throw std::invalid_argument("DnnSdpProblem: lambda_max(A_I A_I^*) must be positive");
    }
  }
}

SymMat DnnSdpProblem::ineq_adjoint(const Vec& y) const {
  if (!ineq_) return SymMat::Zero(n(), n());
  return ineq_->a.adjoint(y);
}

DnnSdpIterate initial_iterate(const DnnSdpProblem& prob, const SolverConfig& cfg) {
  const int n = prob.n();
  DnnSdpIterate it;
  it.y_i = Vec::Zero(prob.m_ineq());
  it.z = SymMat::Zero(n, n);
  it.y_e = Vec::Zero(prob.m_eq());
  it.s = SymMat::Zero(n, n);
  it.x = SymMat::Zero(n, n);
  it.y_i_t = it.y_i;
  it.z_t = it.z;
  it.y_e_t = it.y_e;
  it.s_t = it.s;
  it.tau = cfg.tau0;
  it.sigma = cfg.sigma;
  return it;
}

std::vector<std::pair<std::string, double>> ResidualReport::components() const {
  std::vector<std::pair<std::string, double>> out = {
      {"P", eta_p},   {"D", eta_d},       {"S", eta_s},   {"K", eta_k},
      {"S*", eta_s_dual}, {"K*", eta_k_dual}, {"C1", eta_c1}, {"C2", eta_c2}};
  if (eta_i) out.emplace_back("I", *eta_i);
  if (eta_i_dual) out.emplace_back("I*", *eta_i_dual);
  return out;
}

ResidualReport residuals(const DnnSdpIterate& it, const DnnSdpProblem& prob) {
  ResidualReport r;
  const SymMat& x = it.x;
  const double nx = x.norm();
  const double ns = it.s.norm();
  const double nz = it.z.norm();

  r.eta_p = (prob.a_eq().apply(x) - prob.b_eq()).norm() / (1.0 + prob.b_eq().norm());
  const SymMat dual_res =
      prob.ineq_adjoint(it.y_i) + it.z + prob.a_eq().adjoint(it.y_e) + it.s - prob.c();
  r.eta_d = dual_res.norm() / (1.0 + prob.c().norm());
  r.eta_s = negative_spectrum_norm(x) / (1.0 + nx);
  // K-violation is measured on X - M; with M = 0 and an all-NonNeg pattern
  // this is ||Pi_K*(-X)||.
  const SymMat shifted = x - prob.shift();
  r.eta_k = (shifted - project_pattern(shifted, prob.pattern())).norm() / (1.0 + nx);
  r.eta_s_dual = negative_spectrum_norm(it.s) / (1.0 + ns);
  r.eta_k_dual = (it.z - project_pattern_dual(it.z, prob.pattern())).norm() / (1.0 + nz);
  r.eta_c1 = std::abs(frob_inner(x, it.s)) / (1.0 + nx + ns);
  r.eta_c2 = std::abs(frob_inner(shifted, it.z)) / (1.0 + nx + nz);

  r.primal_objective = frob_inner(prob.c(), x);
  r.dual_objective = prob.b_eq().dot(it.y_e) + frob_inner(prob.shift(), it.z);
  if (prob.has_ineq()) {
    const auto& ineq = *prob.ineq();
    r.eta_i = (ineq.b - ineq.a.apply(x)).cwiseMax(0.0).norm() / (1.0 + ineq.b.norm());
    r.eta_i_dual = (-it.y_i).cwiseMax(0.0).norm() / (1.0 + it.y_i.norm());
    r.dual_objective += ineq.b.dot(it.y_i);
  }
  r.eta = 0.0;
  for (const auto& [name, v] : r.components()) r.eta = std::max(r.eta, v);
  r.eta_g = (r.primal_objective - r.dual_objective) /
            (1.0 + std::abs(r.primal_objective + r.dual_objective));
  return r;
}

Vec update_y_i(const DnnSdpIterate& it, const DnnSdpProblem& prob, double sigma) {
  if (!prob.has_ineq()) throw std::invalid_argument("update_y_i: problem has no inequality block");
  const auto& ineq = *prob.ineq();
  const double lam = prob.lambda_ineq();
  const SymMat f_tilde = ineq.a.adjoint(it.y_i_t) + it.z_t + prob.a_eq().adjoint(it.y_e_t) +
                         it.s_t - prob.c();
  // T = lam I - A_I A_I^* leaves (sigma lam / 2)||y||^2 plus a linear term.
  const Vec grad = ineq.a.apply(it.x + sigma * f_tilde) - ineq.b;
  return project_nonneg(it.y_i_t - grad / (lam * sigma));
}

SymMat update_z(const DnnSdpIterate& it, const DnnSdpProblem& prob, double sigma,
                const Vec& y_i_new) {
  const SymMat w = prob.ineq_adjoint(y_i_new) + prob.a_eq().adjoint(it.y_e_t) + it.s_t - prob.c();
  return project_pattern_dual((prob.shift() - it.x) / sigma - w, prob.pattern());
}

Vec update_y_e(const DnnSdpIterate& it, const DnnSdpProblem& prob, double sigma,
               const Vec& y_i_new, const SymMat& z_new) {
  const SymMat v = prob.ineq_adjoint(y_i_new) + z_new + it.s_t - prob.c();
  const Vec rhs = prob.b_eq() / sigma - prob.a_eq().apply(it.x / sigma + v);
  return prob.gram_eq().solve(rhs);
}

SymMat update_s(const DnnSdpIterate& it, const DnnSdpProblem& prob, double sigma,
                const Vec& y_i_new, const SymMat& z_new, const Vec& y_e_new) {
  const SymMat v = prob.ineq_adjoint(y_i_new) + z_new + prob.a_eq().adjoint(y_e_new) - prob.c();
  return project_psd(-v - it.x / sigma);
}

DnnSdpIterate cadmm_step(const DnnSdpIterate& it, const DnnSdpProblem& prob,
                         const SolverConfig& cfg, Variant variant, double fixed_tau,
                         StepInfo* info) {
  const double sigma = it.sigma;
  DnnSdpIterate next = it;
  next.y_i = prob.has_ineq() ? update_y_i(it, prob, sigma) : Vec();
  next.z = update_z(it, prob, sigma, next.y_i);
  next.y_e = update_y_e(it, prob, sigma, next.y_i, next.z);
  next.s = update_s(it, prob, sigma, next.y_i, next.z, next.y_e);

  const SymMat ai_y = prob.ineq_adjoint(next.y_i);
  const SymMat ae_y_t = prob.a_eq().adjoint(it.y_e_t);
  const SymMat f_full = ai_y + next.z + prob.a_eq().adjoint(next.y_e) + next.s - prob.c();
  // F after the first block only: y_I for four blocks, Z for three
  const SymMat f_pred = prob.has_ineq() ? SymMat(ai_y + it.z_t + ae_y_t + it.s_t - prob.c())
                                        : SymMat(next.z + ae_y_t + it.s_t - prob.c());
  const SymMat ds = next.s - it.s_t;

  StepInfo step;
  step.f_pred_sq = f_pred.squaredNorm();
  step.f_full_sq = f_full.squaredNorm();
  step.delta = compute_delta(step.f_pred_sq, step.f_full_sq, ds.squaredNorm(), cfg.eps);
  if (info) *info = step;

  double tau = fixed_tau;
  if (variant == Variant::Corrected) {
    tau = it.k == 0 ? cfg.tau0 : update_tau(it.tau, step.delta, cfg.tau_bar);
  }
  next.tau = tau;
  next.x = it.x + (tau * sigma) * f_full;
  next.k = it.k + 1;

  if (variant == Variant::DirectExtended) {
    next.y_i_t = next.y_i;
    next.z_t = next.z;
    next.y_e_t = next.y_e;
    next.s_t = next.s;
    return next;
  }
  // y_E is a middle block in both layouts; Z only with four blocks.
  next.y_e_t = it.y_e_t + cfg.alpha * (next.y_e - it.y_e_t) -
               prob.gram_eq().solve(prob.a_eq().apply(ds));
  if (prob.has_ineq()) {
    next.z_t = it.z_t + cfg.alpha * (next.z - it.z_t) - ds -
               prob.a_eq().adjoint(next.y_e_t - it.y_e_t);
  } else {
    next.z_t = next.z;
  }
  next.y_i_t = next.y_i;
  next.s_t = next.s;
  return next;
}

double tune_sigma(const ResidualReport& report, double sigma, int k, const TuningPolicy& policy,
                  int max_iters) {
  if (!policy.tune_sigma || policy.check_period <= 0) return sigma;
  if (k <= 0 || k % policy.check_period != 0) return sigma;
  if (k >= policy.freeze_iteration(max_iters)) return sigma;
  const double ratio =
      report.primal_infeasibility() / std::max(report.dual_infeasibility(), 1e-16);
  // A larger sigma enforces A_I^* y_I + Z + A_E^* y_E + S = C harder and
  // makes X move more per step, so it buys dual feasibility at the cost of
  // primal feasibility. Lagging primal residuals therefore shrink sigma.
  if (ratio > policy.balance_ratio) return std::max(sigma / policy.sigma_factor, policy.sigma_min);
  if (ratio < 1.0 / policy.balance_ratio) {
    return std::min(sigma * policy.sigma_factor, policy.sigma_max);
  }
  return sigma;
}

bool maybe_restart(std::span<const double> eta_history, DnnSdpIterate& it,
                   const TuningPolicy& policy, double tau0) {
  if (!policy.restart || policy.restart_stall_window <= 0) return false;
  const auto window = static_cast<std::size_t>(policy.restart_stall_window);
  if (eta_history.size() <= window) return false;
  const double now = eta_history.back();
  const double then = eta_history[eta_history.size() - 1 - window];
  if (now < (1.0 - policy.restart_decrease_threshold) * then) return false;
  it.y_i_t = it.y_i;
  it.z_t = it.z;
  it.y_e_t = it.y_e;
  it.s_t = it.s;
  it.tau = tau0;
  return true;
}

int default_max_iters(const DnnSdpProblem& prob) { return prob.has_ineq() ? 40000 : 20000; }

namespace {

bool iterate_finite(const DnnSdpIterate& it) {
  return it.x.allFinite() && it.s.allFinite() && it.z.allFinite() && it.y_e.allFinite() &&
         it.y_i.allFinite() && it.z_t.allFinite() && it.y_e_t.allFinite();
}

std::string diagnostic(const DnnSdpIterate& it) {
  std::ostringstream s;
  s << "iterate at iteration " << it.k << " (sigma " << it.sigma << ", tau " << it.tau
    << ", |X| " << it.x.norm() << ", |S| " << it.s.norm() << ", |Z| " << it.z.norm()
    << ", |y_E| " << it.y_e.norm() << ", |y_I| " << it.y_i.norm() << ")";
  return s.str();
}

}  // namespace

DnnSolveResult cadmm_solve(const DnnSdpProblem& prob, const SolverConfig& cfg,
                           const TuningPolicy& policy, const DnnSolveOptions& opts) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  DnnSolveResult out;
  DnnSdpIterate it = initial_iterate(prob, cfg);
  out.report = residuals(it, prob);
  std::vector<double> window;
  if (out.report.eta < cfg.tol) out.status = SolveStatus::Converged;
  while (out.status != SolveStatus::Converged && it.k < cfg.max_iters) {
    it = cadmm_step(it, prob, cfg, opts.variant, opts.fixed_tau);
    if (opts.variant == Variant::DirectExtended &&
        (!iterate_finite(it) || it.x.norm() > cfg.divergence_threshold)) {
      // the baseline carries no convergence guarantee; blow-up is an outcome
      out.status = SolveStatus::Diverged;
      out.message = "diverged: " + diagnostic(it);
      break;
    }
    if (!iterate_finite(it)) throw NumericalError("cadmm_solve: non-finite " + diagnostic(it));
    out.report = residuals(it, prob);
    out.tau_history.push_back(it.tau);
    out.eta_history.push_back(out.report.eta);
    if (opts.observer) opts.observer(it);
    if (out.report.eta < cfg.tol) {
      out.status = SolveStatus::Converged;
      break;
    }
    it.sigma = tune_sigma(out.report, it.sigma, it.k, policy, cfg.max_iters);
    if (opts.variant == Variant::Corrected && policy.restart) {
      window.push_back(out.report.eta);
      if (maybe_restart(window, it, policy, cfg.tau0)) {
        out.restarts.push_back(it.k);
        window.clear();
      }
    }
  }
  out.iterations = it.k;
  out.iterate = std::move(it);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

Vec flatten(const SymMat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

SymMat unflatten(const Vec& v, int n) { return Eigen::Map<const Mat>(v.data(), n, n); }

std::vector<Vec> flatten_blocks(const DnnSdpIterate& it, const DnnSdpProblem& prob, bool tilde) {
  std::vector<Vec> out;
  if (prob.has_ineq()) out.push_back(tilde ? it.y_i_t : it.y_i);
  out.push_back(flatten(tilde ? it.z_t : it.z));
  out.push_back(tilde ? it.y_e_t : it.y_e);
  out.push_back(flatten(tilde ? it.s_t : it.s));
  return out;
}

MultiBlockProblem to_multiblock(const DnnSdpProblem& problem) {
  auto prob = std::make_shared<const DnnSdpProblem>(problem);
  const int n = prob->n();
  const int nn = n * n;
  MultiBlockProblem mb;
  mb.c = flatten(prob->c());

  if (prob->has_ineq()) {
    BlockSpec b;
    b.name = "y_I";
    b.map.space_dim = nn;
    b.map.block_dim = prob->m_ineq();
    b.map.apply = [prob, n](const Vec& x) { return prob->ineq()->a.apply(unflatten(x, n)); };
    b.map.apply_adjoint = [prob](const Vec& y) { return flatten(prob->ineq()->a.adjoint(y)); };
    b.semiprox = SemiProx::scaled_identity(prob->lambda_ineq());
    b.prox = [prob](const Vec& p, double t) -> Vec {
      return project_nonneg(p + t * prob->ineq()->b);
    };
    mb.blocks.push_back(std::move(b));
  }
  {
    BlockSpec b;
    b.name = "Z";
    b.map = LinearBlockMap::identity(nn);
    b.subsolve = [prob, n](const Vec& x, const Vec& r, const Vec&, double sigma) -> Vec {
      const Vec point = (flatten(prob->shift()) - x) / sigma - r;
      return flatten(project_pattern_dual(unflatten(point, n), prob->pattern()));
    };
    b.einv = [](const Vec& v) { return v; };
    b.prox = [prob, n](const Vec& p, double t) -> Vec {
      return flatten(project_pattern_dual(unflatten(p, n) + t * prob->shift(), prob->pattern()));
    };
    mb.blocks.push_back(std::move(b));
  }
  {
    BlockSpec b;
    b.name = "y_E";
    b.map.space_dim = nn;
    b.map.block_dim = prob->m_eq();
    b.map.apply = [prob, n](const Vec& x) { return prob->a_eq().apply(unflatten(x, n)); };
    b.map.apply_adjoint = [prob](const Vec& y) { return flatten(prob->a_eq().adjoint(y)); };
    b.subsolve = [prob, n](const Vec& x, const Vec& r, const Vec&, double sigma) -> Vec {
      const Vec rhs = prob->b_eq() / sigma - prob->a_eq().apply(unflatten(x / sigma + r, n));
      return prob->gram_eq().solve(rhs);
    };
    b.einv = [prob](const Vec& v) { return prob->gram_eq().solve(v); };
    b.prox = [prob](const Vec& p, double t) -> Vec { return p + t * prob->b_eq(); };
    mb.blocks.push_back(std::move(b));
  }
  {
    BlockSpec b;
    b.name = "S";
    b.map = LinearBlockMap::identity(nn);
    b.subsolve = [n](const Vec& x, const Vec& r, const Vec&, double sigma) -> Vec {
      return flatten(project_psd(unflatten(-r - x / sigma, n)));
    };
    b.einv = [](const Vec& v) { return v; };
    b.prox = [n](const Vec& p, double) -> Vec { return flatten(project_psd(unflatten(p, n))); };
    mb.blocks.push_back(std::move(b));
  }
  return mb;
}

}  // namespace cadmm
