#include "cadmm/engine.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

namespace cadmm {

LinearBlockMap LinearBlockMap::dense(Mat adjoint_matrix) {
  auto a = std::make_shared<const Mat>(std::move(adjoint_matrix));
  LinearBlockMap map;
  map.space_dim = static_cast<int>(a->rows());
  map.block_dim = static_cast<int>(a->cols());
  map.apply = [a](const Vec& x) -> Vec { return a->transpose() * x; };
  map.apply_adjoint = [a](const Vec& z) -> Vec { return *a * z; };
  return map;
}

LinearBlockMap LinearBlockMap::identity(int dim) {
  LinearBlockMap map;
  map.space_dim = dim;
  map.block_dim = dim;
  map.apply = [](const Vec& x) { return x; };
  map.apply_adjoint = [](const Vec& z) { return z; };
  return map;
}

Mat densify_adjoint(const LinearBlockMap& map) {
  Mat out(map.space_dim, map.block_dim);
  Vec e = Vec::Zero(map.block_dim);
  for (int j = 0; j < map.block_dim; ++j) {
    e[j] = 1.0;
    out.col(j) = map.apply_adjoint(e);
    e[j] = 0.0;
  }
  return out;
}

Mat dense_semiprox(const BlockSpec& block) {
  const int d = block.map.block_dim;
  if (block.semiprox.kind == SemiProx::Kind::Zero) return Mat::Zero(d, d);
  const Mat ad = densify_adjoint(block.map);
  return block.semiprox.rho * Mat::Identity(d, d) - ad.transpose() * ad;
}

namespace {

constexpr int kDenseProbeLimit = 500;

std::string block_label(const MultiBlockProblem& prob, int i) {
  std::ostringstream s;
  s << "block " << (i + 1);
  if (!prob.blocks[i].name.empty()) s << " (" << prob.blocks[i].name << ")";
  return s.str();
}

Vec gram_apply(const LinearBlockMap& map, const Vec& z) { return map.apply(map.apply_adjoint(z)); }

void check_positive_definite(const MultiBlockProblem& prob, int i) {
  const auto& block = prob.blocks[i];
  const int d = block.map.block_dim;
  if (d <= kDenseProbeLimit) {
    const Mat ad = densify_adjoint(block.map);
    const Mat e = ad.transpose() * ad + dense_semiprox(block);
    Eigen::SelfAdjointEigenSolver<Mat> eig(e, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 1e-12 * std::max(hi, 1.0))) {
      throw std::invalid_argument(block_label(prob, i) +
                                  ": T_i + A_i A_i^* is not positive definite");
    }
    return;
  }
  // Too large to densify: einv must invert E_i on a random probe.
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  Vec v(d);
  for (int t = 0; t < d; ++t) v[t] = gauss(rng);
  Vec ev = gram_apply(block.map, v);
  if (block.semiprox.kind == SemiProx::Kind::ScaledIdentity) {
    ev = block.semiprox.rho * v;
  }
  const Vec back = block.einv(ev);
  if (!((back - v).norm() <= 1e-8 * v.norm())) {
    throw std::invalid_argument(block_label(prob, i) +
                                ": einv does not invert T_i + A_i A_i^* on a probe vector");
  }
}

}  // namespace

void MultiBlockProblem::prepare() {
  const int p = num_blocks();
  if (p < 2) throw std::invalid_argument("MultiBlockProblem: need at least two blocks");
  if (c.size() == 0) throw std::invalid_argument("MultiBlockProblem: empty right-hand side");
  for (int i = 0; i < p; ++i) {
    auto& b = blocks[i];
    const std::string label = block_label(*this, i);
    if (!b.map.apply || !b.map.apply_adjoint) {
      throw std::invalid_argument(label + ": linear map not set");
    }
    if (b.map.space_dim != space_dim() || b.map.block_dim < 1) {
      throw std::invalid_argument(label + ": dimension mismatch with c");
    }
    if (b.semiprox.kind == SemiProx::Kind::ScaledIdentity) {
      if (!(b.semiprox.rho > 0.0)) throw std::invalid_argument(label + ": rho must be positive");
      const auto est = power_iteration([&b](const Vec& z) { return gram_apply(b.map, z); },
                                       b.map.block_dim, b.semiprox.rho);
      if (est.converged && est.raw > b.semiprox.rho * (1.0 + 1e-6)) {
        std::ostringstream msg;
        msg << label << ": rho = " << b.semiprox.rho << " is below lambda_max(A A^*) ~ "
            << est.raw;
        throw std::invalid_argument(msg.str());
      }
      if (!b.einv) {
        const double inv = 1.0 / b.semiprox.rho;
        b.einv = [inv](const Vec& v) -> Vec { return inv * v; };
      }
      if (!b.subsolve) {
        if (!b.prox) throw std::invalid_argument(label + ": needs a subsolve or a prox oracle");
        const double rho = b.semiprox.rho;
        const LinearBlockMap map = b.map;
        const ProxOracle prox = b.prox;
        // T = rho I - A A^* turns the quadratic into (sigma rho / 2)||z||^2 plus
        // linear terms, so the minimizer is one prox step at a shifted point.
        b.subsolve = [rho, map, prox](const Vec& x, const Vec& r, const Vec& center,
                                      double sigma) -> Vec {
          const Vec shifted = x / sigma + r + map.apply_adjoint(center);
          const Vec point = center - map.apply(shifted) / rho;
          return prox(point, 1.0 / (sigma * rho));
        };
      }
    } else if (!b.subsolve) {
      throw std::invalid_argument(label + ": Zero semi-proximal block needs a subsolve oracle");
    }
    const bool middle = i > 0 && i < p - 1;
    if (middle) {
      if (!b.einv) throw std::invalid_argument(label + ": middle block is missing einv");
      check_positive_definite(*this, i);
    }
  }
}

void SolverConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(what); };
  if (!(sigma > 0.0)) fail("SolverConfig: sigma must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("SolverConfig: alpha must lie in (0, 1)");
  if (!(tau_bar > 0.0 && tau_bar < 1.0)) fail("SolverConfig: tau_bar must lie in (0, 1)");
  if (!(eps > 0.0 && eps < 0.5)) fail("SolverConfig: eps must lie in (0, 1/2)");
  if (!(tau0 > 1.0 && tau0 < 2.0)) fail("SolverConfig: tau0 must lie in (1, 2)");
  if (!(tol > 0.0)) fail("SolverConfig: tol must be positive");
  if (max_iters < 0) fail("SolverConfig: max_iters must be nonnegative");
}

IterateState make_state(const MultiBlockProblem& prob, std::vector<Vec> z, Vec x, double tau) {
  if (static_cast<int>(z.size()) != prob.num_blocks()) {
    throw std::invalid_argument("make_state: wrong number of blocks");
  }
  IterateState s;
  s.z = std::move(z);
  s.z_tilde = s.z;
  s.adj_tilde.reserve(s.z.size());
  for (int i = 0; i < prob.num_blocks(); ++i) {
    s.adj_tilde.push_back(prob.blocks[i].map.apply_adjoint(s.z[i]));
  }
  s.x = std::move(x);
  s.tau = tau;
  return s;
}

IterateState initial_state(const MultiBlockProblem& prob, const SolverConfig& cfg) {
  std::vector<Vec> z;
  for (const auto& b : prob.blocks) z.push_back(Vec::Zero(b.map.block_dim));
  return make_state(prob, std::move(z), Vec::Zero(prob.space_dim()), cfg.tau0);
}

Prediction predict(const IterateState& state, const MultiBlockProblem& prob,
                   const SolverConfig& cfg) {
  const int p = prob.num_blocks();
  Prediction out;
  out.z.resize(p);
  out.adj.resize(p);
  Vec total = -prob.c;
  for (const auto& a : state.adj_tilde) total += a;
  for (int i = 0; i < p; ++i) {
    const Vec r = total - state.adj_tilde[i];
    try {
      out.z[i] = prob.blocks[i].subsolve(state.x, r, state.z_tilde[i], cfg.sigma);
    } catch (const std::exception& e) {
      throw std::runtime_error(block_label(prob, i) + ": subproblem failed: " + e.what());
    }
    if (!out.z[i].allFinite()) {
      throw NumericalError(block_label(prob, i) + ": non-finite subproblem solution at iteration " +
                           std::to_string(state.k));
    }
    out.adj[i] = prob.blocks[i].map.apply_adjoint(out.z[i]);
    total += out.adj[i] - state.adj_tilde[i];
    if (i == 0) out.f_pred = total;
  }
  out.f_full = std::move(total);
  return out;
}

double compute_delta(double f_pred_sq, double f_full_sq, double last_block_change_sq, double eps) {
  if (f_full_sq == 0.0) return std::numeric_limits<double>::infinity();
  return (f_pred_sq - eps * (f_full_sq + last_block_change_sq)) / f_full_sq;
}

double update_tau(double tau_prev, double delta, double tau_bar) {
  const double cand = 1.0 + delta;
  if (cand > tau_bar) return std::min(cand, tau_prev);
  return tau_bar;
}

Vec update_multiplier(const Vec& x, double tau, double sigma, const Vec& f_full) {
  return x + (tau * sigma) * f_full;
}

Correction correct(const IterateState& state, const Prediction& pred,
                   const MultiBlockProblem& prob, double alpha) {
  const int p = prob.num_blocks();
  Correction out{state.z_tilde, state.adj_tilde};
  out.z_tilde[p - 1] = pred.z[p - 1];
  out.adj_tilde[p - 1] = pred.adj[p - 1];
  out.z_tilde[0] = pred.z[0];
  out.adj_tilde[0] = pred.adj[0];
  // sum over j > i of A_j^*(z~_j^{k+1} - z~_j^k)
  Vec tail = pred.adj[p - 1] - state.adj_tilde[p - 1];
  for (int i = p - 2; i >= 1; --i) {
    const auto& b = prob.blocks[i];
    Vec step = alpha * (pred.z[i] - state.z_tilde[i]) - b.einv(b.map.apply(tail));
    out.z_tilde[i] = state.z_tilde[i] + step;
    out.adj_tilde[i] = b.map.apply_adjoint(out.z_tilde[i]);
    tail += out.adj_tilde[i] - state.adj_tilde[i];
  }
  return out;
}

KktReport kkt_residual(const MultiBlockProblem& prob, const std::vector<Vec>& z, const Vec& x) {
  KktReport rep;
  Vec f = -prob.c;
  for (int i = 0; i < prob.num_blocks(); ++i) f += prob.blocks[i].map.apply_adjoint(z[i]);
  rep.feasibility = f.norm();
  rep.value = rep.feasibility;
  for (int i = 0; i < prob.num_blocks(); ++i) {
    const auto& b = prob.blocks[i];
    if (!b.prox) {
      rep.block.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.skipped.push_back(i);
      continue;
    }
    const double r = (z[i] - b.prox(z[i] - b.map.apply(x), 1.0)).norm();
    rep.block.push_back(r);
    rep.value = std::max(rep.value, r);
  }
  return rep;
}

namespace {

ResidualMeasure default_measure() {
  return [](const MultiBlockProblem& prob, const IterateState& s) {
    const KktReport rep = kkt_residual(prob, s.z, s.x);
    return std::max(rep.feasibility / (1.0 + prob.c.norm()), rep.value);
  };
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool state_finite(const IterateState& s) {
  if (!s.x.allFinite()) return false;
  for (const auto& v : s.z) {
    if (!v.allFinite()) return false;
  }
  return true;
}

double state_norm(const IterateState& s) {
  double sq = s.x.squaredNorm();
  for (const auto& v : s.z) sq += v.squaredNorm();
  return std::sqrt(sq);
}

}  // namespace

SolveResult solve(MultiBlockProblem prob, const SolverConfig& cfg, const ResidualMeasure& measure,
                  const IterationObserver& observer) {
  cfg.validate();
  prob.prepare();
  const auto t0 = std::chrono::steady_clock::now();
  const ResidualMeasure resid = measure ? measure : default_measure();
  const int p = prob.num_blocks();

  SolveResult out;
  IterateState state = initial_state(prob, cfg);
  out.residual = resid(prob, state);
  if (out.residual < cfg.tol) {
    out.status = SolveStatus::Converged;
    out.state = std::move(state);
    out.seconds = seconds_since(t0);
    return out;
  }
  for (int k = 0; k < cfg.max_iters; ++k) {
    Prediction pred = predict(state, prob, cfg);
    const double change_sq = (pred.adj[p - 1] - state.adj_tilde[p - 1]).squaredNorm();
    const double delta =
        compute_delta(pred.f_pred.squaredNorm(), pred.f_full.squaredNorm(), change_sq, cfg.eps);
    // the adaptive law applies from the second iteration on
    const double tau = k == 0 ? cfg.tau0 : update_tau(state.tau, delta, cfg.tau_bar);

    IterateState next;
    next.x = update_multiplier(state.x, tau, cfg.sigma, pred.f_full);
    Correction corr = correct(state, pred, prob, cfg.alpha);
    next.z = pred.z;
    next.z_tilde = std::move(corr.z_tilde);
    next.adj_tilde = std::move(corr.adj_tilde);
    next.tau = tau;
    next.k = k + 1;
    if (!state_finite(next)) {
      throw NumericalError("solve: non-finite iterate at iteration " + std::to_string(k + 1));
    }
    if (observer) observer(IterationTrace{k, &state, &pred, &next, delta});
    state = std::move(next);
    out.iterations = k + 1;
    out.residual = resid(prob, state);
    if (cfg.record_history) {
      out.tau_history.push_back(tau);
      out.residual_history.push_back(out.residual);
    }
    if (out.residual < cfg.tol) {
      out.status = SolveStatus::Converged;
      break;
    }
  }
  out.state = std::move(state);
  out.seconds = seconds_since(t0);
  return out;
}

SolveResult solve_direct_extended(MultiBlockProblem prob, const SolverConfig& cfg, double tau,
                                  const ResidualMeasure& measure) {
  cfg.validate();
  if (!(tau > 0.0)) throw std::invalid_argument("solve_direct_extended: tau must be positive");
  prob.prepare();
  const auto t0 = std::chrono::steady_clock::now();
  const ResidualMeasure resid = measure ? measure : default_measure();

  SolveResult out;
  IterateState state = initial_state(prob, cfg);
  state.tau = tau;
  out.residual = resid(prob, state);
  if (out.residual < cfg.tol) {
    out.status = SolveStatus::Converged;
    out.state = std::move(state);
    out.seconds = seconds_since(t0);
    return out;
  }
  for (int k = 0; k < cfg.max_iters; ++k) {
    Prediction pred;
    try {
      pred = predict(state, prob, cfg);
    } catch (const NumericalError& e) {
      out.status = SolveStatus::Diverged;
      out.message = e.what();
      break;
    }
    state.x = update_multiplier(state.x, tau, cfg.sigma, pred.f_full);
    state.z = pred.z;
    state.z_tilde = std::move(pred.z);
    state.adj_tilde = std::move(pred.adj);
    state.k = k + 1;
    out.iterations = k + 1;
    if (!state_finite(state) || state_norm(state) > cfg.divergence_threshold) {
      out.status = SolveStatus::Diverged;
      out.message = "iterate norm exceeded the divergence threshold at iteration " +
                    std::to_string(k + 1);
      break;
    }
    out.residual = resid(prob, state);
    if (cfg.record_history) {
      out.tau_history.push_back(tau);
      out.residual_history.push_back(out.residual);
    }
    if (out.residual < cfg.tol) {
      out.status = SolveStatus::Converged;
      break;
    }
  }
  out.state = std::move(state);
  out.seconds = seconds_since(t0);
  return out;
}

TheoryOperators build_theory_operators(MultiBlockProblem prob, double alpha) {
  prob.prepare();
  const int p = prob.num_blocks();
  TheoryOperators ops;
  int total = 0;
  for (int i = 1; i < p; ++i) {
    ops.offsets.push_back(total);
    total += prob.blocks[i].map.block_dim;
  }
  if (total > kDenseProbeLimit) {
    throw std::invalid_argument("build_theory_operators: stacked dimension " +
                                std::to_string(total) + " exceeds 500");
  }
  std::vector<Mat> ad(p);
  std::vector<Mat> e(p);
  std::vector<Mat> e_inv(p);
  for (int i = 1; i < p; ++i) {
    ad[i] = densify_adjoint(prob.blocks[i].map);
    e[i] = ad[i].transpose() * ad[i] + dense_semiprox(prob.blocks[i]);
    e_inv[i] = e[i].ldlt().solve(Mat::Identity(e[i].rows(), e[i].cols()));
  }
  ops.m = Mat::Zero(total, total);
  ops.h = Mat::Zero(total, total);
  for (int i = 1; i < p; ++i) {
    const int oi = ops.offsets[i - 1];
    const int di = prob.blocks[i].map.block_dim;
    ops.m.block(oi, oi, di, di) = e[i];
    ops.h.block(oi, oi, di, di) = (i == p - 1 ? alpha : 1.0) * Mat::Identity(di, di);
    for (int j = 1; j < p; ++j) {
      if (j == i) continue;
      const int oj = ops.offsets[j - 1];
      const int dj = prob.blocks[j].map.block_dim;
      const Mat cross = ad[i].transpose() * ad[j];  // A_i A_j^*
      if (j < i) {
        ops.m.block(oi, oj, di, dj) = cross;
      } else {
        ops.h.block(oi, oj, di, dj) = e_inv[i] * cross;
      }
    }
  }
  ops.g = ops.m * ops.h;
  return ops;
}

BlockSpec dense_quadratic_block(std::string name, Mat q_mat, Vec q_vec, Mat adjoint_matrix,
                                SemiProx semiprox) {
  BlockSpec b;
  b.name = std::move(name);
  b.semiprox = semiprox;
  const int d = static_cast<int>(adjoint_matrix.cols());
  if (q_mat.rows() != d || q_mat.cols() != d || q_vec.size() != d) {
    throw std::invalid_argument("dense_quadratic_block: Q and q must match the block dimension");
  }
  const Mat aat = adjoint_matrix.transpose() * adjoint_matrix;
  const Mat t = semiprox.kind == SemiProx::Kind::Zero
                    ? Mat::Zero(d, d)
                    : Mat(semiprox.rho * Mat::Identity(d, d) - aat);
  b.map = LinearBlockMap::dense(adjoint_matrix);
  auto a = std::make_shared<const Mat>(std::move(adjoint_matrix));
  auto q = std::make_shared<const Mat>(std::move(q_mat));
  auto lin = std::make_shared<const Vec>(std::move(q_vec));
  auto tm = std::make_shared<const Mat>(t);
  auto e = std::make_shared<const Mat>(aat + t);

  b.subsolve = [a, q, lin, tm, e](const Vec& x, const Vec& r, const Vec& center,
                                  double sigma) -> Vec {
    const Mat lhs = *q + sigma * *e;
    const Vec rhs = -*lin - a->transpose() * x - sigma * (a->transpose() * r) +
                    sigma * (*tm * center);
    return lhs.ldlt().solve(rhs);
  };
  b.prox = [q, lin](const Vec& point, double step) -> Vec {
    const Mat lhs = Mat::Identity(q->rows(), q->cols()) + step * *q;
    return lhs.ldlt().solve(point - step * *lin);
  };
  Eigen::LLT<Mat> llt(*e);
  if (llt.info() == Eigen::Success) {
    auto fact = std::make_shared<const Eigen::LLT<Mat>>(std::move(llt));
    b.einv = [fact](const Vec& v) -> Vec { return fact->solve(v); };
  }
  return b;
}

}  // namespace cadmm
