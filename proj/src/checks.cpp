#include "cadmm/checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cadmm/io.hpp"
#include "cadmm/problems.hpp"

namespace cadmm {

std::string tau_law_violation(std::span<const double> tau_history, std::span<const int> restarts,
                              double tau_bar, double tau0) {
  std::ostringstream err;
  auto restarted_before = [&](std::size_t k) {
    // iteration k + 1 follows a restart fired at the end of iteration k
    return std::find(restarts.begin(), restarts.end(), static_cast<int>(k)) != restarts.end();
  };
  for (std::size_t k = 0; k < tau_history.size(); ++k) {
    const double t = tau_history[k];
    if (!(t >= tau_bar && t <= tau0)) {
      err << "tau[" << k << "] = " << t << " outside [" << tau_bar << ", " << tau0 << "]";
      return err.str();
    }
    if (k == 0 || restarted_before(k)) continue;
    const double prev = tau_history[k - 1];
    if (t > prev) {
      err << "tau increased from " << prev << " to " << t << " at iteration " << k + 1;
      return err.str();
    }
    if (prev == tau_bar && t != tau_bar) {
      err << "tau left the floor at iteration " << k + 1;
      return err.str();
    }
  }
  return {};
}

std::string managed_block_violation(const DnnSdpIterate& it, const DnnSdpProblem& prob) {
  if (it.y_i.size() > 0 && it.y_i.minCoeff() < 0.0) return "y_I has a negative entry";
  if (it.z != project_pattern_dual(it.z, prob.pattern())) return "Z lies outside K*";
  Eigen::SelfAdjointEigenSolver<Mat> eig(it.s, Eigen::EigenvaluesOnly);
  const Vec& lam = eig.eigenvalues();
  if (lam.minCoeff() < -1e-10 * (1.0 + lam.cwiseAbs().maxCoeff())) {
    std::ostringstream d;
    d << "S has eigenvalue " << lam.minCoeff();
    return d.str();
  }
  return {};
}

double specialization_gap(const DnnSdpProblem& prob, SolverConfig cfg, int iterations) {
  cfg.max_iters = iterations;
  cfg.tol = 1e-300;

  std::vector<std::vector<Vec>> special;
  DnnSolveOptions opts;
  opts.observer = [&](const DnnSdpIterate& it) {
    std::vector<Vec> v = flatten_blocks(it, prob, false);
    for (Vec& t : flatten_blocks(it, prob, true)) v.push_back(std::move(t));
    v.push_back(flatten(it.x));
    special.push_back(std::move(v));
  };
  cadmm_solve(prob, cfg, TuningPolicy::disabled(), opts);

  std::vector<std::vector<Vec>> generic;
  auto observer = [&](const IterationTrace& tr) {
    std::vector<Vec> v = tr.after->z;
    for (const Vec& t : tr.after->z_tilde) v.push_back(t);
    v.push_back(tr.after->x);
    generic.push_back(std::move(v));
  };
  solve(to_multiblock(prob), cfg, [](const MultiBlockProblem&, const IterateState&) { return 1.0; },
        observer);

  double gap = 0.0;
  const std::size_t steps = std::min(special.size(), generic.size());
  if (special.size() != generic.size()) return std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t b = 0; b < special[k].size(); ++b) {
      const double diff = (special[k][b] - generic[k][b]).norm();
      gap = std::max(gap, diff / (1.0 + generic[k][b].norm()));
    }
  }
  return gap;
}

namespace {

CheckOutcome round_trip(const std::string& family, int size, std::uint64_t seed) {
  CheckOutcome out{"round trip " + family, false, {}};
  const DnnSdpProblem p = generate(family, size, seed);
  std::stringstream doc;
  write_problem(doc, p);
  out.passed = same_problem(p, read_problem(doc));
  if (!out.passed) out.detail = "re-read problem differs";
  return out;
}

CheckOutcome certified_solve(const std::string& family, int size, std::uint64_t seed,
                             std::vector<RunRecord>& records) {
  CheckOutcome out{"certified solve " + family, false, {}};
  const DnnSdpProblem p = generate(family, size, seed);
  SolverConfig cfg;
  cfg.max_iters = default_max_iters(p);
  std::string violation;
  DnnSolveOptions opts;
  opts.observer = [&](const DnnSdpIterate& it) {
    if (violation.empty()) {
      const std::string v = managed_block_violation(it, p);
      if (!v.empty()) violation = "iteration " + std::to_string(it.k) + ": " + v;
    }
  };
  const DnnSolveResult r = cadmm_solve(p, cfg, {}, opts);
  records.push_back(make_run_record(p, "cadmm", r));
  const std::string tau = tau_law_violation(r.tau_history, r.restarts, cfg.tau_bar, cfg.tau0);
  const double p_obj = r.report.primal_objective;
  const double gap = std::abs(p_obj - r.report.dual_objective);
  std::ostringstream d;
  d << "iterations " << r.iterations << ", eta " << r.report.eta << ", gap " << r.report.eta_g;
  if (r.status != SolveStatus::Converged) {
    d << "; not converged";
  } else if (!violation.empty()) {
    d << "; " << violation;
  } else if (!tau.empty()) {
    d << "; " << tau;
  } else if (gap > 10.0 * cfg.tol * (1.0 + std::abs(p_obj))) {
    d << "; duality gap " << gap << " too large";
  } else {
    out.passed = true;
  }
  out.detail = d.str();
  return out;
}

}  // namespace

std::vector<CheckOutcome> run_checks(std::uint64_t seed) {
  std::vector<CheckOutcome> out;
  const std::vector<std::pair<std::string, int>> small = {
      {"biq", 8}, {"extbiq", 6}, {"theta", 10}, {"rcp", 8}, {"fap", 8}, {"qap", 3}};
  for (const auto& [family, size] : small) out.push_back(round_trip(family, size, seed));

  std::vector<RunRecord> records;
  const std::vector<std::pair<std::string, int>> solves = {
      {"biq", 10}, {"theta", 12}, {"rcp", 10}, {"fap", 10}, {"extbiq", 6}};
  for (const auto& [family, size] : solves) {
    out.push_back(certified_solve(family, size, seed, records));
  }

  {
    CheckOutcome c{"generic engine equivalence extbiq", false, {}};
    const double gap = specialization_gap(generate("extbiq", 8, seed), SolverConfig{}, 100);
    c.passed = gap <= 1e-10;
    std::ostringstream d;
    d << "max relative difference " << gap;
    c.detail = d.str();
    out.push_back(c);
  }

  {
    CheckOutcome c{"performance profile", false, {}};
    std::vector<RunRecord> both = records;
    for (const auto& [family, size] : solves) {
      const DnnSdpProblem p = generate(family, size, seed);
      SolverConfig cfg;
      cfg.max_iters = default_max_iters(p);
      DnnSolveOptions opts;
      opts.variant = Variant::DirectExtended;
      both.push_back(make_run_record(p, "dext", cadmm_solve(p, cfg, {}, opts)));
    }
    const Profile prof = performance_profile(both, ProfileMetric::Iterations);
    c.passed = true;
    for (const auto& curve : prof.curves) {
      if (!std::is_sorted(curve.y.begin(), curve.y.end()) ||
          curve.y.back() != curve.solved_fraction) {
        c.passed = false;
        c.detail = "curve of " + curve.solver + " is malformed";
      }
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace cadmm
