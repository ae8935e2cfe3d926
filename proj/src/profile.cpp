#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cadmm/io.hpp"

namespace cadmm {

namespace {

double cost(const RunRecord& r, ProfileMetric metric) {
  // Floors keep ratios finite when a run needs zero iterations or time.
  if (metric == ProfileMetric::Iterations) return std::max(1.0, static_cast<double>(r.iterations));
  return std::max(1e-9, r.seconds);
}

std::string join(const std::set<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

}  // namespace

Profile performance_profile(const std::vector<RunRecord>& records, ProfileMetric metric,
                            int grid_points) {
  if (records.empty()) throw std::invalid_argument("performance_profile: no records");
  if (grid_points < 2) throw std::invalid_argument("performance_profile: need >= 2 grid points");

  std::map<std::string, std::map<std::string, const RunRecord*>> by_solver;
  for (const auto& r : records) {
    auto& slot = by_solver[r.solver][r.problem];
    if (slot) {
      throw std::invalid_argument("performance_profile: duplicate record for solver '" +
                                  r.solver + "' on problem '" + r.problem + "'");
    }
    slot = &r;
  }

  std::set<std::string> all;
  for (const auto& [s, runs] : by_solver) {
    for (const auto& [p, r] : runs) all.insert(p);
  }
  std::ostringstream asym;
  for (const auto& [s, runs] : by_solver) {
    std::set<std::string> missing;
    for (const auto& p : all) {
      if (!runs.count(p)) missing.insert(p);
    }
    if (!missing.empty()) asym << " solver '" << s << "' lacks {" << join(missing) << "};";
  }
  if (!asym.str().empty()) {
    throw std::invalid_argument("performance_profile: mismatched problem sets:" + asym.str());
  }

  Profile prof;
  prof.metric = metric;
  prof.problems.assign(all.begin(), all.end());
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> best(prof.problems.size(), inf);
  for (std::size_t p = 0; p < prof.problems.size(); ++p) {
    for (const auto& [s, runs] : by_solver) {
      const RunRecord& r = *runs.at(prof.problems[p]);
      if (r.status == SolveStatus::Converged) best[p] = std::min(best[p], cost(r, metric));
    }
  }

  std::set<double> grid = {1.0};
  double max_ratio = 1.0;
  for (const auto& [s, runs] : by_solver) {
    std::vector<double> ratios;
    for (std::size_t p = 0; p < prof.problems.size(); ++p) {
      const RunRecord& r = *runs.at(prof.problems[p]);
      const double ratio = r.status == SolveStatus::Converged ? cost(r, metric) / best[p] : inf;
      ratios.push_back(ratio);
      if (std::isfinite(ratio)) {
        grid.insert(ratio);
        max_ratio = std::max(max_ratio, ratio);
      }
    }
    prof.ratios.push_back(std::move(ratios));
    prof.curves.push_back({s, {}, 0.0, 0.0});
  }
  const double log_max = std::log10(max_ratio);
  for (int g = 0; g < grid_points; ++g) {
    grid.insert(std::pow(10.0, log_max * g / (grid_points - 1)));
  }
  prof.x.assign(grid.begin(), grid.end());

  const double count = static_cast<double>(prof.problems.size());
  for (std::size_t s = 0; s < prof.curves.size(); ++s) {
    auto& curve = prof.curves[s];
    std::vector<double> sorted = prof.ratios[s];
    std::sort(sorted.begin(), sorted.end());
    for (double x : prof.x) {
      const auto solved = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
      curve.y.push_back(static_cast<double>(solved) / count);
    }
    curve.solved_fraction =
        std::count_if(sorted.begin(), sorted.end(), [](double v) { return std::isfinite(v); }) /
        count;
    for (std::size_t g = 0; g + 1 < prof.x.size(); ++g) {
      curve.area += curve.y[g] * (std::log10(prof.x[g + 1]) - std::log10(prof.x[g]));
    }
  }
  return prof;
}

void write_profile_csv(std::ostream& out, const Profile& profile) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "solver,x,y\n";
  for (const auto& curve : profile.curves) {
    for (std::size_t g = 0; g < profile.x.size(); ++g) {
      out << curve.solver << ',' << profile.x[g] << ',' << curve.y[g] << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace cadmm
