#ifndef CADMM_IO_HPP_
#define CADMM_IO_HPP_

// Problem documents, run records and performance profiles.
//
// Problem document (text, one item per line, '#' starts a comment line):
//
//   cadmm-problem 1
//   name <rest of line>
//   family <rest of line>
//   objective_scale <x>
//   objective_offset <x>
//   n <n>
//   C <nnz>            followed by nnz lines "i j v", 0-based, i <= j
//   M <nnz>            same layout
//   pattern <runs>     followed by runs lines "<Z|N|F> <count>" over the
//                      upper triangle in row-major order
//   eq <m>             followed by m constraint blocks
//   ineq <m>           0 when there is no inequality block
//   end
//
// A constraint block is "row <nnz> <b>" and nnz lines "i j v" with the
// SparseSymList convention (v sits at (i, j) and (j, i)). Numbers are written
// with 17 significant digits so the document round-trips exactly.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "cadmm/dnnsdp.hpp"

namespace cadmm {

void write_problem(std::ostream& out, const DnnSdpProblem& prob);
void write_problem(const std::string& path, const DnnSdpProblem& prob);

/// Throws std::runtime_error naming the line of a malformed field, or the
/// violated invariant for data the problem constructor rejects.
DnnSdpProblem read_problem(std::istream& in);
DnnSdpProblem read_problem(const std::string& path);

/// Field-by-field equality of the data model (bitwise on numbers).
bool same_problem(const DnnSdpProblem& a, const DnnSdpProblem& b);

struct RunRecord {
  std::string problem;
  std::string family;
  std::string solver;
  SolveStatus status = SolveStatus::Error;
  int iterations = 0;
  std::vector<std::pair<std::string, double>> components;
  double eta = 0.0;
  double eta_g = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double objective = 0.0;  // source-problem objective at X
  double tau = 0.0;
  double sigma = 0.0;
  int restarts = 0;
  double seconds = 0.0;
  std::string message;
  nlohmann::json config = nlohmann::json::object();

  bool operator==(const RunRecord&) const = default;
};

RunRecord make_run_record(const DnnSdpProblem& prob, const std::string& solver,
                          const DnnSolveResult& result, nlohmann::json config = {});

/// Record for a solve that threw before producing a result.
RunRecord make_error_record(const std::string& problem, const std::string& family,
                            const std::string& solver, const std::string& message);

nlohmann::json to_json(const RunRecord& r);
RunRecord run_record_from_json(const nlohmann::json& j);

/// Writes the record as a JSON document. Throws std::runtime_error if the
/// path cannot be written.
void write_result(const std::string& path, const RunRecord& r);
RunRecord read_result(const std::string& path);

/// "iter | eta | gap | tau | time" in the style of a results table row.
std::string summary_line(const RunRecord& r);

nlohmann::json config_json(const SolverConfig& cfg, const TuningPolicy& policy);

enum class ProfileMetric { Iterations, Time };

struct ProfileCurve {
  std::string solver;
  std::vector<double> y;  // on Profile::x
  double solved_fraction = 0.0;
  double area = 0.0;  // integral of y over log10 x on the grid range
};

struct Profile {
  ProfileMetric metric = ProfileMetric::Iterations;
  std::vector<double> x;
  std::vector<std::string> problems;
  std::vector<ProfileCurve> curves;
  /// ratio[s][p] of solver s on problem p to the best solver; +inf if unsolved.
  std::vector<std::vector<double>> ratios;
};

/// Performance profile over the problems covered by the records. A problem
/// counts as solved when its status is Converged. The grid holds every
/// distinct finite ratio plus `grid_points` log-spaced points between 1 and
/// the largest finite ratio. Throws std::invalid_argument when solvers cover
/// different problem sets or a (solver, problem) pair repeats.
Profile performance_profile(const std::vector<RunRecord>& records, ProfileMetric metric,
                            int grid_points = 50);

/// CSV with header "solver,x,y".
void write_profile_csv(std::ostream& out, const Profile& profile);

}  // namespace cadmm

#endif  // CADMM_IO_HPP_
