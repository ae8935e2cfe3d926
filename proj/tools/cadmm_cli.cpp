// Command-line driver: solve, bench, check, generate.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "cadmm/checks.hpp"
#include "cadmm/io.hpp"
#include "cadmm/problems.hpp"

namespace fs = std::filesystem;
using namespace cadmm;

namespace {

constexpr int kExitError = 1;

int exit_code(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged:
      return 0;
    case SolveStatus::MaxIters:
      return 2;
    case SolveStatus::Diverged:
      return 3;
    default:
      return kExitError;
  }
}

struct SolveOptions {
  std::string solver = "cadmm";
  double dext_tau = 1.618;
  SolverConfig cfg;
  std::optional<int> max_iters;
  TuningPolicy policy;
  bool no_tune = false;
  bool no_restart = false;
};

void add_solve_options(CLI::App& app, SolveOptions& o) {
  app.add_option("--solver", o.solver, "cadmm or dext")
      ->check(CLI::IsMember({"cadmm", "dext"}))
      ->capture_default_str();
  app.add_option("--tau", o.dext_tau, "fixed step of the dext baseline")->capture_default_str();
  app.add_option("--sigma", o.cfg.sigma, "initial penalty")->capture_default_str();
  app.add_option("--alpha", o.cfg.alpha, "correction step in (0, 1)")->capture_default_str();
  app.add_option("--tau0", o.cfg.tau0, "initial step size")->capture_default_str();
  app.add_option("--tau-bar", o.cfg.tau_bar, "step-size floor")->capture_default_str();
  app.add_option("--eps", o.cfg.eps, "infeasibility weight in (0, 1)")->capture_default_str();
  app.add_option("--tol", o.cfg.tol, "stopping tolerance on eta")->capture_default_str();
  app.add_option("--max-iters", o.max_iters,
                 "iteration cap (default 20000 for 3 blocks, 40000 for 4)");
  app.add_flag("--no-tune-sigma", o.no_tune, "keep sigma fixed");
  app.add_flag("--no-restart", o.no_restart, "disable restarts");
  app.add_option("--check-period", o.policy.check_period)->capture_default_str();
  app.add_option("--balance-ratio", o.policy.balance_ratio)->capture_default_str();
  app.add_option("--sigma-factor", o.policy.sigma_factor)->capture_default_str();
  app.add_option("--sigma-min", o.policy.sigma_min)->capture_default_str();
  app.add_option("--sigma-max", o.policy.sigma_max)->capture_default_str();
  app.add_option("--freeze-after", o.policy.freeze_after, "default 0.75 * max iterations");
  app.add_option("--restart-window", o.policy.restart_stall_window)->capture_default_str();
  app.add_option("--restart-threshold", o.policy.restart_decrease_threshold)
      ->capture_default_str();
}

RunRecord run_one(const DnnSdpProblem& prob, const SolveOptions& o) {
  SolverConfig cfg = o.cfg;
  cfg.max_iters = o.max_iters.value_or(default_max_iters(prob));
  TuningPolicy policy = o.policy;
  policy.tune_sigma = !o.no_tune;
  policy.restart = !o.no_restart;
  DnnSolveOptions opts;
  if (o.solver == "dext") {
    opts.variant = Variant::DirectExtended;
    opts.fixed_tau = o.dext_tau;
  }
  nlohmann::json config = config_json(cfg, policy);
  config["solver"] = o.solver;
  if (o.solver == "dext") config["tau"] = o.dext_tau;
  try {
    return make_run_record(prob, o.solver, cadmm_solve(prob, cfg, policy, opts), config);
  } catch (const NumericalError& e) {
    RunRecord r = make_error_record(prob.info().name, prob.info().family, o.solver, e.what());
    r.config = config;
    return r;
  }
}

DnnSdpProblem load(const std::string& problem_path, const std::string& generate_spec) {
  if (!generate_spec.empty()) {
    const GenerateSpec g = parse_generate_spec(generate_spec);
    return generate(g.family, g.size, g.seed);
  }
  return read_problem(problem_path);
}

struct ManifestEntry {
  std::string label;
  std::string path;
  std::string spec;
};

// One entry per line: FAMILY:SIZE:SEED, or a problem file path relative to
// the manifest. '#' starts a comment.
std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest '" + path + "'");
  std::vector<ManifestEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream s(line);
    std::string item;
    if (!(s >> item)) continue;
    std::string extra;
    if (s >> extra) {
      throw std::runtime_error("manifest line " + std::to_string(line_no) + ": unexpected '" +
                               extra + "'");
    }
    if (std::count(item.begin(), item.end(), ':') == 2 && !fs::exists(item)) {
      parse_generate_spec(item);
      out.push_back({item, {}, item});
    } else {
      fs::path p(item);
      if (p.is_relative()) p = fs::path(path).parent_path() / p;
      out.push_back({item, p.string(), {}});
    }
  }
  if (out.empty()) throw std::runtime_error("manifest '" + path + "' lists no problems");
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_solve(const std::string& problem_path, const std::string& generate_spec,
              const std::string& out_path, const std::string& write_path, const SolveOptions& o) {
  const DnnSdpProblem prob = load(problem_path, generate_spec);
  if (!write_path.empty()) write_problem(write_path, prob);
  const RunRecord r = run_one(prob, o);
  std::cout << summary_line(r) << '\n';
  if (r.status == SolveStatus::Error) std::cerr << "error: " << r.message << '\n';
  if (!out_path.empty()) write_result(out_path, r);
  return exit_code(r.status);
}

int cmd_bench(const std::string& manifest, const std::string& solvers_csv,
              const std::string& out_dir, int jobs, const SolveOptions& base) {
  const auto entries = read_manifest(manifest);
  const auto solvers = split_csv(solvers_csv);
  if (solvers.empty()) throw std::runtime_error("--solvers lists no solver");
  for (const auto& s : solvers) {
    if (s != "cadmm" && s != "dext") throw std::runtime_error("unknown solver '" + s + "'");
  }
  std::vector<std::optional<DnnSdpProblem>> problems(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    problems[i] = load(entries[i].path, entries[i].spec);
  }

  const std::size_t total = entries.size() * solvers.size();
  std::vector<RunRecord> records(total);
  std::atomic<std::size_t> next{0};
  std::mutex print;
  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      SolveOptions o = base;
      o.solver = solvers[job % solvers.size()];
      records[job] = run_one(*problems[job / solvers.size()], o);
      std::lock_guard<std::mutex> lock(print);
      std::cout << summary_line(records[job]) << std::endl;
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, jobs); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "records.jsonl");
    if (!out) throw std::runtime_error("cannot write records in '" + out_dir + "'");
    for (const auto& r : records) out << to_json(r).dump() << '\n';
  }
  for (auto [metric, name] : {std::pair{ProfileMetric::Iterations, "iterations"},
                              std::pair{ProfileMetric::Time, "time"}}) {
    const Profile prof = performance_profile(records, metric);
    std::ofstream out(fs::path(out_dir) / (std::string("profile_") + name + ".csv"));
    if (!out) throw std::runtime_error("cannot write profile in '" + out_dir + "'");
    write_profile_csv(out, prof);
    for (const auto& c : prof.curves) {
      std::cout << "profile " << name << ' ' << c.solver << ": solved " << c.solved_fraction
                << ", area " << c.area << '\n';
    }
  }
  return 0;
}

int cmd_check(std::uint64_t seed) {
  bool ok = true;
  for (const auto& c : run_checks(seed)) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << '\n';
    ok = ok && c.passed;
  }
  return ok ? 0 : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corrected semi-proximal ADMM for doubly nonnegative SDPs"};
  app.require_subcommand(1);

  std::string problem_path, generate_spec, out_path, write_path;
  SolveOptions solve_opts;
  auto* solve = app.add_subcommand("solve", "solve one problem");
  auto* src = solve->add_option("--problem", problem_path, "problem document");
  auto* gen = solve->add_option("--generate", generate_spec, "FAMILY:SIZE:SEED");
  src->excludes(gen);
  solve->add_option("--out", out_path, "result record (JSON)");
  solve->add_option("--write-problem", write_path, "also save the problem document");
  add_solve_options(*solve, solve_opts);

  std::string manifest, solvers = "cadmm,dext", bench_out = "bench_out";
  int jobs = 1;
  SolveOptions bench_opts;
  auto* bench = app.add_subcommand("bench", "run a solver matrix over a manifest");
  bench->add_option("--manifest", manifest, "one FAMILY:SIZE:SEED or path per line")->required();
  bench->add_option("--solvers", solvers, "comma-separated list")->capture_default_str();
  bench->add_option("--out", bench_out, "output directory")->capture_default_str();
  bench->add_option("--jobs", jobs, "concurrent solves")->capture_default_str();
  add_solve_options(*bench, bench_opts);

  std::uint64_t seed = 1;
  auto* check = app.add_subcommand("check", "invariant checks on seeded instances");
  check->add_option("--seed", seed)->capture_default_str();

  std::string gen_spec, gen_out;
  auto* make = app.add_subcommand("generate", "write a generated problem document");
  make->add_option("spec", gen_spec, "FAMILY:SIZE:SEED")->required();
  make->add_option("--out", gen_out, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (*solve) {
      if (problem_path.empty() && generate_spec.empty()) {
        std::cerr << "solve: one of --problem or --generate is required\n" << solve->help();
        return kExitError;
      }
      return cmd_solve(problem_path, generate_spec, out_path, write_path, solve_opts);
    }
    if (*bench) return cmd_bench(manifest, solvers, bench_out, jobs, bench_opts);
    if (*check) return cmd_check(seed);
    if (*make) {
      const GenerateSpec g = parse_generate_spec(gen_spec);
      write_problem(gen_out, generate(g.family, g.size, g.seed));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
