#include "cadmm/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace cadmm {

namespace {

constexpr const char* kMagic = "cadmm-problem";
constexpr int kVersion = 1;

char kind_char(EntryKind k) {
  switch (k) {
    case EntryKind::Zero:
      return 'Z';
    case EntryKind::NonNeg:
      return 'N';
    default:
      return 'F';
  }
}

void write_upper(std::ostream& out, const char* tag, const SymMat& m) {
  std::vector<SymEntry> entries;
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = i; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) entries.push_back({i, j, m(i, j)});
    }
  }
  out << tag << ' ' << entries.size() << '\n';
  for (const auto& e : entries) out << e.row << ' ' << e.col << ' ' << e.value << '\n';
}

void write_rows(std::ostream& out, const char* tag, const SparseSymList& a, const Vec& b) {
  out << tag << ' ' << a.size() << '\n';
  for (int k = 0; k < a.size(); ++k) {
    const auto& entries = a.matrix(k);
    out << "row " << entries.size() << ' ' << b[k] << '\n';
    for (const auto& e : entries) out << e.row << ' ' << e.col << ' ' << e.value << '\n';
  }
}

// Line-oriented reader: skips blank and '#' lines, tracks line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next(const char* expecting) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      if (line.back() == '\r') line.pop_back();
      return std::istringstream(line);
    }
    ++line_no_;
    fail(std::string("unexpected end of file, expected ") + expecting);
  }

  /// Reads "<key> <value>" and returns the value stream.
  std::istringstream keyed(const std::string& key) {
    auto s = next(key.c_str());
    std::string got;
    s >> got;
    if (got != key) fail("expected '" + key + "', found '" + got + "'");
    return s;
  }

  template <typename T>
  T value(std::istringstream& s, const char* what) {
    T v{};
    if (!(s >> v)) fail(std::string("cannot parse ") + what);
    return v;
  }

  void no_trailing(std::istringstream& s) {
    std::string extra;
    if (s >> extra) fail("unexpected trailing text '" + extra + "'");
  }

  std::string rest(std::istringstream& s) {
    std::string r;
    std::getline(s >> std::ws, r);
    return r;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error("problem file line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

template <typename T>
T keyed_value(LineReader& r, const std::string& key) {
  auto s = r.keyed(key);
  T v = r.value<T>(s, key.c_str());
  r.no_trailing(s);
  return v;
}

SymEntry read_entry(LineReader& r, int n) {
  auto s = r.next("an entry 'i j v'");
  SymEntry e{};
  e.row = r.value<int>(s, "row index");
  e.col = r.value<int>(s, "column index");
  e.value = r.value<double>(s, "entry value");
  r.no_trailing(s);
  if (e.row < 0 || e.col < 0 || e.row >= n || e.col >= n) r.fail("entry index out of range");
  return e;
}

SymMat read_upper(LineReader& r, const std::string& tag, int n) {
  const int nnz = keyed_value<int>(r, tag);
  if (nnz < 0) r.fail("negative entry count");
  SymMat m = SymMat::Zero(n, n);
  for (int k = 0; k < nnz; ++k) {
    const SymEntry e = read_entry(r, n);
    if (e.row > e.col) r.fail("entries must satisfy i <= j");
    m(e.row, e.col) = e.value;
    m(e.col, e.row) = e.value;
  }
  return m;
}

std::pair<SparseSymList, Vec> read_rows(LineReader& r, const std::string& tag, int n) {
  const int m = keyed_value<int>(r, tag);
  if (m < 0) r.fail("negative row count");
  SparseSymList a(n);
  Vec b(m);
  for (int k = 0; k < m; ++k) {
    auto s = r.keyed("row");
    const int nnz = r.value<int>(s, "row entry count");
    b[k] = r.value<double>(s, "right-hand side");
    r.no_trailing(s);
    if (nnz < 0) r.fail("negative entry count");
    std::vector<SymEntry> entries;
    for (int e = 0; e < nnz; ++e) entries.push_back(read_entry(r, n));
    try {
      a.add(std::move(entries));
    } catch (const std::invalid_argument& ex) {
      r.fail(ex.what());
    }
  }
  return {std::move(a), std::move(b)};
}

}  // namespace

void write_problem(std::ostream& out, const DnnSdpProblem& prob) {
  const auto old_precision = out.precision(17);
  out << kMagic << ' ' << kVersion << '\n';
  out << "name " << prob.info().name << '\n';
  out << "family " << prob.info().family << '\n';
  out << "objective_scale " << prob.info().objective_scale << '\n';
  out << "objective_offset " << prob.info().objective_offset << '\n';
  out << "n " << prob.n() << '\n';
  write_upper(out, "C", prob.c());
  write_upper(out, "M", prob.shift());

  const auto& kinds = prob.pattern().packed();
  std::vector<std::pair<char, std::size_t>> runs;
  for (EntryKind k : kinds) {
    if (!runs.empty() && runs.back().first == kind_char(k)) {
      ++runs.back().second;
    } else {
      runs.emplace_back(kind_char(k), 1);
    }
  }
  out << "pattern " << runs.size() << '\n';
  for (const auto& [c, count] : runs) out << c << ' ' << count << '\n';

  write_rows(out, "eq", prob.a_eq(), prob.b_eq());
  if (prob.has_ineq()) {
    write_rows(out, "ineq", prob.ineq()->a, prob.ineq()->b);
  } else {
    out << "ineq 0\n";
  }
  out << "end\n";
  out.precision(old_precision);
}

void write_problem(const std::string& path, const DnnSdpProblem& prob) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_problem(out, prob);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

DnnSdpProblem read_problem(std::istream& in) {
  LineReader r(in);
  {
    auto s = r.keyed(kMagic);
    if (r.value<int>(s, "format version") != kVersion) r.fail("unsupported format version");
    r.no_trailing(s);
  }
  ProblemInfo info;
  {
    auto s = r.keyed("name");
    info.name = r.rest(s);
  }
  {
    auto s = r.keyed("family");
    info.family = r.rest(s);
  }
  info.objective_scale = keyed_value<double>(r, "objective_scale");
  info.objective_offset = keyed_value<double>(r, "objective_offset");
  const int n = keyed_value<int>(r, "n");
  if (n < 1) r.fail("n must be positive");
  SymMat c = read_upper(r, "C", n);
  SymMat m = read_upper(r, "M", n);

  const int runs = keyed_value<int>(r, "pattern");
  if (runs < 0) r.fail("negative run count");
  std::vector<EntryKind> kinds;
  const std::size_t expected = static_cast<std::size_t>(n) * (n + 1) / 2;
  for (int k = 0; k < runs; ++k) {
    auto s = r.next("a pattern run");
    const std::string kind = r.value<std::string>(s, "entry kind");
    const long long count = r.value<long long>(s, "run length");
    r.no_trailing(s);
    EntryKind ek;
    if (kind == "Z") {
      ek = EntryKind::Zero;
    } else if (kind == "N") {
      ek = EntryKind::NonNeg;
    } else if (kind == "F") {
      ek = EntryKind::Free;
    } else {
      r.fail("entry kind must be Z, N or F");
    }
    if (count < 1 || kinds.size() + count > expected) r.fail("pattern run length out of range");
    kinds.insert(kinds.end(), static_cast<std::size_t>(count), ek);
  }
  if (kinds.size() != expected) r.fail("pattern covers fewer entries than the upper triangle");

  auto [a_eq, b_eq] = read_rows(r, "eq", n);
  auto [a_in, b_in] = read_rows(r, "ineq", n);
  {
    auto s = r.next("'end'");
    if (r.value<std::string>(s, "end marker") != "end") r.fail("expected 'end'");
  }
  std::optional<InequalityBlock> ineq;
  if (!a_in.empty()) ineq = InequalityBlock{std::move(a_in), std::move(b_in)};
  try {
    return DnnSdpProblem(std::move(c), std::move(a_eq), std::move(b_eq), std::move(ineq),
                         std::move(m), ConePattern::from_packed(n, std::move(kinds)),
                         std::move(info));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("invalid problem: ") + e.what());
  }
}

DnnSdpProblem read_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_problem(in);
}

namespace {

bool same_rows(const SparseSymList& a, const SparseSymList& b) {
  if (a.dim() != b.dim() || a.size() != b.size()) return false;
  for (int k = 0; k < a.size(); ++k) {
    const auto& x = a.matrix(k);
    const auto& y = b.matrix(k);
    if (x.size() != y.size()) return false;
    for (std::size_t e = 0; e < x.size(); ++e) {
      if (x[e].row != y[e].row || x[e].col != y[e].col || x[e].value != y[e].value) return false;
    }
  }
  return true;
}

}  // namespace

bool same_problem(const DnnSdpProblem& a, const DnnSdpProblem& b) {
  if (a.n() != b.n() || a.has_ineq() != b.has_ineq()) return false;
  const auto& ia = a.info();
  const auto& ib = b.info();
  if (ia.name != ib.name || ia.family != ib.family || ia.objective_scale != ib.objective_scale ||
      ia.objective_offset != ib.objective_offset) {
    return false;
  }
  if (a.c() != b.c() || a.shift() != b.shift() || !(a.pattern() == b.pattern())) return false;
  if (!same_rows(a.a_eq(), b.a_eq()) || a.b_eq() != b.b_eq()) return false;
  if (a.has_ineq()) {
    if (!same_rows(a.ineq()->a, b.ineq()->a) || a.ineq()->b != b.ineq()->b) return false;
  }
  return true;
}

RunRecord make_run_record(const DnnSdpProblem& prob, const std::string& solver,
                          const DnnSolveResult& result, nlohmann::json config) {
  RunRecord r;
  r.problem = prob.info().name;
  r.family = prob.info().family;
  r.solver = solver;
  r.status = result.status;
  r.iterations = result.iterations;
  r.components = result.report.components();
  r.eta = result.report.eta;
  r.eta_g = result.report.eta_g;
  r.primal_objective = result.report.primal_objective;
  r.dual_objective = result.report.dual_objective;
  r.objective = prob.objective(result.iterate.x);
  r.tau = result.iterate.tau;
  r.sigma = result.iterate.sigma;
  r.restarts = static_cast<int>(result.restarts.size());
  r.seconds = result.seconds;
  r.message = result.message;
  r.config = config.is_null() ? nlohmann::json::object() : std::move(config);
  return r;
}

RunRecord make_error_record(const std::string& problem, const std::string& family,
                            const std::string& solver, const std::string& message) {
  RunRecord r;
  r.problem = problem;
  r.family = family;
  r.solver = solver;
  r.status = SolveStatus::Error;
  r.message = message;
  return r;
}

nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json eta = nlohmann::json::object();
  for (const auto& [name, v] : r.components) eta[name] = v;
  nlohmann::json order = nlohmann::json::array();
  for (const auto& [name, v] : r.components) order.push_back(name);
  return {{"problem", r.problem},
          {"family", r.family},
          {"solver", r.solver},
          {"status", std::string(to_string(r.status))},
          {"iterations", r.iterations},
          {"eta", r.eta},
          {"eta_components", eta},
          {"eta_order", order},
          {"eta_g", r.eta_g},
          {"primal_objective", r.primal_objective},
          {"dual_objective", r.dual_objective},
          {"objective", r.objective},
          {"tau", r.tau},
          {"sigma", r.sigma},
          {"restarts", r.restarts},
          {"seconds", r.seconds},
          {"message", r.message},
          {"config", r.config}};
}

RunRecord run_record_from_json(const nlohmann::json& j) {
  try {
    RunRecord r;
    r.problem = j.at("problem").get<std::string>();
    r.family = j.at("family").get<std::string>();
    r.solver = j.at("solver").get<std::string>();
    const auto status = parse_status(j.at("status").get<std::string>());
    if (!status) throw std::runtime_error("unknown status '" + j.at("status").dump() + "'");
    r.status = *status;
    r.iterations = j.at("iterations").get<int>();
    r.eta = j.at("eta").get<double>();
    for (const auto& name : j.at("eta_order")) {
      const std::string key = name.get<std::string>();
      r.components.emplace_back(key, j.at("eta_components").at(key).get<double>());
    }
    r.eta_g = j.at("eta_g").get<double>();
    r.primal_objective = j.at("primal_objective").get<double>();
    r.dual_objective = j.at("dual_objective").get<double>();
    r.objective = j.at("objective").get<double>();
    r.tau = j.at("tau").get<double>();
    r.sigma = j.at("sigma").get<double>();
    r.restarts = j.at("restarts").get<int>();
    r.seconds = j.at("seconds").get<double>();
    r.message = j.at("message").get<std::string>();
    r.config = j.at("config");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed run record: ") + e.what());
  }
}

void write_result(const std::string& path, const RunRecord& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << to_json(r).dump(2) << '\n';
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

RunRecord read_result(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("'" + path + "': " + e.what());
  }
  return run_record_from_json(j);
}

std::string summary_line(const RunRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s | %s | %d | %.1e | %.1e | %.2f | %.2fs | %s",
                r.problem.c_str(), r.solver.c_str(), r.iterations, r.eta, r.eta_g, r.tau,
                r.seconds, std::string(to_string(r.status)).c_str());
  return buf;
}

nlohmann::json config_json(const SolverConfig& cfg, const TuningPolicy& policy) {
  return {{"sigma", cfg.sigma},
          {"alpha", cfg.alpha},
          {"tau_bar", cfg.tau_bar},
          {"eps", cfg.eps},
          {"tau0", cfg.tau0},
          {"tol", cfg.tol},
          {"max_iters", cfg.max_iters},
          {"policy",
           {{"tune_sigma", policy.tune_sigma},
            {"check_period", policy.check_period},
            {"balance_ratio", policy.balance_ratio},
            {"sigma_factor", policy.sigma_factor},
            {"sigma_min", policy.sigma_min},
            {"sigma_max", policy.sigma_max},
            {"freeze_after", policy.freeze_iteration(cfg.max_iters)},
            {"restart", policy.restart},
            {"restart_stall_window", policy.restart_stall_window},
            {"restart_decrease_threshold", policy.restart_decrease_threshold}}}};
}

}  // namespace cadmm
