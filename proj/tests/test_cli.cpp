#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "cadmm/io.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, std::string* output = nullptr) {
  const std::string log = "cli_test_output.txt";
  const std::string cmd = std::string(CADMM_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) {
    std::ifstream in(log);
    std::stringstream s;
    s << in.rdbuf();
    *output = s.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("solve a generated problem and write a record") {
  std::string out;
  CHECK(run("solve --generate biq:6:1 --out cli_biq.json --write-problem cli_biq.txt", &out) == 0);
  CHECK(out.find("biq-6-1 | cadmm |") != std::string::npos);
  const cadmm::RunRecord r = cadmm::read_result("cli_biq.json");
  CHECK(r.status == cadmm::SolveStatus::Converged);
  CHECK(r.config.at("solver") == "cadmm");

  CHECK(run("solve --problem cli_biq.txt --solver dext --tau 1.618 --out cli_biq_dext.json") == 0);
  CHECK(cadmm::read_result("cli_biq_dext.json").solver == "dext");
}

TEST_CASE("iteration cap maps to exit code 2") {
  CHECK(run("solve --generate theta:10:1 --max-iters 3") == 2);
}

TEST_CASE("usage errors exit with 1") {
  std::string out;
  CHECK(run("solve", &out) == 1);
  CHECK(out.find("--problem") != std::string::npos);
  CHECK(run("solve --generate biq:6:1 --problem x.txt") == 1);
  CHECK(run("solve --generate nope:6:1", &out) == 1);
  CHECK(out.find("error") != std::string::npos);
  CHECK(run("solve --problem /nonexistent.txt") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("solve --generate biq:6:1 --alpha 2") == 1);
}

TEST_CASE("generate writes a readable problem") {
  CHECK(run("generate fap:8:2 --out cli_fap.txt") == 0);
  const cadmm::DnnSdpProblem p = cadmm::read_problem(std::string("cli_fap.txt"));
  CHECK(p.info().family == "fap");
}

TEST_CASE("bench writes records and profiles") {
  {
    std::ofstream m("cli_manifest.txt");
    m << "# two tiny instances\nbiq:5:1\ncli_fap.txt\n";
  }
  std::string out;
  CHECK(run("bench --manifest cli_manifest.txt --out cli_bench --jobs 2", &out) == 0);
  CHECK(fs::exists("cli_bench/records.jsonl"));
  CHECK(fs::exists("cli_bench/profile_iterations.csv"));
  CHECK(fs::exists("cli_bench/profile_time.csv"));
  CHECK(out.find("profile iterations cadmm") != std::string::npos);
  std::ifstream rec("cli_bench/records.jsonl");
  int lines = 0;
  for (std::string l; std::getline(rec, l);) lines += !l.empty();
  CHECK(lines == 4);

  {
    std::ofstream m("cli_bad_manifest.txt");
    m << "biq:5:1 extra\n";
  }
  CHECK(run("bench --manifest cli_bad_manifest.txt --out cli_bench2") == 1);
  CHECK(run("bench --manifest cli_manifest.txt --solvers sdpnal") == 1);
}

TEST_CASE("check subcommand passes") {
  std::string out;
  CHECK(run("check --seed 1", &out) == 0);
  CHECK(out.find("FAIL") == std::string::npos);
}
