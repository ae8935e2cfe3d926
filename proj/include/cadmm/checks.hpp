#ifndef CADMM_CHECKS_HPP_
#define CADMM_CHECKS_HPP_

// Run-time invariant checks on seeded instances, shared by the `check`
// subcommand and the test suites.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cadmm/dnnsdp.hpp"

namespace cadmm {

struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Empty when the tau sequence obeys the step-size law: values in
/// [tau_bar, tau0], nonincreasing between restarts, and stuck at tau_bar once
/// reached. `restarts` holds the iteration counts at which restarts fired;
/// tau_history[k] is the step used by iteration k + 1.
std::string tau_law_violation(std::span<const double> tau_history, std::span<const int> restarts,
                              double tau_bar, double tau0);

/// Empty when y_I >= 0, Z in K* and S is PSD (up to the eigenvalue tolerance).
std::string managed_block_violation(const DnnSdpIterate& it, const DnnSdpProblem& prob);

/// Runs the specialized solver and the generic engine on the same problem for
/// `iterations` steps with fixed sigma and no restarts, and returns the largest
/// per-iterate difference relative to 1 + the iterate norm, over all blocks,
/// their tilde copies and X.
double specialization_gap(const DnnSdpProblem& prob, SolverConfig cfg, int iterations);

/// The full suite on instances derived from `seed`.
std::vector<CheckOutcome> run_checks(std::uint64_t seed);

}  // namespace cadmm

#endif  // CADMM_CHECKS_HPP_
