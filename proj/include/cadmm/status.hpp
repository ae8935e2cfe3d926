#ifndef CADMM_STATUS_HPP_
#define CADMM_STATUS_HPP_

#include <optional>
#include <string_view>

namespace cadmm {

enum class SolveStatus { Converged, MaxIters, Diverged, Error };

constexpr std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged:
      return "Converged";
    case SolveStatus::MaxIters:
      return "MaxIters";
    case SolveStatus::Diverged:
      return "Diverged";
    default:
      return "Error";
  }
}

inline std::optional<SolveStatus> parse_status(std::string_view s) {
  for (auto st : {SolveStatus::Converged, SolveStatus::MaxIters, SolveStatus::Diverged,
                  SolveStatus::Error}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

}  // namespace cadmm

#endif  // CADMM_STATUS_HPP_
