#ifndef CADMM_CONES_HPP_
#define CADMM_CONES_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "cadmm/linalg.hpp"

namespace cadmm {

// Per-entry classification of an entrywise cone K. A non-positive entry is
// expressed by negating the data at build time.
enum class EntryKind : std::uint8_t { Zero, NonNeg, Free };

/// Entry kind of the dual cone: Zero and Free swap, NonNeg is self-dual.
constexpr EntryKind dual_kind(EntryKind k) {
  switch (k) {
    case EntryKind::Zero:
      return EntryKind::Free;
    case EntryKind::Free:
      return EntryKind::Zero;
    default:
      return EntryKind::NonNeg;
  }
}

/// Symmetric entrywise cone pattern over n x n matrices. Only the upper
/// triangle is stored, so kind(i, j) == kind(j, i) by construction.
class ConePattern {
 public:
  ConePattern() = default;
  ConePattern(int n, EntryKind fill);

  static ConePattern nonneg(int n) { return ConePattern(n, EntryKind::NonNeg); }

  int dim() const { return n_; }
  EntryKind kind(int i, int j) const { return kinds_[index(i, j)]; }
  void set(int i, int j, EntryKind k) { kinds_[index(i, j)] = k; }

  bool all_of(EntryKind k) const;
  ConePattern dual() const;

  /// Upper-triangle kinds in row-major order (i <= j).
  const std::vector<EntryKind>& packed() const { return kinds_; }
  static ConePattern from_packed(int n, std::vector<EntryKind> kinds);

  bool operator==(const ConePattern&) const = default;

 private:
  std::size_t index(int i, int j) const;

  int n_ = 0;
  std::vector<EntryKind> kinds_;
};

/// Projection onto K: Zero entries -> 0, NonNeg -> max(0, v), Free unchanged.
SymMat project_pattern(const SymMat& x, const ConePattern& pattern);

/// Projection onto the dual cone K*.
SymMat project_pattern_dual(const SymMat& z, const ConePattern& pattern);

/// Entrywise max(0, v).
Vec project_nonneg(const Vec& v);

// argmin_z theta(z) + 1/(2t) ||z - point||^2 for a fixed theta, t > 0.
using ProxOracle = std::function<Vec(const Vec& point, double t)>;

}  // namespace cadmm

#endif  // CADMM_CONES_HPP_
