#include "cadmm/cones.hpp"

#include <algorithm>
#include <stdexcept>

namespace cadmm {

ConePattern::ConePattern(int n, EntryKind fill)
    : n_(n), kinds_(static_cast<std::size_t>(n) * (n + 1) / 2, fill) {
  if (n < 1) throw std::invalid_argument("ConePattern: dimension must be >= 1");
}

std::size_t ConePattern::index(int i, int j) const {
  if (i > j) std::swap(i, j);
  // row-major packed upper triangle
  return static_cast<std::size_t>(i) * n_ - static_cast<std::size_t>(i) * (i - 1) / 2 + (j - i);
}

bool ConePattern::all_of(EntryKind k) const {
  return std::all_of(kinds_.begin(), kinds_.end(), [k](EntryKind e) { return e == k; });
}

ConePattern ConePattern::dual() const {
  ConePattern out = *this;
  for (auto& k : out.kinds_) k = dual_kind(k);
  return out;
}

ConePattern ConePattern::from_packed(int n, std::vector<EntryKind> kinds) {
  ConePattern out(n, EntryKind::Free);
  if (kinds.size() != out.kinds_.size()) {
    throw std::invalid_argument("ConePattern::from_packed: wrong number of entries");
  }
  out.kinds_ = std::move(kinds);
  return out;
}

namespace {

SymMat project_with(const SymMat& x, const ConePattern& pattern, bool dual) {
  const int n = pattern.dim();
  if (x.rows() != n || x.cols() != n) {
    throw std::invalid_argument("project_pattern: dimension mismatch");
  }
  SymMat out(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      EntryKind k = pattern.kind(i, j);
      if (dual) k = dual_kind(k);
      const double v = x(i, j);
      double p = v;
      if (k == EntryKind::Zero) {
        p = 0.0;
      } else if (k == EntryKind::NonNeg) {
        p = v > 0.0 ? v : 0.0;
      }
      out(i, j) = p;
      out(j, i) = p;
    }
  }
  return out;
}

}  // namespace

SymMat project_pattern(const SymMat& x, const ConePattern& pattern) {
  return project_with(x, pattern, false);
}

SymMat project_pattern_dual(const SymMat& z, const ConePattern& pattern) {
  return project_with(z, pattern, true);
}

Vec project_nonneg(const Vec& v) { return v.cwiseMax(0.0); }

}  // namespace cadmm
