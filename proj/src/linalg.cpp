#include "cadmm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace cadmm {

SymMat symmetrize_upper(const SymMat& m) {
  SymMat out = m;
  out.triangularView<Eigen::StrictlyLower>() =
      m.triangularView<Eigen::StrictlyUpper>().transpose();
  return out;
}

SparseSymList::SparseSymList(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("SparseSymList: dimension must be >= 1");
}

void SparseSymList::add(std::vector<SymEntry> entries) {
  std::unordered_set<std::int64_t> seen;
  seen.reserve(entries.size());
  for (auto& e : entries) {
    if (e.row > e.col) std::swap(e.row, e.col);
    if (e.row < 0 || e.col >= n_) {
      std::ostringstream msg;
      msg << "SparseSymList: entry (" << e.row << ", " << e.col
          << ") out of range for dimension " << n_ << " in matrix " << size();
      throw std::invalid_argument(msg.str());
    }
    if (!std::isfinite(e.value)) {
      throw std::invalid_argument("SparseSymList: non-finite entry value");
    }
    const std::int64_t key = static_cast<std::int64_t>(e.row) * n_ + e.col;
    if (!seen.insert(key).second) {
      std::ostringstream msg;
      msg << "SparseSymList: duplicate entry (" << e.row << ", " << e.col
          << ") in matrix " << size();
      throw std::invalid_argument(msg.str());
    }
  }
  mats_.push_back(std::move(entries));
}

double SparseSymList::inner(int k, const Mat& x) const {
  double s = 0.0;
  for (const auto& e : mats_[k]) {
    if (e.row == e.col) {
      s += e.value * x(e.row, e.col);
    } else {
      s += e.value * (x(e.row, e.col) + x(e.col, e.row));
    }
  }
  return s;
}

Vec SparseSymList::apply(const Mat& x) const {
  if (x.rows() != n_ || x.cols() != n_) {
    throw std::invalid_argument("SparseSymList::apply: dimension mismatch");
  }
  Vec out(size());
  for (int k = 0; k < size(); ++k) out[k] = inner(k, x);
  return out;
}

SymMat SparseSymList::adjoint(const Vec& y) const {
  if (y.size() != size()) {
    throw std::invalid_argument("SparseSymList::adjoint: dimension mismatch");
  }
  SymMat out = SymMat::Zero(n_, n_);
  for (int k = 0; k < size(); ++k) {
    const double yk = y[k];
    if (yk == 0.0) continue;
    for (const auto& e : mats_[k]) {
      out(e.row, e.col) += yk * e.value;
      if (e.row != e.col) out(e.col, e.row) += yk * e.value;
    }
  }
  return out;
}

SymMat SparseSymList::dense(int k) const {
  SymMat out = SymMat::Zero(n_, n_);
  for (const auto& e : mats_.at(k)) {
    out(e.row, e.col) = e.value;
    out(e.col, e.row) = e.value;
  }
  return out;
}

double SparseSymList::frob_norm_sq(int k) const {
  double s = 0.0;
  for (const auto& e : mats_.at(k)) {
    s += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
  }
  return s;
}

Mat SparseSymList::gram() const {
  const int m = size();
  // position -> (matrix index, value) pairs touching it
  std::unordered_map<std::int64_t, std::vector<std::pair<int, double>>> by_pos;
  for (int k = 0; k < m; ++k) {
    for (const auto& e : mats_[k]) {
      by_pos[static_cast<std::int64_t>(e.row) * n_ + e.col].emplace_back(k, e.value);
    }
  }
  Mat g = Mat::Zero(m, m);
  for (const auto& [key, list] : by_pos) {
    const int row = static_cast<int>(key / n_);
    const int col = static_cast<int>(key % n_);
    const double w = row == col ? 1.0 : 2.0;
    for (std::size_t a = 0; a < list.size(); ++a) {
      for (std::size_t b = a; b < list.size(); ++b) {
        const double v = w * list[a].second * list[b].second;
        g(list[a].first, list[b].first) += v;
        if (list[a].first != list[b].first) g(list[b].first, list[a].first) += v;
      }
    }
  }
  return g;
}

SparseSymList SparseSymList::subset(const std::vector<int>& keep) const {
  SparseSymList out(n_);
  for (int k : keep) out.add(mats_.at(k));
  return out;
}

double eig_tolerance(const Vec& eigenvalues) {
  if (eigenvalues.size() == 0) return 0.0;
  return 1e-12 * eigenvalues.cwiseAbs().maxCoeff();
}

SymMat project_psd(const SymMat& m) {
  if (!m.allFinite()) throw NumericalError("project_psd: non-finite input");
  const int n = static_cast<int>(m.rows());
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize_upper(m));
  if (eig.info() != Eigen::Success) {
    throw NumericalError("project_psd: eigendecomposition failed");
  }
  const Vec& lam = eig.eigenvalues();
  const double tol = eig_tolerance(lam);
  // eigenvalues are ascending; keep the tail above the clamp threshold
  int first = 0;
  while (first < n && lam[first] <= tol) ++first;
  const int keep = n - first;
  if (keep == 0) return SymMat::Zero(n, n);
  const auto v = eig.eigenvectors().rightCols(keep);
  const Mat scaled = v * lam.tail(keep).cwiseSqrt().asDiagonal();
  SymMat out = scaled * scaled.transpose();
  return 0.5 * (out + out.transpose());
}

LambdaEstimate power_iteration(const std::function<Vec(const Vec&)>& op, int dim,
                               double fallback, const PowerIterationOptions& opts) {
  LambdaEstimate est;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss;
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  v.normalize();
  double lam = 0.0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    Vec w = op(v);
    const double next = v.dot(w);
    const double nw = w.norm();
    est.iterations = it;
    if (nw == 0.0) {
      lam = 0.0;
      est.converged = true;
      break;
    }
    v = w / nw;
    if (it > 1 && std::abs(next - lam) <= opts.rel_tol * std::abs(next)) {
      lam = next;
      est.converged = true;
      break;
    }
    lam = next;
  }
  est.raw = lam;
  est.value = est.converged ? lam * (1.0 + opts.safety) : fallback;
  return est;
}

LambdaEstimate lambda_max_gram(const SparseSymList& a, const PowerIterationOptions& opts) {
  if (a.empty()) throw std::invalid_argument("lambda_max_gram: empty constraint list");
  double trace = 0.0;
  for (int k = 0; k < a.size(); ++k) trace += a.frob_norm_sq(k);
  if (a.size() <= GramSolver::kMaxDenseSize) {
    const Mat g = a.gram();
    return power_iteration([&g](const Vec& y) { return Vec(g * y); }, a.size(), trace, opts);
  }
  return power_iteration([&a](const Vec& y) { return a.apply(a.adjoint(y)); }, a.size(),
                         trace, opts);
}

GramSolver::GramSolver(const SparseSymList& a) {
  if (a.empty()) throw std::invalid_argument("GramSolver: empty constraint list");
  if (a.size() > kMaxDenseSize) {
    throw std::invalid_argument("GramSolver: more than 5000 constraints is beyond dense scale");
  }
  gram_ = a.gram();
  const int m = size();
  lower_ = Mat::Zero(m, m);
  double max_pivot = 0.0;
  for (int j = 0; j < m; ++j) {
    const double d = gram_(j, j) - lower_.row(j).head(j).squaredNorm();
    max_pivot = std::max(max_pivot, d);
    if (!(d > 1e-12 * max_pivot) || !std::isfinite(d)) {
      std::ostringstream msg;
      msg << "GramSolver: Gram matrix is numerically singular at constraint " << j
          << " (pivot " << d << ", largest pivot " << max_pivot << ")";
      throw NumericalError(msg.str());
    }
    const double ljj = std::sqrt(d);
    lower_(j, j) = ljj;
    if (j + 1 < m) {
      lower_.col(j).tail(m - j - 1) =
          (gram_.col(j).tail(m - j - 1) -
           lower_.bottomLeftCorner(m - j - 1, j) * lower_.row(j).head(j).transpose()) /
          ljj;
    }
  }
}

Vec GramSolver::solve(const Vec& rhs) const {
  if (rhs.size() != size()) throw std::invalid_argument("GramSolver::solve: size mismatch");
  const auto l = lower_.triangularView<Eigen::Lower>();
  Vec y = l.transpose().solve(l.solve(rhs));
  const Vec r = rhs - gram_ * y;
  y += l.transpose().solve(l.solve(r));
  return y;
}

Vec gram_solve(const SparseSymList& a, const Vec& rhs) { return GramSolver(a).solve(rhs); }

std::vector<int> independent_rows(const SparseSymList& a, double rel_tol) {
  const Mat g = a.gram();
  const int m = a.size();
  std::vector<int> kept;
  Mat lower = Mat::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    const int r = static_cast<int>(kept.size());
    Vec gj(r);
    for (int t = 0; t < r; ++t) gj[t] = g(kept[t], j);
    Vec l = r > 0 ? Vec(lower.topLeftCorner(r, r).triangularView<Eigen::Lower>().solve(gj))
                  : Vec();
    const double d = g(j, j) - l.squaredNorm();
    if (g(j, j) > 0.0 && d > rel_tol * g(j, j)) {
      lower.row(r).head(r) = l.transpose();
      lower(r, r) = std::sqrt(d);
      kept.push_back(j);
    }
  }
  return kept;
}

}  // namespace cadmm
