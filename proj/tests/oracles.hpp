#ifndef CADMM_TESTS_ORACLES_HPP_
#define CADMM_TESTS_ORACLES_HPP_

// Independent reference computations for the unit and acceptance tests.
// Nothing here calls the library's projections, Gram solvers or residuals;
// matrices are densified from the raw constraint entries and each subproblem
// is solved by plain projected gradient on its literal objective.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cadmm/dnnsdp.hpp"
#include "cadmm/engine.hpp"

namespace oracle {

using cadmm::Mat;
using cadmm::Vec;

// Nearest PSD matrix as (M + |M|) / 2, with |M| the symmetric polar factor
// V Sigma V^T from an SVD. No eigensolver is involved.
inline Mat project_psd(const Mat& m) {
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::JacobiSVD<Mat> svd(sym, Eigen::ComputeFullV);
  const Mat abs = svd.matrixV() * svd.singularValues().asDiagonal() * svd.matrixV().transpose();
  const Mat out = 0.5 * (sym + abs);
  return 0.5 * (out + out.transpose());
}

inline double min_eig(const Mat& m) {
  return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (m + m.transpose())).eigenvalues().minCoeff();
}

// Projection onto the entrywise dual cone, written from the kind table.
inline Mat project_dual_cone(const Mat& z, const cadmm::ConePattern& pattern) {
  Mat out = z;
  for (int i = 0; i < z.rows(); ++i) {
    for (int j = 0; j < z.cols(); ++j) {
      switch (pattern.kind(std::min(i, j), std::max(i, j))) {
        case cadmm::EntryKind::Zero:  // dual entry is free
          break;
        case cadmm::EntryKind::NonNeg:
          out(i, j) = std::max(0.0, z(i, j));
          break;
        case cadmm::EntryKind::Free:  // dual entry is zero
          out(i, j) = 0.0;
          break;
      }
    }
  }
  return out;
}

inline Mat project_cone(const Mat& x, const cadmm::ConePattern& pattern) {
  Mat out = x;
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) {
      switch (pattern.kind(std::min(i, j), std::max(i, j))) {
        case cadmm::EntryKind::Zero:
          out(i, j) = 0.0;
          break;
        case cadmm::EntryKind::NonNeg:
          out(i, j) = std::max(0.0, x(i, j));
          break;
        case cadmm::EntryKind::Free:
          break;
      }
    }
  }
  return out;
}

// m x n^2 matrix whose k-th row is vec(A_k), built from the raw entries.
inline Mat dense_rows(const cadmm::SparseSymList& a) {
  const int n = a.dim();
  Mat out = Mat::Zero(a.size(), n * n);
  for (int k = 0; k < a.size(); ++k) {
    for (const auto& e : a.matrix(k)) {
      out(k, e.col * n + e.row) += e.value;
      if (e.row != e.col) out(k, e.row * n + e.col) += e.value;
    }
  }
  return out;
}

inline Vec vec(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }
inline Mat unvec(const Vec& v, int n) { return Eigen::Map<const Mat>(v.data(), n, n); }

// Literal objectives of the four DNN subproblems and their minimizers by
// projected gradient with step 1/(2L), which contracts by 1/2 per step.
struct SubproblemData {
  Mat ai;  // rows vec(A_I,k)
  Mat ae;  // rows vec(A_E,k)
  Vec bi, be;
  Mat c, m;
  cadmm::ConePattern pattern;
  double lambda = 0.0;
  int n = 0;
};

inline SubproblemData subproblem_data(const cadmm::DnnSdpProblem& p) {
  SubproblemData d;
  d.n = p.n();
  d.ae = dense_rows(p.a_eq());
  d.be = p.b_eq();
  d.c = p.c();
  d.m = p.shift();
  d.pattern = p.pattern();
  if (p.has_ineq()) {
    d.ai = dense_rows(p.ineq()->a);
    d.bi = p.ineq()->b;
    d.lambda = p.lambda_ineq();
  }
  return d;
}

inline Mat adj(const Mat& rows, const Vec& y, int n) { return unvec(rows.transpose() * y, n); }

// min -<b_I, y> + <X, A_I^* y> + s/2 ||A_I^* y + W||^2 + s/2 ||y - y~||_T^2, y >= 0
// with W = Z~ + A_E^* y~_E + S~ - C and T = lambda I - A_I A_I^*.
inline Vec solve_y_i(const SubproblemData& d, const cadmm::DnnSdpIterate& it, double s) {
  const Mat w = it.z_t + adj(d.ae, it.y_e_t, d.n) + it.s_t - d.c;
  const Mat aat = d.ai * d.ai.transpose();
  const Mat t = d.lambda * Mat::Identity(aat.rows(), aat.cols()) - aat;
  const Mat hess = s * (aat + t);
  const double lip = Eigen::SelfAdjointEigenSolver<Mat>(hess).eigenvalues().maxCoeff();
  Vec y = it.y_i_t.cwiseMax(0.0);
  for (int k = 0; k < 200; ++k) {
    const Vec grad = -d.bi + d.ai * vec(it.x) + s * (d.ai * vec(adj(d.ai, y, d.n) + w)) +
                     s * (t * (y - it.y_i_t));
    y = (y - grad / (2.0 * lip)).cwiseMax(0.0);
  }
  return y;
}

// min -<M, Z> + <X, Z> + s/2 ||Z + W||^2, Z in K*, W = A_I^* y_I + A_E^* y~_E + S~ - C.
inline Mat solve_z(const SubproblemData& d, const cadmm::DnnSdpIterate& it, double s,
                   const Vec& y_i) {
  Mat w = adj(d.ae, it.y_e_t, d.n) + it.s_t - d.c;
  if (d.ai.rows() > 0) w += adj(d.ai, y_i, d.n);
  Mat z = Mat::Zero(d.n, d.n);
  for (int k = 0; k < 200; ++k) {
    const Mat grad = -d.m + it.x + s * (z + w);
    z = project_dual_cone(z - grad / (2.0 * s), d.pattern);
  }
  return z;
}

// min -<b_E, y> + <X, A_E^* y> + s/2 ||A_E^* y + V||^2, V = A_I^* y_I + Z + S~ - C,
// by a least-squares solve of the stationarity condition.
inline Vec solve_y_e(const SubproblemData& d, const cadmm::DnnSdpIterate& it, double s,
                     const Vec& y_i, const Mat& z) {
  Mat v = z + it.s_t - d.c;
  if (d.ai.rows() > 0) v += adj(d.ai, y_i, d.n);
  const Mat lhs = s * d.ae * d.ae.transpose();
  const Vec rhs = d.be - d.ae * vec(it.x) - s * (d.ae * vec(v));
  return lhs.colPivHouseholderQr().solve(rhs);
}

// min <X, S> + s/2 ||S + V||^2, S psd, V = A_I^* y_I + Z + A_E^* y_E - C.
inline Mat solve_s(const SubproblemData& d, const cadmm::DnnSdpIterate& it, double s,
                   const Vec& y_i, const Mat& z, const Vec& y_e) {
  Mat v = z + adj(d.ae, y_e, d.n) - d.c;
  if (d.ai.rows() > 0) v += adj(d.ai, y_i, d.n);
  Mat x = Mat::Zero(d.n, d.n);
  for (int k = 0; k < 80; ++k) {
    const Mat grad = it.x + s * (x + v);
    x = project_psd(x - grad / (2.0 * s));
  }
  return x;
}

// All KKT residual components, recomputed from dense data.
inline double eta(const cadmm::DnnSdpProblem& p, const cadmm::DnnSdpIterate& it) {
  const SubproblemData d = subproblem_data(p);
  const Mat& x = it.x;
  auto neg_part = [](const Mat& m) { return (m - project_psd(m)).norm(); };
  std::vector<double> parts;
  parts.push_back((d.ae * vec(x) - d.be).norm() / (1.0 + d.be.norm()));
  Mat dual = it.z + adj(d.ae, it.y_e, d.n) + it.s - d.c;
  if (p.has_ineq()) dual += adj(d.ai, it.y_i, d.n);
  parts.push_back(dual.norm() / (1.0 + d.c.norm()));
  parts.push_back(neg_part(x) / (1.0 + x.norm()));
  const Mat shifted = x - d.m;
  parts.push_back((shifted - project_cone(shifted, d.pattern)).norm() / (1.0 + x.norm()));
  parts.push_back(neg_part(it.s) / (1.0 + it.s.norm()));
  parts.push_back((it.z - project_dual_cone(it.z, d.pattern)).norm() / (1.0 + it.z.norm()));
  parts.push_back(std::abs((x.array() * it.s.array()).sum()) / (1.0 + x.norm() + it.s.norm()));
  parts.push_back(std::abs((shifted.array() * it.z.array()).sum()) /
                  (1.0 + x.norm() + it.z.norm()));
  if (p.has_ineq()) {
    parts.push_back((d.bi - d.ai * vec(x)).cwiseMax(0.0).norm() / (1.0 + d.bi.norm()));
    parts.push_back((-it.y_i).cwiseMax(0.0).norm() / (1.0 + it.y_i.norm()));
  }
  double out = 0.0;
  for (double v : parts) out = std::max(out, v);
  return out;
}

// min 1/2 x'Qx + c'x over x in {0,1}^n by enumeration.
inline double brute_force_biq(const Mat& q, const Vec& c) {
  const int n = static_cast<int>(c.size());
  double best = std::numeric_limits<double>::infinity();
  Vec x(n);
  for (long mask = 0; mask < (1L << n); ++mask) {
    for (int i = 0; i < n; ++i) x[i] = (mask >> i) & 1;
    best = std::min(best, 0.5 * x.dot(q * x) + c.dot(x));
  }
  return best;
}

// Step-size law check written from its definition.
inline std::string tau_law(const std::vector<double>& tau, const std::vector<int>& restarts,
                           double tau_bar, double tau0) {
  for (std::size_t k = 0; k < tau.size(); ++k) {
    if (tau[k] < tau_bar || tau[k] > tau0) return "tau out of range at " + std::to_string(k);
    bool fresh = k == 0;
    for (int r : restarts) fresh = fresh || static_cast<std::size_t>(r) == k;
    if (fresh) continue;
    if (tau[k] > tau[k - 1]) return "tau increased at " + std::to_string(k);
    if (tau[k - 1] == tau_bar && tau[k] != tau_bar) return "tau left floor at " + std::to_string(k);
  }
  return {};
}

// Random p-block problem with quadratic blocks and dense maps, kept alongside
// its raw data so H, M and G can be formed independently.
struct DenseInstance {
  cadmm::MultiBlockProblem prob;
  std::vector<Mat> adjoint;  // A_i^* as space_dim x block_dim
  std::vector<Mat> t;        // T_i
  int total_dim = 0;
};

inline DenseInstance random_dense_instance(std::uint64_t seed, int p) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> space(8, 20);
  DenseInstance inst;
  const int m = space(rng);
  const int budget = 100 - m;
  std::uniform_int_distribution<int> dim(2, std::min(m, budget / p));
  Vec c = Vec::Zero(m);
  for (int i = 0; i < p; ++i) {
    const int d = dim(rng);
    Mat a(m, d);
    for (int r = 0; r < m; ++r) {
      for (int s = 0; s < d; ++s) a(r, s) = gauss(rng);
    }
    std::uniform_int_distribution<int> rank(0, d);
    const int rk = rank(rng);
    Mat b(d, std::max(rk, 1));
    for (int r = 0; r < d; ++r) {
      for (int s = 0; s < b.cols(); ++s) b(r, s) = rk == 0 ? 0.0 : gauss(rng);
    }
    Vec q(d);
    Vec z0(d);
    for (int r = 0; r < d; ++r) {
      q[r] = gauss(rng);
      z0[r] = gauss(rng);
    }
    c += a * z0;
    const Mat aat = a.transpose() * a;
    cadmm::SemiProx sp;
    Mat t = Mat::Zero(d, d);
    if (i % 2 == 1) {
      const double rho = 1.05 * Eigen::SelfAdjointEigenSolver<Mat>(aat).eigenvalues().maxCoeff();
      sp = cadmm::SemiProx::scaled_identity(rho);
      t = rho * Mat::Identity(d, d) - aat;
    }
    inst.prob.blocks.push_back(cadmm::dense_quadratic_block("b" + std::to_string(i + 1),
                                                            b * b.transpose(), q, a, sp));
    inst.adjoint.push_back(a);
    inst.t.push_back(t);
    inst.total_dim += d;
  }
  inst.total_dim += m;
  inst.prob.c = c;
  return inst;
}

struct TheoryMats {
  Mat m, h;
  std::vector<int> offsets;
};

// M and H over blocks 2..p from the raw data.
inline TheoryMats theory_mats(const DenseInstance& inst, double alpha) {
  const int p = static_cast<int>(inst.adjoint.size());
  TheoryMats out;
  int total = 0;
  for (int i = 1; i < p; ++i) {
    out.offsets.push_back(total);
    total += static_cast<int>(inst.adjoint[i].cols());
  }
  out.m = Mat::Zero(total, total);
  out.h = Mat::Zero(total, total);
  for (int i = 1; i < p; ++i) {
    const int oi = out.offsets[i - 1];
    const Mat& ai = inst.adjoint[i];
    const int di = static_cast<int>(ai.cols());
    const Mat e = ai.transpose() * ai + inst.t[i];
    const Mat e_inv = e.inverse();
    out.m.block(oi, oi, di, di) = e;
    out.h.block(oi, oi, di, di) = (i == p - 1 ? alpha : 1.0) * Mat::Identity(di, di);
    for (int j = 1; j < p; ++j) {
      const int oj = out.offsets[j - 1];
      const Mat& aj = inst.adjoint[j];
      const int dj = static_cast<int>(aj.cols());
      if (j < i) out.m.block(oi, oj, di, dj) = ai.transpose() * aj;
      if (j > i) out.h.block(oi, oj, di, dj) = e_inv * ai.transpose() * aj;
    }
  }
  return out;
}

inline Vec stack_tail(const std::vector<Vec>& blocks) {
  int total = 0;
  for (std::size_t i = 1; i < blocks.size(); ++i) total += static_cast<int>(blocks[i].size());
  Vec out(total);
  int off = 0;
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    out.segment(off, blocks[i].size()) = blocks[i];
    off += static_cast<int>(blocks[i].size());
  }
  return out;
}

}  // namespace oracle

#endif  // CADMM_TESTS_ORACLES_HPP_
