#pragma once

// Independent reference implementations used as test oracles. They are
// written with plain loops and share no code with the library paths they
// check.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

namespace oracle {

using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;

inline MatrixXd matmul(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out = MatrixXd::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

/// softmax(Q K^T / sqrt(d_k)) V for one sequence, straight from the formula.
inline MatrixXd attention(const MatrixXd& x, const MatrixXd& wq, const MatrixXd& wk, const MatrixXd& wv) {
  const MatrixXd q = matmul(x, wq), k = matmul(x, wk), v = matmul(x, wv);
  const auto n = x.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  MatrixXd out = MatrixXd::Zero(n, v.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> s(static_cast<std::size_t>(n));
    double mx = -INFINITY;
    for (Eigen::Index j = 0; j < n; ++j) {
      double dot = 0.0;
      for (Eigen::Index c = 0; c < q.cols(); ++c) dot += q(i, c) * k(j, c);
      s[static_cast<std::size_t>(j)] = dot * scale;
      mx = std::max(mx, s[static_cast<std::size_t>(j)]);
    }
    double z = 0.0;
    for (auto& e : s) z += (e = std::exp(e - mx));
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index c = 0; c < v.cols(); ++c) out(i, c) += s[static_cast<std::size_t>(j)] / z * v(j, c);
  }
  return out;
}

struct Eigenpairs {
  VectorXd values;   // descending
  MatrixXd vectors;  // columns
};

/// Cyclic Jacobi rotations on a symmetric matrix.
inline Eigenpairs jacobi(MatrixXd a, int max_sweeps = 100) {
  const auto n = a.rows();
  MatrixXd v = MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::fabs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  Eigenpairs out{VectorXd(n), MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Greedy top-M correction, recomputed from scratch with loops: returns the
/// smallest M whose quantized top-M correction meets tau (0 if none needed,
/// -1 if none works), along with the chosen indices and symbols.
struct GreedyResult {
  int m = -1;
  std::vector<std::uint32_t> indices;
  std::vector<std::int64_t> symbols;
  double error = 0.0;
};

inline double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline GreedyResult greedy_correction(const std::vector<double>& x, const std::vector<double>& xr, const MatrixXd& u,
                                      double tau, double bin) {
  const std::size_t d = x.size();
  GreedyResult out;
  out.error = l2(x, xr);
  if (out.error <= tau) {
    out.m = 0;
    return out;
  }
  std::vector<double> c(d, 0.0);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t i = 0; i < d; ++i) c[k] += u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * (x[i] - xr[i]);
  // Rank by magnitude, ties to the lower index (selection sort, no library sort).
  std::vector<std::uint32_t> rank;
  std::vector<bool> used(d, false);
  for (std::size_t r = 0; r < d; ++r) {
    std::size_t best = d;
    for (std::size_t k = 0; k < d; ++k)
      if (!used[k] && (best == d || std::fabs(c[k]) > std::fabs(c[best]))) best = k;
    used[best] = true;
    rank.push_back(static_cast<std::uint32_t>(best));
  }
  for (std::size_t m = 1; m <= d; ++m) {
    std::vector<std::uint32_t> sel(rank.begin(), rank.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(sel.begin(), sel.end());
    std::vector<double> xg = xr;
    std::vector<std::int64_t> sym;
    for (auto k : sel) {
      const double q = std::round(c[k] / bin);
      sym.push_back(static_cast<std::int64_t>(q));
      for (std::size_t i = 0; i < d; ++i) xg[i] += u(static_cast<Eigen::Index>(i), k) * q * bin;
    }
    for (auto& v : xg) v = static_cast<double>(static_cast<float>(v));
    const double err = l2(x, xg);
    if (err <= tau) {
      out.m = static_cast<int>(m);
      out.indices = sel;
      out.symbols = sym;
      out.error = err;
      return out;
    }
  }
  return out;
}

/// Shannon entropy in bits per symbol.
inline double entropy(const std::vector<std::int64_t>& symbols) {
  std::map<std::int64_t, double> freq;
  for (auto s : symbols) freq[s] += 1.0;
  double h = 0.0;
  const auto n = static_cast<double>(symbols.size());
  for (const auto& [s, f] : freq) h -= f / n * std::log2(f / n);
  return h;
}

inline double nrmse(const std::vector<float>& a, const std::vector<float>& b) {
  double lo = a[0], hi = a[0], sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    lo = std::min<double>(lo, a[i]);
    hi = std::max<double>(hi, a[i]);
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(a.size())) / (hi - lo);
}

/// Counts values into [edges[i], edges[i+1]) with the last bin closed.
inline std::vector<std::size_t> count_into(const std::vector<double>& values, const std::vector<double>& edges) {
  std::vector<std::size_t> counts(edges.size() - 1, 0);
  for (double v : values) {
    std::size_t bin = counts.size() - 1;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
      if (v >= edges[i] && v < edges[i + 1]) {
        bin = i;
        break;
      }
    ++counts[bin];
  }
  return counts;
}

/// Central differences of a scalar function of a parameter matrix.
template <typename M>
M finite_difference(M& param, const std::function<double()>& loss, double h = 1e-6) {
  M grad = M::Zero(param.rows(), param.cols());
  for (Eigen::Index i = 0; i < param.rows(); ++i)
    for (Eigen::Index j = 0; j < param.cols(); ++j) {
      const double saved = param(i, j);
      param(i, j) = saved + h;
      const double up = loss();
      param(i, j) = saved - h;
      const double down = loss();
      param(i, j) = saved;
      grad(i, j) = (up - down) / (2.0 * h);
    }
  return grad;
}

}  // namespace oracle
