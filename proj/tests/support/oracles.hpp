#pragma once

// Test-side reference implementations. None of these call into the library's
// numerical code; they use plain loops, cyclic Jacobi and std::mt19937_64.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat random_gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

/// Modified Gram-Schmidt, applied twice.
inline Mat gram_schmidt(Mat a) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) a.col(j) -= a.col(i).dot(a.col(j)) * a.col(i);
      a.col(j) /= a.col(j).norm();
    }
  }
  return a;
}

inline Mat random_orthonormal(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  return gram_schmidt(random_gaussian(rows, cols, seed));
}

struct SymEigen {
  Vec values;  // descending
  Mat vectors;
};

/// Cyclic Jacobi for a symmetric matrix.
inline SymEigen jacobi_eigen(Mat a) {
  const Eigen::Index n = a.rows();
  Mat v = Mat::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
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
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  SymEigen out{Vec(n), Mat(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Singular values of S from the eigenvalues of S^T S.
inline Vec singular_values(const Mat& s) {
  Vec ev = jacobi_eigen(s.transpose() * s).values;
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::sqrt(std::max(ev(i), 0.0));
  return ev;
}

/// Best rank-k approximation S V_k V_k^T with V_k from Jacobi on S^T S.
inline Mat truncate(const Mat& s, Eigen::Index k) {
  const Mat vk = jacobi_eigen(s.transpose() * s).vectors.leftCols(k);
  return s * vk * vk.transpose();
}

/// Cosines of the principal angles between the column spaces of two
/// orthonormal bases (ascending angle order).
inline Vec principal_cosines(const Mat& qa, const Mat& qb) {
  const Mat m = qa.transpose() * qb;
  return singular_values(m.rows() >= m.cols() ? m : Mat(m.transpose()));
}

/// Matrix with prescribed singular values and random orthonormal factors.
inline Mat with_spectrum(Eigen::Index rows, Eigen::Index cols, const Vec& sigma, std::uint64_t seed) {
  const Mat u = random_orthonormal(rows, sigma.size(), seed);
  const Mat v = random_orthonormal(cols, sigma.size(), seed ^ 0x9E3779B97F4A7C15ULL);
  return u * sigma.asDiagonal() * v.transpose();
}

/// |DFT|^2 by direct summation, normalized to unit sum.
inline std::vector<double> naive_psd(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> p(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n));
    }
    p[k] = std::norm(acc);
    total += p[k];
  }
  if (total > 0) for (auto& v : p) v /= total;
  return p;
}

/// Exhaustive search over intervals [-a, b] around DC with b in {a, a+1}
/// (positive side first): the smallest bin count reaching 99% energy.
inline double brute_force_bandwidth(const std::vector<double>& p) {
  const std::size_t n = p.size();
  for (std::size_t bins = 1; bins <= n; ++bins) {
    const std::size_t pos = bins / 2;        // bins to the positive side
    const std::size_t neg = (bins - 1) / 2;  // bins to the negative side
    double e = p[0];
    for (std::size_t k = 1; k <= pos; ++k) e += p[k];
    for (std::size_t k = 1; k <= neg; ++k) e += p[n - k];
    if (e + 1e-12 >= 0.99) return static_cast<double>(bins) / static_cast<double>(n);
  }
  return 1.0;
}

/// Two-pass Pearson correlation.
inline double pearson(const Vec& a, const Vec& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) { ma += a(i); mb += b(i); }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    sab += (a(i) - ma) * (b(i) - mb);
    saa += (a(i) - ma) * (a(i) - ma);
    sbb += (b(i) - mb) * (b(i) - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double rel_fro(const Mat& a, const Mat& b) {
  const double d = b.norm();
  return d == 0.0 ? a.norm() : (a - b).norm() / d;
}

}  // namespace oracle
