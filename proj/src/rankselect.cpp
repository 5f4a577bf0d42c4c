#include "stsvd/rankselect.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <ostream>
#include <string>

#include <fftw3.h>

#include "stsvd/error.hpp"
#include "stsvd/svdcore.hpp"

namespace stsvd {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealDft {
 public:
  explicit RealDft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_real(n)),
        out_(fftw_alloc_complex(n / 2 + 1)) {
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealDft() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealDft(const RealDft&) = delete;
  RealDft& operator=(const RealDft&) = delete;

  /// |X_k|^2 for k = 0..n-1 (double-sided).
  void power(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
    for (std::size_t i = 0; i < n_; ++i) in_[i] = x(static_cast<Eigen::Index>(i));
    fftw_execute(plan_);
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t h = k <= n_ / 2 ? k : n_ - k;
      out(static_cast<Eigen::Index>(k)) = out_[h][0] * out_[h][0] + out_[h][1] * out_[h][1];
    }
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

}  // namespace

PsdTable temporal_psd(const Matrix& V, std::size_t n_eval, double dt_s) {
  const auto n_t = static_cast<std::size_t>(V.rows());
  if (n_t < kMinFramesForPsd) {
    throw Error(ErrorKind::InsufficientFrames, "temporal PSD needs at least " + std::to_string(kMinFramesForPsd) +
                                                   " frames, got " + std::to_string(n_t));
  }
  if (n_eval < 1 || n_eval > static_cast<std::size_t>(V.cols())) {
    throw Error(ErrorKind::Bounds, "n_eval = " + std::to_string(n_eval) + " exceeds the " +
                                       std::to_string(V.cols()) + " available temporal vectors");
  }
  PsdTable table;
  table.rows.resize(static_cast<Eigen::Index>(n_eval), static_cast<Eigen::Index>(n_t));
  table.freq_resolution_hz = 1.0 / (static_cast<double>(n_t) * dt_s);

  RealDft dft(n_t);
  Vector row(static_cast<Eigen::Index>(n_t));
  for (std::size_t j = 0; j < n_eval; ++j) {
    dft.power(V.col(static_cast<Eigen::Index>(j)), row);
    const double total = row.sum();
    if (total > 0.0) row /= total;
    table.rows.row(static_cast<Eigen::Index>(j)) = row.transpose();
  }
  return table;
}

double bandwidth99(const Eigen::Ref<const Vector>& psd_row) {
  constexpr double kEnergy = 0.99;
  constexpr double kSlack = 1e-12;
  const auto n = static_cast<std::size_t>(psd_row.size());
  if (n == 0) return 0.0;

  double cum = psd_row(0);
  std::size_t bins = 1;
  for (std::size_t k = 1; cum + kSlack < kEnergy && bins < n; ++k) {
    cum += psd_row(static_cast<Eigen::Index>(k));
    ++bins;
    if (cum + kSlack >= kEnergy || bins >= n) break;
    cum += psd_row(static_cast<Eigen::Index>(n - k));
    ++bins;
  }
  return static_cast<double>(bins) / static_cast<double>(n);
}

std::vector<double> bandwidth_curve(const PsdTable& psd) {
  std::vector<double> bw(static_cast<std::size_t>(psd.rows.rows()));
  for (Eigen::Index j = 0; j < psd.rows.rows(); ++j) {
    bw[static_cast<std::size_t>(j)] = bandwidth99(psd.rows.row(j).transpose());
  }
  return bw;
}

RankEstimate estimate_rank_from_bandwidth(std::vector<double> bandwidth, double floor_level) {
  RankEstimate est;
  est.method = RankMethod::Temporal;
  const std::size_t n_eval = bandwidth.size();
  est.k_hat = std::max<std::size_t>(n_eval, 1);
  est.no_noise_floor = true;
  for (std::size_t i = 0; i < n_eval; ++i) {
    if (bandwidth[i] >= floor_level) {
      // Orders before i (0-based) are narrowband: the tissue subspace.
      est.k_hat = std::max<std::size_t>(i, 1);
      est.no_noise_floor = false;
      break;
    }
  }
  est.bandwidth = std::move(bandwidth);
  return est;
}

RankEstimate estimate_rank_temporal(const Matrix& V, std::size_t n_eval, double floor_level) {
  return estimate_rank_from_bandwidth(bandwidth_curve(temporal_psd(V, n_eval)), floor_level);
}

SimilarityMatrix spatial_similarity_matrix(const Matrix& U, std::size_t n_eval) {
  if (n_eval < 1 || n_eval > static_cast<std::size_t>(U.cols())) {
    throw Error(ErrorKind::Bounds, "n_eval = " + std::to_string(n_eval) + " exceeds the " +
                                       std::to_string(U.cols()) + " available spatial vectors");
  }
  const auto ne = static_cast<Eigen::Index>(n_eval);
  const double pixels = static_cast<double>(U.rows());

  Matrix centered = U.leftCols(ne).cwiseAbs();
  Vector sd(ne);
  for (Eigen::Index j = 0; j < ne; ++j) {
    centered.col(j).array() -= centered.col(j).mean();
    sd(j) = std::sqrt(centered.col(j).squaredNorm() / pixels);
  }

  SimilarityMatrix sim;
  sim.C = Matrix::Identity(ne, ne);
  for (Eigen::Index j = 0; j < ne; ++j) {
    if (sd(j) == 0.0) sim.zero_variance.push_back(static_cast<std::size_t>(j + 1));
  }
  for (Eigen::Index n = 0; n < ne; ++n) {
    for (Eigen::Index m = n + 1; m < ne; ++m) {
      double c = 0.0;
      if (sd(n) > 0.0 && sd(m) > 0.0) {
        c = centered.col(n).dot(centered.col(m)) / (pixels * sd(n) * sd(m));
        c = std::clamp(c, -1.0, 1.0);
      }
      sim.C(n, m) = c;
      sim.C(m, n) = c;
    }
  }
  return sim;
}

RankEstimate estimate_rank_spatial(const SimilarityMatrix& sim, double tau) {
  RankEstimate est;
  est.method = RankMethod::Spatial;
  est.k_hat = 1;
  const Eigen::Index ne = sim.C.rows();
  for (Eigen::Index k = 2; k <= ne; ++k) {
    const double row_mean = sim.C.row(k - 1).head(k - 1).mean();
    if (row_mean < tau) break;
    est.k_hat = static_cast<std::size_t>(k);
  }
  est.similarity = sim;
  return est;
}

std::size_t combine_ranks(const RankEstimate& temporal, const RankEstimate& spatial, RankPolicy policy) {
  switch (policy) {
    case RankPolicy::Min: return std::min(temporal.k_hat, spatial.k_hat);
    case RankPolicy::Max: return std::max(temporal.k_hat, spatial.k_hat);
    case RankPolicy::TemporalPriority: return temporal.k_hat;
  }
  return std::min(temporal.k_hat, spatial.k_hat);
}

std::pair<RankEstimate, RankEstimate> estimate_ranks(const Matrix& S, const RankSelectOptions& opts,
                                                     std::uint64_t seed) {
  const auto n_t = static_cast<std::size_t>(S.cols());
  if (n_t < kMinFramesForPsd) {
    throw Error(ErrorKind::InsufficientFrames, "rank estimation needs at least " +
                                                   std::to_string(kMinFramesForPsd) + " frames");
  }
  RsvdOptions ro;
  ro.seed = seed;
  const SvdFactors f = randomized_svd(S, std::min(opts.n_eval, n_t), ro);
  const std::size_t n_eval = f.rank();
  return {estimate_rank_temporal(f.V, n_eval, opts.floor_level),
          estimate_rank_spatial(spatial_similarity_matrix(f.U, n_eval), opts.tau)};
}

RankPolicy parse_rank_policy(const std::string& name) {
  if (name == "min") return RankPolicy::Min;
  if (name == "max") return RankPolicy::Max;
  if (name == "temporal-priority") return RankPolicy::TemporalPriority;
  throw Error(ErrorKind::Usage, "unknown rank policy '" + name + "' (expected min, max, temporal-priority)");
}

const char* to_string(RankPolicy policy) noexcept {
  switch (policy) {
    case RankPolicy::Min: return "min";
    case RankPolicy::Max: return "max";
    case RankPolicy::TemporalPriority: return "temporal-priority";
  }
  return "min";
}

void write_bandwidth_csv(std::ostream& out, const std::vector<double>& bandwidth) {
  out << "order,bandwidth\n";
  for (std::size_t i = 0; i < bandwidth.size(); ++i) out << (i + 1) << ',' << bandwidth[i] << '\n';
}

void write_similarity_csv(std::ostream& out, const SimilarityMatrix& sim) {
  for (Eigen::Index r = 0; r < sim.C.rows(); ++r) {
    for (Eigen::Index c = 0; c < sim.C.cols(); ++c) {
      if (c) out << ',';
      out << sim.C(r, c);
    }
    out << '\n';
  }
}

}  // namespace stsvd
