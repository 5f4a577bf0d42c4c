#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stsvd/framestack.hpp"

namespace stsvd {

/// Double-sided power spectra of temporal singular vectors, one row per
/// vector, DC in column 0, each row normalized to unit sum.
struct PsdTable {
  Matrix rows;
  double freq_resolution_hz = 0.0;  // 1 / (n_t * dt)
};

/// Pearson correlations between the magnitude images |u_n| of spatial
/// singular vectors.
struct SimilarityMatrix {
  Matrix C;
  /// Orders (1-based) whose magnitude image has zero variance; their
  /// off-diagonal correlations are reported as 0.
  std::vector<std::size_t> zero_variance;
};

enum class RankMethod { Temporal, Spatial };

struct RankEstimate {
  std::size_t k_hat = 1;
  RankMethod method = RankMethod::Temporal;
  bool no_noise_floor = false;     // temporal only: curve never reached the floor level
  std::vector<double> bandwidth;   // temporal diagnostics, one entry per order
  std::optional<SimilarityMatrix> similarity;  // spatial diagnostics
};

enum class RankPolicy { Min, Max, TemporalPriority };

struct RankSelectOptions {
  std::size_t n_eval = 75;          // capped at the available vectors
  double floor_level = 0.9;         // fraction of the full band marking the noise floor
  double tau = 0.3;                 // correlation-square threshold
};

constexpr std::size_t kMinFramesForPsd = 8;

PsdTable temporal_psd(const Matrix& V, std::size_t n_eval, double dt_s = 1.0);

/// Width of the smallest DC-centred interval (grown one bin at a time,
/// positive side first) holding >= 99 % of a normalized row, divided by n_t.
double bandwidth99(const Eigen::Ref<const Vector>& psd_row);

std::vector<double> bandwidth_curve(const PsdTable& psd);

/// k_hat = (first 1-based order whose 99 % bandwidth reaches floor_level) - 1,
/// clamped to >= 1. If no order reaches the floor, returns n_eval with
/// no_noise_floor set.
RankEstimate estimate_rank_temporal(const Matrix& V, std::size_t n_eval, double floor_level = 0.9);
RankEstimate estimate_rank_from_bandwidth(std::vector<double> bandwidth, double floor_level = 0.9);

SimilarityMatrix spatial_similarity_matrix(const Matrix& U, std::size_t n_eval);

/// Leading-block scan: grow k while the mean of C(k, 1..k-1) stays >= tau.
RankEstimate estimate_rank_spatial(const SimilarityMatrix& sim, double tau = 0.3);

std::size_t combine_ranks(const RankEstimate& temporal, const RankEstimate& spatial, RankPolicy policy);

/// Runs both estimators on a Casorati matrix (through the randomized SVD
/// with n_eval components).
std::pair<RankEstimate, RankEstimate> estimate_ranks(const Matrix& S, const RankSelectOptions& opts,
                                                     std::uint64_t seed = 0x5EED);

RankPolicy parse_rank_policy(const std::string& name);
const char* to_string(RankPolicy policy) noexcept;

/// CSV diagnostics for plotting: order,bandwidth and an n_eval x n_eval grid.
void write_bandwidth_csv(std::ostream& out, const std::vector<double>& bandwidth);
void write_similarity_csv(std::ostream& out, const SimilarityMatrix& sim);

}  // namespace stsvd
