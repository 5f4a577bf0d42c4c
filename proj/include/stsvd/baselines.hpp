#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "stsvd/framestack.hpp"

namespace stsvd {

// Frame averaging.

/// Per-pixel mean over t; single-frame result.
FrameStack average_frames(const FrameStack& fs);

/// Frame t becomes the mean of frames [max(0, t - w + 1), t].
FrameStack sliding_average(const FrameStack& fs, std::size_t w);

// Daubechies-4 (8-tap) discrete wavelet transform with periodic extension.

namespace db4 {
/// Scaling (low-pass) analysis filter, normalized so the taps sum to sqrt(2).
extern const std::array<double, 8> kLowPass;
/// Quadrature mirror: g[k] = (-1)^k h[7 - k].
std::array<double, 8> high_pass();
inline constexpr std::size_t kTaps = 8;
}  // namespace db4

struct WaveletPyramid {
  std::vector<double> approx;
  /// details[0] is the finest level.
  std::vector<std::vector<double>> details;
  std::size_t length = 0;

  std::size_t levels() const noexcept { return details.size(); }
};

/// Deepest level count L <= requested with n divisible by 2^L and
/// n >= 2^L * 8. Returns 0 when no level fits.
std::size_t admissible_levels(std::size_t n, std::size_t requested);

WaveletPyramid dwt_forward(std::span<const double> signal, std::size_t levels);
std::vector<double> dwt_inverse(const WaveletPyramid& pyramid);

/// sigma * sqrt(2 ln n).
double universal_threshold(double sigma, std::size_t n);

double soft_threshold(double x, double lambda);

/// MAD noise estimate median(|d|) / 0.6745.
double mad_sigma(std::span<const double> detail);

struct DwtDenoiseResult {
  Image frame;
  std::size_t levels_used = 0;
  bool levels_reduced = false;
};

struct DwtOptions {
  std::size_t levels = 4;
  /// Multiplies every threshold; 0 turns the denoiser into the identity
  /// transform round trip.
  double threshold_scale = 1.0;
};

/// Per channel (row): decompose along z, estimate sigma per detail level by
/// MAD, soft-threshold every detail band with the universal threshold,
/// reconstruct. The approximation band is left untouched.
DwtDenoiseResult dwt_denoise_frame(const Image& frame, const DwtOptions& opts = {});

FrameStack dwt_denoise(const FrameStack& fs, const DwtOptions& opts = {}, std::size_t* levels_used = nullptr);

}  // namespace stsvd
