#include <algorithm>
#include <cmath>
#include <string>

#include "stsvd/baselines.hpp"
#include "stsvd/error.hpp"

namespace stsvd {

namespace db4 {

const std::array<double, 8> kLowPass = {
    0.23037781330885523,  0.7148465705525415,   0.6308807679295904,  -0.02798376941698385,
    -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278,
};

std::array<double, 8> high_pass() {
  std::array<double, 8> g{};
  for (std::size_t k = 0; k < kTaps; ++k) {
    g[k] = (k % 2 == 0 ? 1.0 : -1.0) * kLowPass[kTaps - 1 - k];
  }
  return g;
}

}  // namespace db4

namespace {

void analysis_step(std::span<const double> x, std::vector<double>& approx, std::vector<double>& detail) {
  static const auto g = db4::high_pass();
  const std::size_t n = x.size();
  const std::size_t half = n / 2;
  approx.assign(half, 0.0);
  detail.assign(half, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    double a = 0.0;
    double d = 0.0;
    for (std::size_t k = 0; k < db4::kTaps; ++k) {
      const double v = x[(2 * i + k) % n];
      a += db4::kLowPass[k] * v;
      d += g[k] * v;
    }
    approx[i] = a;
    detail[i] = d;
  }
}

std::vector<double> synthesis_step(const std::vector<double>& approx, const std::vector<double>& detail) {
  static const auto g = db4::high_pass();
  const std::size_t half = approx.size();
  const std::size_t n = 2 * half;
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    for (std::size_t k = 0; k < db4::kTaps; ++k) {
      x[(2 * i + k) % n] += db4::kLowPass[k] * approx[i] + g[k] * detail[i];
    }
  }
  return x;
}

}  // namespace

std::size_t admissible_levels(std::size_t n, std::size_t requested) {
  std::size_t levels = 0;
  while (levels < requested) {
    const std::size_t block = std::size_t{1} << (levels + 1);
    if (n % block != 0 || n < block * db4::kTaps) break;
    ++levels;
  }
  return levels;
}

WaveletPyramid dwt_forward(std::span<const double> signal, std::size_t levels) {
  if (levels < 1) throw Error(ErrorKind::Level, "DWT needs at least one level");
  if (admissible_levels(signal.size(), levels) < levels) {
    throw Error(ErrorKind::Level, "signal of length " + std::to_string(signal.size()) + " cannot take " +
                                      std::to_string(levels) + " db4 levels (needs a multiple of 2^levels, >= 2^levels * 8)");
  }
  WaveletPyramid pyr;
  pyr.length = signal.size();
  std::vector<double> current(signal.begin(), signal.end());
  for (std::size_t l = 0; l < levels; ++l) {
    std::vector<double> approx;
    std::vector<double> detail;
    analysis_step(current, approx, detail);
    pyr.details.push_back(std::move(detail));
    current = std::move(approx);
  }
  pyr.approx = std::move(current);
  return pyr;
}

std::vector<double> dwt_inverse(const WaveletPyramid& pyramid) {
  std::vector<double> current = pyramid.approx;
  for (std::size_t l = pyramid.details.size(); l-- > 0;) {
    if (pyramid.details[l].size() != current.size()) {
      throw Error(ErrorKind::Level, "inconsistent wavelet pyramid at level " + std::to_string(l + 1));
    }
    current = synthesis_step(current, pyramid.details[l]);
  }
  return current;
}

double universal_threshold(double sigma, std::size_t n) {
  if (n <= 1) return 0.0;
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

double soft_threshold(double x, double lambda) {
  const double mag = std::abs(x) - lambda;
  if (mag <= 0.0) return 0.0;
  return std::copysign(mag, x);
}

double mad_sigma(std::span<const double> detail) {
  if (detail.empty()) return 0.0;
  std::vector<double> mags(detail.size());
  std::transform(detail.begin(), detail.end(), mags.begin(), [](double v) { return std::abs(v); });
  const std::size_t mid = mags.size() / 2;
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid), mags.end());
  double median = mags[mid];
  if (mags.size() % 2 == 0) {
    const double lower = *std::max_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return median / 0.6745;
}

DwtDenoiseResult dwt_denoise_frame(const Image& frame, const DwtOptions& opts) {
  const auto n_z = static_cast<std::size_t>(frame.cols());
  DwtDenoiseResult result;
  result.levels_used = admissible_levels(n_z, opts.levels);
  result.levels_reduced = result.levels_used < opts.levels;
  result.frame = frame;
  if (result.levels_used == 0) return result;

  std::vector<double> line(n_z);
  for (Eigen::Index x = 0; x < frame.rows(); ++x) {
    for (std::size_t z = 0; z < n_z; ++z) line[z] = frame(x, static_cast<Eigen::Index>(z));
    WaveletPyramid pyr = dwt_forward(line, result.levels_used);
    for (auto& band : pyr.details) {
      const double lambda = opts.threshold_scale * universal_threshold(mad_sigma(band), n_z);
      for (double& c : band) c = soft_threshold(c, lambda);
    }
    const auto rec = dwt_inverse(pyr);
    for (std::size_t z = 0; z < n_z; ++z) result.frame(x, static_cast<Eigen::Index>(z)) = rec[z];
  }
  return result;
}

FrameStack dwt_denoise(const FrameStack& fs, const DwtOptions& opts, std::size_t* levels_used) {
  std::vector<Image> frames;
  frames.reserve(fs.n_t());
  std::size_t used = opts.levels;
  for (std::size_t t = 0; t < fs.n_t(); ++t) {
    auto r = dwt_denoise_frame(fs.frame(t), opts);
    used = r.levels_used;
    frames.push_back(std::move(r.frame));
  }
  if (levels_used) *levels_used = used;
  return stack_from_frames(fs.meta(), frames);
}

}  // namespace stsvd
