#include "stsvd/baselines.hpp"

#include <string>

#include "stsvd/error.hpp"

namespace stsvd {

FrameStack average_frames(const FrameStack& fs) {
  const std::size_t p = fs.meta().frame_size();
  std::vector<double> mean(p, 0.0);
  for (std::size_t t = 0; t < fs.n_t(); ++t) {
    const auto f = fs.frame_span(t);
    for (std::size_t i = 0; i < p; ++i) mean[i] += f[i];
  }
  const double inv = 1.0 / static_cast<double>(fs.n_t());
  for (double& v : mean) v *= inv;
  StackMeta meta = fs.meta();
  meta.n_t = 1;
  return FrameStack(meta, std::move(mean));
}

FrameStack sliding_average(const FrameStack& fs, std::size_t w) {
  if (w < 1 || w > fs.n_t()) {
    throw Error(ErrorKind::Bounds, "averaging window " + std::to_string(w) + " outside [1, " +
                                       std::to_string(fs.n_t()) + "]");
  }
  const std::size_t p = fs.meta().frame_size();
  std::vector<double> out(fs.samples().size());
  for (std::size_t t = 0; t < fs.n_t(); ++t) {
    const std::size_t first = t + 1 >= w ? t + 1 - w : 0;
    const double inv = 1.0 / static_cast<double>(t - first + 1);
    double* dst = out.data() + t * p;
    for (std::size_t s = first; s <= t; ++s) {
      const auto f = fs.frame_span(s);
      for (std::size_t i = 0; i < p; ++i) dst[i] += f[i];
    }
    for (std::size_t i = 0; i < p; ++i) dst[i] *= inv;
  }
  return FrameStack(fs.meta(), std::move(out));
}

}  // namespace stsvd
