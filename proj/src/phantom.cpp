#include "stsvd/phantom.hpp"

#include <cmath>
#include <sstream>

#include "stsvd/error.hpp"
#include "stsvd/random.hpp"

namespace stsvd {

std::vector<Vessel> default_vessels() {
  // {center_z, center_x, radius, intensity}; every tube lies within 10-20 mm depth.
  return {
      {11.0, 4.0, 0.6, 0.8},   {12.5, 9.5, 0.4, 1.0},   {14.0, 15.0, 0.8, 0.7}, {15.5, 21.0, 0.5, 0.9},
      {17.0, 27.0, 0.7, 0.6},  {18.5, 32.5, 0.4, 1.0},  {13.0, 33.0, 0.3, 0.5}, {19.0, 7.0, 0.9, 0.75},
      {16.0, 11.0, 0.35, 0.85}, {11.5, 24.0, 0.5, 0.65}, {19.5, 19.0, 0.45, 0.9}, {13.5, 28.5, 0.6, 0.55},
  };
}

VesselPattern make_vessel_pattern(const std::vector<Vessel>& vessels, const PhantomGrid& grid,
                                  const PatternOptions& opts) {
  if (grid.n_x == 0 || grid.n_z == 0 || !(grid.dx_mm > 0.0) || !(grid.dz_mm > 0.0)) {
    throw Error(ErrorKind::Validation, "phantom grid needs positive dimensions and pitches");
  }
  if (vessels.empty()) throw Error(ErrorKind::Placement, "vessel pattern needs at least one vessel");
  const double extent_x = static_cast<double>(grid.n_x - 1) * grid.dx_mm;
  const double extent_z = static_cast<double>(grid.n_z - 1) * grid.dz_mm;
  for (std::size_t i = 0; i < vessels.size(); ++i) {
    const auto& v = vessels[i];
    if (!(v.radius_mm > 0.0)) {
      throw Error(ErrorKind::Placement, "vessel " + std::to_string(i) + ": radius must be > 0");
    }
    if (!(v.intensity >= 0.0 && v.intensity <= 1.0)) {
      throw Error(ErrorKind::Placement, "vessel " + std::to_string(i) + ": intensity must lie in [0, 1]");
    }
    if (v.center_x_mm < 0.0 || v.center_x_mm > extent_x || v.center_z_mm < 0.0 || v.center_z_mm > extent_z) {
      throw Error(ErrorKind::Placement, "vessel " + std::to_string(i) + " centred outside the " +
                                            std::to_string(extent_x) + " x " + std::to_string(extent_z) +
                                            " mm grid");
    }
  }
  if (opts.fluence_decay_mm && !(*opts.fluence_decay_mm > 0.0)) {
    throw Error(ErrorKind::Validation, "fluence decay length must be > 0");
  }

  VesselPattern pattern;
  pattern.vessels = vessels;
  pattern.image = Image::Zero(static_cast<Eigen::Index>(grid.n_x), static_cast<Eigen::Index>(grid.n_z));
  for (Eigen::Index x = 0; x < pattern.image.rows(); ++x) {
    const double xm = static_cast<double>(x) * grid.dx_mm;
    for (Eigen::Index z = 0; z < pattern.image.cols(); ++z) {
      const double zm = static_cast<double>(z) * grid.dz_mm;
      double value = 0.0;
      for (const auto& v : vessels) {
        const double s = 0.5 * v.radius_mm;
        const double d2 = (xm - v.center_x_mm) * (xm - v.center_x_mm) + (zm - v.center_z_mm) * (zm - v.center_z_mm);
        value = std::max(value, v.intensity * std::exp(-d2 / (2.0 * s * s)));
      }
      if (opts.fluence_decay_mm) value *= std::exp(-zm / *opts.fluence_decay_mm);
      pattern.image(x, z) = value;
    }
  }
  return pattern;
}

std::size_t MotionSchedule::total_frames() const noexcept {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.frames;
  return n;
}

MotionSchedule MotionSchedule::parse(const std::string& text) {
  MotionSchedule schedule;
  if (!text.empty() && text.back() == ',') {
    throw Error(ErrorKind::Schedule, "schedule '" + text + "' ends with an empty group");
  }
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto colon = token.find(':');
    auto bad = [&](const std::string& why) {
      return Error(ErrorKind::Schedule, "schedule token '" + token + "': " + why);
    };
    if (colon == std::string::npos) throw bad("expected frames:shift_mm");
    const std::string frames_s = token.substr(0, colon);
    const std::string shift_s = token.substr(colon + 1);
    MotionGroup g;
    try {
      std::size_t used = 0;
      const long long frames = std::stoll(frames_s, &used);
      if (used != frames_s.size() || frames < 1) throw bad("frame count must be an integer >= 1");
      g.frames = static_cast<std::size_t>(frames);
      g.shift_mm = std::stod(shift_s, &used);
      if (used != shift_s.size() || !std::isfinite(g.shift_mm)) throw bad("shift must be a number in mm");
    } catch (const std::logic_error&) {
      throw bad("not a frames:shift_mm pair");
    }
    schedule.groups.push_back(g);
  }
  if (schedule.groups.empty()) throw Error(ErrorKind::Schedule, "schedule '" + text + "' has no groups");
  return schedule;
}

std::string MotionSchedule::to_string() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (i) out << ',';
    out << groups[i].frames << ':' << groups[i].shift_mm;
  }
  return out.str();
}

std::vector<long> MotionSchedule::pixel_shifts(double dz_mm) const {
  std::vector<long> shifts;
  shifts.reserve(groups.size());
  for (const auto& g : groups) {
    const double px = g.shift_mm / dz_mm;
    const double rounded = std::round(px);
    if (std::abs(px - rounded) > 1e-6) {
      throw Error(ErrorKind::Schedule, "shift " + std::to_string(g.shift_mm) + " mm is not a whole number of " +
                                           std::to_string(dz_mm) + " mm pixels");
    }
    shifts.push_back(static_cast<long>(rounded));
  }
  return shifts;
}

MotionSchedule stationary_schedule(std::size_t frames) {
  return MotionSchedule{{MotionGroup{frames, 0.0}}};
}

MotionSchedule four_group_schedule(std::size_t frames) {
  if (frames < 4) throw Error(ErrorKind::Schedule, "four-group schedule needs at least 4 frames");
  constexpr double shifts[] = {0.0, 1.0, 2.0, -1.0};
  MotionSchedule s;
  for (std::size_t g = 0; g < 4; ++g) {
    s.groups.push_back({frames / 4 + (g < frames % 4 ? 1 : 0), shifts[g]});
  }
  return s;
}

Image shift_axial(const Image& img, long pixels) {
  const long n = img.cols();
  Image out(img.rows(), img.cols());
  const long s = ((pixels % n) + n) % n;
  for (long z = 0; z < n; ++z) out.col((z + s) % n) = img.col(z);
  return out;
}

FrameStack make_framestack(const VesselPattern& pattern, const MotionSchedule& schedule, const StackMeta& meta) {
  const auto shifts = schedule.pixel_shifts(meta.dz_mm);
  StackMeta m = meta;
  m.n_x = static_cast<std::size_t>(pattern.image.rows());
  m.n_z = static_cast<std::size_t>(pattern.image.cols());
  m.n_t = schedule.total_frames();
  m.validate();

  std::vector<double> samples;
  samples.reserve(m.total());
  for (std::size_t g = 0; g < schedule.groups.size(); ++g) {
    const Image frame = shift_axial(pattern.image, shifts[g]);
    for (std::size_t i = 0; i < schedule.groups[g].frames; ++i) {
      samples.insert(samples.end(), frame.data(), frame.data() + frame.size());
    }
  }
  return FrameStack(m, std::move(samples));
}

double noise_sigma_for_snr(const FrameStack& fs, double snr_db) {
  double power = 0.0;
  for (double v : fs.samples()) power += v * v;
  power /= static_cast<double>(fs.samples().size());
  if (power == 0.0) throw Error(ErrorKind::UndefinedSnr, "cannot set an SNR on a stack with zero signal power");
  return std::sqrt(power / std::pow(10.0, snr_db / 10.0));
}

FrameStack add_gaussian_noise(const FrameStack& fs, double snr_db, std::uint64_t seed) {
  const double sigma = noise_sigma_for_snr(fs, snr_db);
  std::vector<double> noisy(fs.samples().begin(), fs.samples().end());
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    noisy[i] += sigma * standard_normal_at(seed, RandomStream::Noise, i);
  }
  return FrameStack(fs.meta(), std::move(noisy));
}

}  // namespace stsvd
