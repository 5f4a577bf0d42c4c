#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stsvd/framestack.hpp"

namespace stsvd {

// Desk-scale synthetic vascular data: parametric vessel cross-sections,
// group-wise axial motion and calibrated Gaussian noise.

/// Tube running perpendicular to the imaging plane; rasterized as
/// intensity * exp(-d^2 / (2 (radius / 2)^2)), d = distance to its axis.
struct Vessel {
  double center_z_mm = 0.0;
  double center_x_mm = 0.0;
  double radius_mm = 0.5;
  double intensity = 1.0;
};

struct PhantomGrid {
  std::size_t n_x = 128;
  std::size_t n_z = 400;
  double dx_mm = 0.3;
  double dz_mm = 0.1;
};

struct VesselPattern {
  Image image;  // n_x x n_z, values in [0, 1]
  std::vector<Vessel> vessels;
};

struct PatternOptions {
  /// Depth attenuation exp(-z / z0) standing in for the fluence gradient.
  std::optional<double> fluence_decay_mm;
};

/// Vessels placed between 10 and 20 mm depth across the default grid.
std::vector<Vessel> default_vessels();

VesselPattern make_vessel_pattern(const std::vector<Vessel>& vessels, const PhantomGrid& grid,
                                  const PatternOptions& opts = {});

struct MotionGroup {
  std::size_t frames = 1;
  double shift_mm = 0.0;  // absolute axial offset from the base pattern
};

struct MotionSchedule {
  std::vector<MotionGroup> groups;

  std::size_t total_frames() const noexcept;

  /// Parses "frames:shift_mm,frames:shift_mm,...". Throws Schedule naming the
  /// offending token.
  static MotionSchedule parse(const std::string& text);
  std::string to_string() const;

  /// Whole-pixel shifts for the given axial pitch; throws Schedule on a
  /// sub-pixel shift.
  std::vector<long> pixel_shifts(double dz_mm) const;
};

/// Stationary schedule: one group, zero shift.
MotionSchedule stationary_schedule(std::size_t frames);

/// The four-group 0 / +1 / +2 / -1 mm schedule spread over `frames`.
MotionSchedule four_group_schedule(std::size_t frames);

/// Circular shift along z by `pixels` (positive moves content deeper).
Image shift_axial(const Image& img, long pixels);

FrameStack make_framestack(const VesselPattern& pattern, const MotionSchedule& schedule, const StackMeta& meta);

/// Adds i.i.d. N(0, sigma^2) with sigma^2 = mean(clean^2) / 10^(snr_db / 10).
FrameStack add_gaussian_noise(const FrameStack& fs, double snr_db, std::uint64_t seed);

/// Noise standard deviation that add_gaussian_noise would use.
double noise_sigma_for_snr(const FrameStack& fs, double snr_db);

}  // namespace stsvd
