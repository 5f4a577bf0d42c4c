#include <catch_amalgamated.hpp>

#include <cmath>

#include "stsvd/error.hpp"
#include "stsvd/phantom.hpp"

using namespace stsvd;
using Catch::Matchers::WithinAbs;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an stsvd::Error");
  return ErrorKind::Usage;
}

const PhantomGrid kSmall{40, 60, 0.25, 0.1};

double power_of(const FrameStack& fs) {
  double p = 0;
  for (double v : fs.samples()) p += v * v;
  return p / static_cast<double>(fs.samples().size());
}

}  // namespace

TEST_CASE("single vessel rasterization") {
  const Vessel v{3.0, 5.0, 0.4, 0.8};
  const auto pat = make_vessel_pattern({v}, kSmall);
  REQUIRE(pat.image.rows() == 40);
  REQUIRE(pat.image.cols() == 60);
  CHECK_THAT(pat.image(20, 30), WithinAbs(0.8, 1e-12));
  CHECK(pat.image.maxCoeff() == pat.image(20, 30));
  for (Eigen::Index x = 0; x < 40; ++x) {
    for (Eigen::Index z = 0; z < 60; ++z) {
      const double dx = static_cast<double>(x) * 0.25 - 5.0;
      const double dz = static_cast<double>(z) * 0.1 - 3.0;
      const double expected = 0.8 * std::exp(-(dx * dx + dz * dz) / (2 * 0.2 * 0.2));
      CHECK_THAT(pat.image(x, z), WithinAbs(expected, 1e-12));
    }
  }
  // Far from the axis the value is negligible.
  CHECK(pat.image(0, 0) < 1e-12);
}

TEST_CASE("overlapping vessels take the maximum") {
  const Vessel a{3.0, 5.0, 0.6, 0.5};
  const Vessel b{3.2, 5.0, 0.6, 0.9};
  const auto both = make_vessel_pattern({a, b}, kSmall).image;
  const auto ia = make_vessel_pattern({a}, kSmall).image;
  const auto ib = make_vessel_pattern({b}, kSmall).image;
  CHECK(both == ia.cwiseMax(ib));
  CHECK(both.maxCoeff() <= 1.0);
  CHECK(both.minCoeff() >= 0.0);
}

TEST_CASE("placement errors") {
  CHECK(kind_of([] { make_vessel_pattern({}, kSmall); }) == ErrorKind::Placement);
  CHECK(kind_of([] { make_vessel_pattern({{3.0, 50.0, 0.4, 1.0}}, kSmall); }) == ErrorKind::Placement);
  CHECK(kind_of([] { make_vessel_pattern({{-0.1, 5.0, 0.4, 1.0}}, kSmall); }) == ErrorKind::Placement);
  CHECK(kind_of([] { make_vessel_pattern({{3.0, 5.0, 0.0, 1.0}}, kSmall); }) == ErrorKind::Placement);
  CHECK(kind_of([] { make_vessel_pattern({{3.0, 5.0, 0.4, 1.5}}, kSmall); }) == ErrorKind::Placement);
}

TEST_CASE("default vessels sit between 10 and 20 mm depth") {
  const auto vs = default_vessels();
  CHECK(vs.size() >= 5);
  for (const auto& v : vs) {
    CHECK(v.center_z_mm >= 10.0);
    CHECK(v.center_z_mm <= 20.0);
  }
  const auto pat = make_vessel_pattern(vs, {});
  CHECK(pat.image.rows() == 128);
  CHECK(pat.image.cols() == 400);
  // Rows above 8 mm are essentially empty.
  CHECK(pat.image.leftCols(80).maxCoeff() < 1e-6);
}

TEST_CASE("fluence decay attenuates with depth") {
  const Vessel shallow{1.0, 5.0, 0.4, 1.0};
  const Vessel deep{5.0, 5.0, 0.4, 1.0};
  PatternOptions opts;
  opts.fluence_decay_mm = 2.0;
  const auto a = make_vessel_pattern({shallow}, kSmall, opts).image;
  const auto b = make_vessel_pattern({deep}, kSmall, opts).image;
  CHECK_THAT(a(20, 10), WithinAbs(std::exp(-0.5), 1e-12));
  CHECK_THAT(b(20, 50), WithinAbs(std::exp(-2.5), 1e-12));
  opts.fluence_decay_mm = 0.0;
  CHECK(kind_of([&] { make_vessel_pattern({shallow}, kSmall, opts); }) == ErrorKind::Validation);
}

TEST_CASE("schedule parsing") {
  const auto s = MotionSchedule::parse("25:0,25:1,25:2,25:-1");
  REQUIRE(s.groups.size() == 4);
  CHECK(s.total_frames() == 100);
  CHECK(s.groups[3].shift_mm == -1.0);
  CHECK(MotionSchedule::parse(s.to_string()).groups.size() == 4);
  CHECK(s.pixel_shifts(0.1) == std::vector<long>{0, 10, 20, -10});

  for (const char* bad : {"", "25", "25:x", "0:1", "2.5:1", "a:1", "10:1,", "10:1:2"}) {
    INFO(bad);
    CHECK(kind_of([&] { MotionSchedule::parse(bad); }) == ErrorKind::Schedule);
  }
  CHECK(kind_of([] { MotionSchedule::parse("5:0.05").pixel_shifts(0.1); }) == ErrorKind::Schedule);

  const auto four = four_group_schedule(75);
  CHECK(four.total_frames() == 75);
  CHECK(four.groups[0].frames == 19);
  CHECK(four.groups[3].frames == 18);
  CHECK(four.pixel_shifts(0.1) == std::vector<long>{0, 10, 20, -10});
  CHECK(kind_of([] { four_group_schedule(3); }) == ErrorKind::Schedule);
  CHECK(stationary_schedule(9).total_frames() == 9);
}

TEST_CASE("axial shifts") {
  Image img(2, 5);
  img << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  const Image s1 = shift_axial(img, 1);
  CHECK(s1(0, 0) == 5);
  CHECK(s1(0, 1) == 1);
  CHECK(shift_axial(img, 0) == img);
  CHECK(shift_axial(img, 5) == img);
  CHECK(shift_axial(shift_axial(img, 2), 4) == shift_axial(img, 6));
  CHECK(shift_axial(shift_axial(img, 3), -3) == img);
  CHECK_THAT(shift_axial(img, 3).squaredNorm(), WithinAbs(img.squaredNorm(), 1e-12));
}

TEST_CASE("framestacks follow the schedule") {
  const auto pat = make_vessel_pattern({{3.0, 5.0, 0.4, 1.0}}, kSmall);
  const StackMeta meta{40, 60, 12, 0.25, 0.1, 0.01};
  const auto fs = make_framestack(pat, MotionSchedule::parse("3:0,4:1,5:-0.5"), meta);
  REQUIRE(fs.n_t() == 12);
  CHECK(fs.frame(0) == pat.image);
  CHECK(fs.frame(2) == pat.image);
  CHECK(fs.frame(3) == shift_axial(pat.image, 10));
  CHECK(fs.frame(6) == fs.frame(3));
  CHECK(fs.frame(7) == shift_axial(pat.image, -5));
  CHECK(fs.frame(11) == fs.frame(7));
  // Absolute offsets, not cumulative.
  const auto rep = make_framestack(pat, MotionSchedule::parse("1:1,1:1"), meta);
  CHECK(rep.frame(0) == rep.frame(1));
  for (std::size_t t = 0; t < 12; ++t) CHECK_THAT(fs.frame(t).squaredNorm(), WithinAbs(pat.image.squaredNorm(), 1e-12));
}

TEST_CASE("calibrated noise") {
  const auto pat = make_vessel_pattern(default_vessels(), {});
  const auto clean = make_framestack(pat, stationary_schedule(100), {128, 400, 100, 0.3, 0.1, 0.01});

  const auto quiet = add_gaussian_noise(clean, 300.0, 1);
  double max_diff = 0;
  for (std::size_t i = 0; i < clean.samples().size(); ++i)
    max_diff = std::max(max_diff, std::abs(quiet.samples()[i] - clean.samples()[i]));
  CHECK(max_diff <= 1e-12);

  CHECK(add_gaussian_noise(clean, -10, 7) == add_gaussian_noise(clean, -10, 7));
  CHECK_FALSE(add_gaussian_noise(clean, -10, 7) == add_gaussian_noise(clean, -10, 8));

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto noisy = add_gaussian_noise(clean, -10.0, seed);
    double noise_power = 0, noise_mean = 0;
    for (std::size_t i = 0; i < clean.samples().size(); ++i) {
      const double n = noisy.samples()[i] - clean.samples()[i];
      noise_power += n * n;
      noise_mean += n;
    }
    const double N = static_cast<double>(clean.samples().size());
    noise_power /= N;
    noise_mean /= N;
    const double sigma = noise_sigma_for_snr(clean, -10.0);
    CHECK_THAT(10 * std::log10(power_of(clean) / noise_power), WithinAbs(-10.0, 0.1));
    CHECK(std::abs(noise_mean) <= 4 * sigma / std::sqrt(N));
  }

  CHECK(kind_of([] { add_gaussian_noise(FrameStack::zeros({2, 2, 2, 1, 1, 1}), 0, 1); }) == ErrorKind::UndefinedSnr);
}
