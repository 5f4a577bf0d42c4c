#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

#include "stsvd/baselines.hpp"
#include "stsvd/error.hpp"
#include "support/oracles.hpp"

using namespace stsvd;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

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

FrameStack random_stack(std::size_t nx, std::size_t nz, std::size_t nt, std::uint64_t seed) {
  const auto m = oracle::random_gaussian(static_cast<Eigen::Index>(nx * nz), static_cast<Eigen::Index>(nt), seed);
  return from_casorati(m, {nx, nz, nt, 1, 1, 1});
}

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

double energy(const std::vector<double>& x) {
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
}

}  // namespace

TEST_CASE("average_frames") {
  const auto one = random_stack(3, 4, 1, 1);
  std::vector<Image> copies(6, one.frame(0));
  CHECK(average_frames(stack_from_frames(one.meta(), copies)).frame(0).isApprox(one.frame(0), 1e-15));

  const FrameStack two({1, 1, 2, 1, 1, 1}, {0.0, 2.0});
  CHECK(average_frames(two).at(0, 0, 0) == 1.0);

  const auto r = random_stack(3, 4, 50, 2);
  const auto avg = average_frames(r);
  CHECK(avg.n_t() == 1);
  for (std::size_t x = 0; x < 3; ++x) {
    for (std::size_t z = 0; z < 4; ++z) {
      double s = 0;
      for (std::size_t t = 0; t < 50; ++t) s += r.at(t, x, z);
      CHECK_THAT(avg.at(0, x, z), WithinAbs(s / 50, 1e-12));
    }
  }

  // Permutation invariance in t.
  std::vector<Image> frames;
  for (std::size_t t = 0; t < 50; ++t) frames.push_back(r.frame(49 - t));
  CHECK(average_frames(stack_from_frames(r.meta(), frames)).frame(0).isApprox(avg.frame(0), 1e-13));
}

TEST_CASE("sliding_average") {
  const auto r = random_stack(2, 3, 12, 3);
  CHECK(sliding_average(r, 1) == r);
  CHECK(sliding_average(r, 12).frame(11).isApprox(average_frames(r).frame(0), 1e-13));
  const auto s5 = sliding_average(r, 5);
  REQUIRE(s5.n_t() == 12);
  for (std::size_t t = 0; t < 12; ++t) {
    const std::size_t lo = t >= 4 ? t - 4 : 0;
    for (std::size_t x = 0; x < 2; ++x) {
      for (std::size_t z = 0; z < 3; ++z) {
        double s = 0;
        for (std::size_t u = lo; u <= t; ++u) s += r.at(u, x, z);
        CHECK_THAT(s5.at(t, x, z), WithinAbs(s / static_cast<double>(t - lo + 1), 1e-12));
      }
    }
  }
  CHECK(kind_of([&] { sliding_average(r, 0); }) == ErrorKind::Bounds);
  CHECK(kind_of([&] { sliding_average(r, 13); }) == ErrorKind::Bounds);
}

TEST_CASE("db4 filter satisfies the defining conditions") {
  const auto& h = db4::kLowPass;
  const auto g = db4::high_pass();
  double sum = 0, sq = 0;
  for (double v : h) {
    sum += v;
    sq += v * v;
  }
  CHECK_THAT(sum, WithinAbs(std::sqrt(2.0), 1e-12));
  CHECK_THAT(sq, WithinAbs(1.0, 1e-12));
  // Double-shift orthogonality.
  for (std::size_t m = 1; m < 4; ++m) {
    double acc = 0;
    for (std::size_t k = 0; k + 2 * m < 8; ++k) acc += h[k] * h[k + 2 * m];
    CHECK_THAT(acc, WithinAbs(0.0, 1e-12));
  }
  // Four vanishing moments of the wavelet.
  for (int p = 0; p < 4; ++p) {
    double acc = 0;
    for (std::size_t k = 0; k < 8; ++k) acc += std::pow(static_cast<double>(k), p) * g[k];
    CHECK_THAT(acc, WithinAbs(0.0, 1e-12 * std::pow(8.0, p)));
  }
  // Quadrature mirror orthogonality between h and g.
  for (std::size_t m = 0; m < 4; ++m) {
    double acc = 0;
    for (std::size_t k = 0; k + 2 * m < 8; ++k) acc += h[k + 2 * m] * g[k];
    CHECK_THAT(acc, WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("DWT round trip and Parseval") {
  std::vector<double> zero(64, 0.0);
  const auto pz = dwt_forward(zero, 3);
  for (double v : pz.approx) CHECK(v == 0.0);
  for (const auto& d : pz.details)
    for (double v : d) CHECK(v == 0.0);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto x = random_signal(512, seed);
    const auto p = dwt_forward(x, 4);
    CHECK(p.levels() == 4);
    CHECK(p.details[0].size() == 256);
    CHECK(p.approx.size() == 32);
    const auto y = dwt_inverse(p);
    double err = 0;
    for (std::size_t i = 0; i < x.size(); ++i) err += (x[i] - y[i]) * (x[i] - y[i]);
    CHECK(std::sqrt(err / energy(x)) <= 1e-10);

    double coeff = energy(p.approx);
    for (const auto& d : p.details) coeff += energy(d);
    CHECK_THAT(coeff, WithinRel(energy(x), 1e-10));
  }
}

TEST_CASE("DWT level admissibility") {
  CHECK(admissible_levels(400, 4) == 4);
  CHECK(admissible_levels(100, 4) == 2);
  CHECK(admissible_levels(7, 4) == 0);
  CHECK(kind_of([] { dwt_forward(std::vector<double>(64, 0.0), 4); }) == ErrorKind::Level);
  CHECK(kind_of([] { dwt_forward(std::vector<double>(64, 0.0), 0); }) == ErrorKind::Level);
}

TEST_CASE("thresholds") {
  CHECK(universal_threshold(0.0, 1024) == 0.0);
  CHECK(universal_threshold(2.0, 1) == 0.0);
  CHECK_THAT(universal_threshold(1.0, 1024), WithinAbs(3.72330, 1e-5));
  CHECK_THAT(universal_threshold(1.0, 1024), WithinAbs(std::sqrt(2 * std::log(1024.0)), 1e-15));
  CHECK(soft_threshold(3, 1) == 2);
  CHECK(soft_threshold(-0.5, 1) == 0);
  CHECK(soft_threshold(-3, 1) == -2);

  std::vector<double> d{1, -2, 3, -4, 5};
  CHECK_THAT(mad_sigma(d), WithinAbs(3.0 / 0.6745, 1e-12));
}

TEST_CASE("DWT denoising of single frames") {
  const Image z = Image::Zero(3, 256);
  CHECK(dwt_denoise_frame(z).frame.isZero());

  // Cubic along z sits in the approximation band up to the periodic seam.
  Image poly(2, 512);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> tiny(0.0, 1e-10);
  for (Eigen::Index x = 0; x < 2; ++x) {
    for (Eigen::Index i = 0; i < 512; ++i) {
      const double u = static_cast<double>(i) / 512.0;
      poly(x, i) = 1.0 + 2.0 * u - 3.0 * u * u + 0.5 * u * u * u + tiny(rng);
    }
  }
  const auto pd = dwt_denoise_frame(poly);
  CHECK((pd.frame - poly).norm() <= 1e-6 * poly.norm());

  // lambda forced to zero is the identity.
  const Image r = oracle::random_gaussian(4, 256, 3);
  DwtOptions off;
  off.threshold_scale = 0.0;
  CHECK((dwt_denoise_frame(r, off).frame - r).norm() <= 1e-10 * r.norm());

  // Contraction.
  CHECK(dwt_denoise_frame(r).frame.norm() <= r.norm() * (1 + 1e-12));

  // Level reduction is reported.
  const auto short_row = dwt_denoise_frame(oracle::random_gaussian(1, 100, 4));
  CHECK(short_row.levels_used == 2);
  CHECK(short_row.levels_reduced);
}

TEST_CASE("DWT removes most white noise from a flat line") {
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Image f = oracle::random_gaussian(1, 1024, seed);
    f.array() += 5.0;
    const Image d = dwt_denoise_frame(f).frame;
    const double out_var = (d.array() - 5.0).square().mean();
    if (out_var <= 0.25) ++ok;
  }
  CHECK(ok == 100);
}

TEST_CASE("stack-level DWT preserves metadata") {
  const auto r = random_stack(2, 128, 3, 5);
  std::size_t used = 0;
  const auto d = dwt_denoise(r, {}, &used);
  CHECK(d.meta() == r.meta());
  CHECK(used == 4);
  CHECK(d.frame(1).isApprox(dwt_denoise_frame(r.frame(1)).frame, 1e-15));
}
