#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <sstream>

#include "stsvd/error.hpp"
#include "stsvd/stream.hpp"
#include "support/oracles.hpp"

using namespace stsvd;
namespace fs = std::filesystem;

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

// Low-rank moving content plus noise, small enough for many runs.
FrameStack test_stack(std::size_t nx, std::size_t nz, std::size_t nt, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(nx * nz);
  Matrix S = oracle::random_gaussian(n, 3, seed) * oracle::random_gaussian(3, static_cast<Eigen::Index>(nt), seed + 1);
  S += 0.3 * oracle::random_gaussian(n, static_cast<Eigen::Index>(nt), seed + 2);
  return from_casorati(S, {nx, nz, nt, 0.3, 0.1, 0.01});
}

StreamConfig fixed(std::size_t window, std::size_t stride, std::size_t k, bool threaded) {
  StreamConfig cfg;
  cfg.window = window;
  cfg.stride = stride;
  cfg.rank = {RankMode::Fixed, k};
  cfg.threaded = threaded;
  return cfg;
}

// Per-window batch run following the emit rule, written out longhand.
FrameStack windowed_oracle(const FrameStack& fs, std::size_t w, std::size_t stride, std::size_t k) {
  const std::size_t n = fs.n_t();
  std::vector<Image> out(n);
  std::vector<bool> done(n, false);
  auto run = [&](std::size_t start, std::size_t len) {
    const auto block = rsvd_denoise(slice_window(fs, start, len), k);
    for (std::size_t j = 0; j < len; ++j) {
      if (!done[start + j]) {
        out[start + j] = block.frame(j);
        done[start + j] = true;
      }
    }
  };
  if (n < w) {
    run(0, n);
  } else {
    std::size_t start = 0;
    for (; start + w <= n; start += stride) run(start, w);
    if (!done[n - 1]) run(n - w, w);
  }
  return stack_from_frames(fs.meta(), out);
}

}  // namespace

TEST_CASE("one window over the whole stack equals the batch result") {
  const auto fs = test_stack(6, 10, 40, 1);
  for (bool threaded : {false, true}) {
    const auto streamed = stream_denoise(fs, fixed(40, 40, 3, threaded));
    CHECK(streamed == rsvd_denoise(fs, 3));
  }
}

TEST_CASE("stride equal to window is independent block processing") {
  const auto fs = test_stack(5, 8, 60, 2);
  const auto streamed = stream_denoise(fs, fixed(20, 20, 2, false));
  for (std::size_t b = 0; b < 3; ++b) {
    const auto block = rsvd_denoise(slice_window(fs, b * 20, 20), 2);
    for (std::size_t j = 0; j < 20; ++j) CHECK(streamed.frame(b * 20 + j) == block.frame(j));
  }
}

TEST_CASE("window 200 stride 50 over 400 frames follows the emit rule") {
  const auto fs = test_stack(4, 8, 400, 3);
  StreamStats stats;
  const auto streamed = stream_denoise(fs, fixed(200, 50, 3, true), &stats);
  CHECK(streamed == windowed_oracle(fs, 200, 50, 3));
  REQUIRE(stats.windows.size() == 5);
  CHECK(stats.windows[0].emitted == 200);
  CHECK(stats.windows[4].start == 200);
  CHECK(stats.windows[4].emitted == 50);
  CHECK(stats.frames_in == 400);
  CHECK(stats.frames_out == 400);
  CHECK(stats.peak_buffered <= 250);
}

TEST_CASE("rank-1 constant source passes through") {
  const Image pattern = oracle::random_gaussian(6, 9, 4);
  std::vector<Image> frames(90, pattern);
  const auto fs = stack_from_frames({6, 9, 90, 1, 1, 1}, frames);
  const auto out = stream_denoise(fs, fixed(30, 7, 1, true));
  for (std::size_t t = 0; t < 90; ++t) CHECK((out.frame(t) - pattern).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("random window and stride pairs") {
  std::mt19937_64 rng(11);
  const auto fs = test_stack(3, 6, 97, 5);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t w = 4 + rng() % 40;
    const std::size_t stride = 1 + rng() % w;
    const std::size_t k = 1 + rng() % 3;
    INFO("window " << w << " stride " << stride << " k " << k);

    StackSource src(fs);
    StackSink sink(fs.meta());
    const auto stats = stream_denoise(src, sink, fixed(w, stride, k, true));
    std::vector<std::size_t> expected(97);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(sink.order() == expected);
    CHECK(stats.peak_buffered <= w + stride);
    const auto threaded = sink.stack();

    CHECK(stream_denoise(fs, fixed(w, stride, k, false)) == threaded);
    CHECK(threaded == windowed_oracle(fs, w, stride, k));
  }
}

TEST_CASE("short source falls back to one partial window") {
  const auto fs = test_stack(3, 5, 12, 6);
  StreamStats stats;
  const auto out = stream_denoise(fs, fixed(20, 5, 2, true), &stats);
  CHECK(stats.partial_window);
  CHECK_FALSE(stats.warnings.empty());
  CHECK(out == rsvd_denoise(fs, 2));

  StreamConfig auto_cfg = fixed(20, 5, 1, false);
  auto_cfg.rank = StreamRank::parse("auto-min");
  StreamStats short_stats;
  stream_denoise(slice_window(fs, 0, 5), auto_cfg, &short_stats);
  REQUIRE(short_stats.windows.size() == 1);
  CHECK(short_stats.windows[0].rank == 1);
}

TEST_CASE("auto rank records both estimates") {
  const auto fs = test_stack(4, 6, 64, 7);
  StreamConfig cfg = StreamConfig::with_window(32);
  CHECK(cfg.stride == 8);
  cfg.rank = StreamRank::parse("auto-min");
  cfg.select.n_eval = 20;
  StreamStats stats;
  stream_denoise(fs, cfg, &stats);
  for (const auto& w : stats.windows) {
    REQUIRE(w.temporal);
    REQUIRE(w.spatial);
    CHECK(w.rank == std::min(w.temporal->k_hat, w.spatial->k_hat));
  }
}

TEST_CASE("file source and sink") {
  const auto dir = fs::temp_directory_path() / "stsvd_stream_files";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto stack = test_stack(4, 5, 30, 8);
  save_framestack(stack, dir / "in.json");
  const auto as_float = load_framestack(dir / "in.json");

  FileFrameSource src(dir / "in.json");
  FileFrameSink sink(dir / "out.json", src.meta());
  const auto cfg = fixed(10, 4, 2, true);
  stream_denoise(src, sink, cfg);
  const auto written = load_framestack(dir / "out.json");
  const auto expected = stream_denoise(as_float, cfg);
  REQUIRE(written.meta() == expected.meta());
  for (std::size_t i = 0; i < expected.samples().size(); ++i) {
    CHECK(written.samples()[i] == static_cast<double>(static_cast<float>(expected.samples()[i])));
  }

  // A truncated data file surfaces as a size mismatch.
  fs::resize_file(dir / "in.f32", 4 * 20 * 29 + 6);
  FileFrameSource bad(dir / "in.json");
  StackSink drop(bad.meta());
  CHECK(kind_of([&] { stream_denoise(bad, drop, fixed(10, 4, 2, true)); }) == ErrorKind::SizeMismatch);
}

TEST_CASE("stream configuration validation") {
  CHECK(kind_of([] { fixed(10, 0, 1, true).validate(); }) == ErrorKind::Validation);
  CHECK(kind_of([] { fixed(10, 11, 1, true).validate(); }) == ErrorKind::Validation);
  CHECK(kind_of([] { fixed(10, 5, 11, true).validate(); }) == ErrorKind::Validation);
  CHECK(kind_of([] { StreamRank::parse("three"); }) == ErrorKind::Usage);
  CHECK(kind_of([] { StreamRank::parse("0"); }) == ErrorKind::Usage);
  CHECK(StreamRank::parse("4").k == 4);
  CHECK(StreamRank::parse("auto-spatial").to_string() == "auto-spatial");
  CHECK(StreamConfig::with_window(3).stride == 1);
}

TEST_CASE("bench reports per-frame cost") {
  const auto r = bench({20, 10, 16}, 3, 1, 4);
  CHECK(r.rep_seconds.size() == 3);
  CHECK(r.per_window_s > 0);
  CHECK(r.per_frame_s == r.per_window_s / 4);
  std::ostringstream csv;
  write_bench_csv(csv, r);
  CHECK(csv.str().rfind("n_x,n_z,n_t,rank,stride,reps,per_window_s,per_frame_s\n20,10,16,1,4,3,", 0) == 0);
  CHECK(kind_of([] { bench({20, 10, 16}, 2, 1, 4); }) == ErrorKind::Validation);
  CHECK(kind_of([] { bench({20, 10, 16}, 3, 1, 17); }) == ErrorKind::Validation);
}
