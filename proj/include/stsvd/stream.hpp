#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stsvd/framestack.hpp"
#include "stsvd/rankselect.hpp"
#include "stsvd/svdcore.hpp"

namespace stsvd {

// Sliding-window STSVD over a frame sequence. Window j starts at j * stride;
// the first window emits all its frames, every later one emits its newest
// `stride` frames. Frames past the last aligned window are covered by a final
// window ending at the last frame.

enum class RankMode { Fixed, AutoTemporal, AutoSpatial, AutoMin };

struct StreamRank {
  RankMode mode = RankMode::Fixed;
  std::size_t k = 1;  // Fixed only

  /// "<k>" | "auto-temporal" | "auto-spatial" | "auto-min"; Usage on anything else.
  static StreamRank parse(const std::string& text);
  std::string to_string() const;
};

struct StreamConfig {
  std::size_t window = 200;
  std::size_t stride = 50;
  StreamRank rank;
  RsvdOptions svd;
  RankSelectOptions select;
  bool threaded = true;

  /// Config with stride = window / 4 (at least 1).
  static StreamConfig with_window(std::size_t window);

  /// Throws Validation unless 1 <= stride <= window and fixed k <= window.
  void validate() const;
};

/// One raw frame; `samples` holds the (x, z) image in row-major order.
using FrameBuffer = std::vector<double>;

/// Stage boundary: anything that yields frames in order. A socket transport
/// plugs in here.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual const StackMeta& meta() const = 0;
  /// Next frame, or nullopt at end of stream.
  virtual std::optional<FrameBuffer> next() = 0;
};

class FrameSink {
 public:
  virtual ~FrameSink() = default;
  virtual void accept(std::size_t index, FrameBuffer frame) = 0;
  virtual void finish() {}
};

class StackSource : public FrameSource {
 public:
  explicit StackSource(const FrameStack& fs) : fs_(fs) {}
  const StackMeta& meta() const override { return fs_.meta(); }
  std::optional<FrameBuffer> next() override;

 private:
  const FrameStack& fs_;
  std::size_t t_ = 0;
};

/// Collects frames in memory; `stack()` requires every index 0..n-1 exactly once.
class StackSink : public FrameSink {
 public:
  explicit StackSink(StackMeta meta) : meta_(meta) {}
  void accept(std::size_t index, FrameBuffer frame) override;
  FrameStack stack() const;
  const std::vector<std::size_t>& order() const noexcept { return order_; }

 private:
  StackMeta meta_;
  std::vector<std::size_t> order_;
  std::vector<double> samples_;
};

/// Reads a frame stack file pair one frame at a time.
class FileFrameSource : public FrameSource {
 public:
  explicit FileFrameSource(const std::filesystem::path& header_path);
  const StackMeta& meta() const override { return meta_; }
  std::optional<FrameBuffer> next() override;

 private:
  StackMeta meta_;
  std::filesystem::path data_path_;
  std::ifstream in_;
  std::size_t t_ = 0;
};

/// Appends frames to `<stem>.f32` and writes the header on finish().
class FileFrameSink : public FrameSink {
 public:
  FileFrameSink(const std::filesystem::path& header_path, StackMeta meta);
  void accept(std::size_t index, FrameBuffer frame) override;
  void finish() override;

 private:
  std::filesystem::path header_path_;
  std::filesystem::path data_path_;
  StackMeta meta_;
  std::ofstream out_;
  std::size_t next_ = 0;
};

struct WindowRecord {
  std::size_t start = 0;
  std::size_t length = 0;
  std::size_t rank = 0;
  std::size_t emitted = 0;
  std::optional<RankEstimate> temporal;
  std::optional<RankEstimate> spatial;
};

struct StreamStats {
  std::size_t frames_in = 0;
  std::size_t frames_out = 0;
  std::size_t peak_buffered = 0;  // raw frames held in the input queue plus the window
  bool partial_window = false;
  std::vector<WindowRecord> windows;
  std::vector<std::string> warnings;
};

/// Runs the pipeline until the source is exhausted and the sink finished.
StreamStats stream_denoise(FrameSource& source, FrameSink& sink, const StreamConfig& cfg);

/// In-memory convenience wrapper.
FrameStack stream_denoise(const FrameStack& fs, const StreamConfig& cfg, StreamStats* stats = nullptr);

struct BenchDims {
  std::size_t n_x = 600;
  std::size_t n_z = 128;
  std::size_t n_t = 200;
};

struct BenchReport {
  BenchDims dims;
  std::size_t reps = 0;
  std::size_t rank = 1;
  std::size_t stride = 0;
  std::vector<double> rep_seconds;  // all reps, warm-up included
  double per_window_s = 0.0;        // median over reps after the first
  double per_frame_s = 0.0;         // per_window_s / stride
};

/// Times rsvd_denoise on one seeded random window of `dims`. Throws Validation
/// when reps < 3.
BenchReport bench(const BenchDims& dims, std::size_t reps, std::size_t rank, std::size_t stride,
                  const RsvdOptions& svd = {});

void write_bench_csv(std::ostream& out, const BenchReport& report);

}  // namespace stsvd
