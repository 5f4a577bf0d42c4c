#include "stsvd/stream.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "stsvd/error.hpp"
#include "stsvd/random.hpp"

namespace stsvd {

namespace {

template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 1)) {}

  /// Returns the queue size right after the push; false if closed.
  bool push(T item, std::size_t* size_after = nullptr) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    if (size_after) *size_after = items_.size();
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

void update_peak(std::atomic<std::size_t>& peak, std::size_t value) {
  std::size_t cur = peak.load();
  while (value > cur && !peak.compare_exchange_weak(cur, value)) {
  }
}

using Emit = std::function<void(std::size_t, FrameBuffer)>;

// Holds at most `window` raw frames and denoises whenever an aligned window
// is complete.
class WindowDenoiser {
 public:
  WindowDenoiser(const StreamConfig& cfg, const StackMeta& meta, Emit emit, StreamStats& stats)
      : cfg_(cfg), meta_(meta), emit_(std::move(emit)), stats_(stats) {}

  std::size_t buffered() const noexcept { return held_.load(); }

  void push(FrameBuffer frame) {
    if (frame.size() != meta_.frame_size()) {
      throw Error(ErrorKind::SizeMismatch, "stream frame holds " + std::to_string(frame.size()) +
                                               " samples, expected " + std::to_string(meta_.frame_size()));
    }
    if (buffer_.size() == cfg_.window) buffer_.pop_front();
    buffer_.push_back(std::move(frame));
    held_.store(buffer_.size());
    ++received_;
    if (received_ >= cfg_.window && (received_ - cfg_.window) % cfg_.stride == 0) process();
  }

  void finish() {
    if (next_emit_ == received_) return;
    if (received_ < cfg_.window) {
      stats_.partial_window = true;
      stats_.warnings.push_back("source ended after " + std::to_string(received_) + " frames, before one full " +
                                std::to_string(cfg_.window) + "-frame window; denoising the partial block");
    }
    process();
  }

 private:
  std::size_t choose_rank(const Matrix& S, WindowRecord& rec) {
    const std::size_t len = static_cast<std::size_t>(S.cols());
    if (cfg_.rank.mode == RankMode::Fixed) {
      if (cfg_.rank.k > len) {
        stats_.warnings.push_back("rank " + std::to_string(cfg_.rank.k) + " clamped to the " + std::to_string(len) +
                                  "-frame block");
      }
      return std::min(cfg_.rank.k, len);
    }
    if (len < kMinFramesForPsd) {
      stats_.warnings.push_back("block of " + std::to_string(len) + " frames too short for rank estimation; using k=1");
      return 1;
    }
    auto [temporal, spatial] = estimate_ranks(S, cfg_.select, cfg_.svd.seed);
    rec.temporal = temporal;
    rec.spatial = spatial;
    std::size_t k = 1;
    switch (cfg_.rank.mode) {
      case RankMode::AutoTemporal: k = temporal.k_hat; break;
      case RankMode::AutoSpatial: k = spatial.k_hat; break;
      default: k = combine_ranks(temporal, spatial, RankPolicy::Min); break;
    }
    return std::clamp<std::size_t>(k, 1, len);
  }

  void process() {
    const std::size_t len = buffer_.size();
    const std::size_t start = received_ - len;
    Matrix S(static_cast<Eigen::Index>(meta_.frame_size()), static_cast<Eigen::Index>(len));
    for (std::size_t j = 0; j < len; ++j) {
      S.col(static_cast<Eigen::Index>(j)) =
          Eigen::Map<const Vector>(buffer_[j].data(), static_cast<Eigen::Index>(buffer_[j].size()));
    }
    WindowRecord rec;
    rec.start = start;
    rec.length = len;
    rec.rank = choose_rank(S, rec);
    const Matrix P = rsvd_denoise(S, rec.rank, cfg_.svd);
    for (std::size_t t = next_emit_; t < received_; ++t) {
      const auto col = P.col(static_cast<Eigen::Index>(t - start));
      emit_(t, FrameBuffer(col.data(), col.data() + col.size()));
      ++rec.emitted;
    }
    next_emit_ = received_;
    stats_.windows.push_back(std::move(rec));
  }

  const StreamConfig& cfg_;
  const StackMeta& meta_;
  Emit emit_;
  StreamStats& stats_;
  std::deque<FrameBuffer> buffer_;
  std::atomic<std::size_t> held_{0};
  std::size_t received_ = 0;
  std::size_t next_emit_ = 0;
};

StreamStats run_single(FrameSource& source, FrameSink& sink, const StreamConfig& cfg) {
  StreamStats stats;
  WindowDenoiser den(
      cfg, source.meta(),
      [&](std::size_t t, FrameBuffer f) {
        sink.accept(t, std::move(f));
        ++stats.frames_out;
      },
      stats);
  while (auto frame = source.next()) {
    ++stats.frames_in;
    den.push(std::move(*frame));
    stats.peak_buffered = std::max(stats.peak_buffered, den.buffered());
  }
  den.finish();
  sink.finish();
  return stats;
}

StreamStats run_threaded(FrameSource& source, FrameSink& sink, const StreamConfig& cfg) {
  StreamStats stats;
  BoundedQueue<FrameBuffer> in_q(cfg.stride);
  BoundedQueue<std::pair<std::size_t, FrameBuffer>> out_q(cfg.stride);
  std::atomic<std::size_t> peak{0};
  std::atomic<std::size_t> frames_in{0};
  std::atomic<std::size_t> frames_out{0};
  std::exception_ptr producer_error;
  std::exception_ptr consumer_error;

  WindowDenoiser den(
      cfg, source.meta(), [&](std::size_t t, FrameBuffer f) { out_q.push({t, std::move(f)}); }, stats);

  std::thread producer([&] {
    try {
      while (auto frame = source.next()) {
        std::size_t queued = 0;
        if (!in_q.push(std::move(*frame), &queued)) break;
        ++frames_in;
        update_peak(peak, queued + den.buffered());
      }
    } catch (...) {
      producer_error = std::current_exception();
    }
    in_q.close();
  });

  std::thread consumer([&] {
    try {
      while (auto item = out_q.pop()) {
        sink.accept(item->first, std::move(item->second));
        ++frames_out;
      }
    } catch (...) {
      consumer_error = std::current_exception();
      out_q.close();
    }
  });

  std::exception_ptr stage_error;
  try {
    while (auto frame = in_q.pop()) {
      den.push(std::move(*frame));
      update_peak(peak, in_q.size() + den.buffered());
    }
    if (!producer_error) den.finish();
  } catch (...) {
    stage_error = std::current_exception();
    in_q.close();
  }
  out_q.close();
  producer.join();
  consumer.join();

  for (const auto& e : {producer_error, stage_error, consumer_error}) {
    if (e) std::rethrow_exception(e);
  }
  sink.finish();
  stats.frames_in = frames_in.load();
  stats.frames_out = frames_out.load();
  stats.peak_buffered = peak.load();
  return stats;
}

}  // namespace

StreamRank StreamRank::parse(const std::string& text) {
  if (text == "auto-temporal") return {RankMode::AutoTemporal, 0};
  if (text == "auto-spatial") return {RankMode::AutoSpatial, 0};
  if (text == "auto-min") return {RankMode::AutoMin, 0};
  std::size_t used = 0;
  long long k = 0;
  try {
    k = std::stoll(text, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || k < 1) {
    throw Error(ErrorKind::Usage,
                "rank '" + text + "' must be an integer >= 1 or auto-temporal, auto-spatial, auto-min");
  }
  return {RankMode::Fixed, static_cast<std::size_t>(k)};
}

std::string StreamRank::to_string() const {
  switch (mode) {
    case RankMode::AutoTemporal: return "auto-temporal";
    case RankMode::AutoSpatial: return "auto-spatial";
    case RankMode::AutoMin: return "auto-min";
    default: return std::to_string(k);
  }
}

StreamConfig StreamConfig::with_window(std::size_t window) {
  StreamConfig cfg;
  cfg.window = window;
  cfg.stride = std::max<std::size_t>(window / 4, 1);
  return cfg;
}

void StreamConfig::validate() const {
  if (window < 1 || stride < 1 || stride > window) {
    throw Error(ErrorKind::Validation, "stream needs 1 <= stride <= window (got stride " + std::to_string(stride) +
                                           ", window " + std::to_string(window) + ")");
  }
  if (rank.mode == RankMode::Fixed && (rank.k < 1 || rank.k > window)) {
    throw Error(ErrorKind::Validation,
                "fixed rank " + std::to_string(rank.k) + " must lie in [1, window=" + std::to_string(window) + "]");
  }
}

std::optional<FrameBuffer> StackSource::next() {
  if (t_ >= fs_.n_t()) return std::nullopt;
  auto s = fs_.frame_span(t_++);
  return FrameBuffer(s.begin(), s.end());
}

void StackSink::accept(std::size_t index, FrameBuffer frame) {
  order_.push_back(index);
  samples_.insert(samples_.end(), frame.begin(), frame.end());
}

FrameStack StackSink::stack() const {
  for (std::size_t i = 0; i < order_.size(); ++i) {
    if (order_[i] != i) {
      throw Error(ErrorKind::Validation, "stream emitted frame " + std::to_string(order_[i]) + " at position " +
                                             std::to_string(i));
    }
  }
  StackMeta m = meta_;
  m.n_t = order_.size();
  return FrameStack(m, samples_);
}

FileFrameSource::FileFrameSource(const std::filesystem::path& header_path) {
  const StackHeader header = read_stack_header(header_path);
  meta_ = header.meta;
  data_path_ = header.data_path;
  in_.open(data_path_, std::ios::binary);
  if (!in_) throw Error(ErrorKind::SizeMismatch, "frame stack data file " + data_path_.string() + " is missing");
}

std::optional<FrameBuffer> FileFrameSource::next() {
  const std::size_t bytes = meta_.frame_size() * sizeof(float);
  if (t_ >= meta_.n_t) {
    char extra = 0;
    if (in_.read(&extra, 1)) {
      throw Error(ErrorKind::SizeMismatch, "frame stack data file " + data_path_.string() + " has trailing bytes");
    }
    return std::nullopt;
  }
  std::vector<char> raw(bytes);
  in_.read(raw.data(), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in_.gcount()) != bytes) {
    throw Error(ErrorKind::SizeMismatch, "frame stack data file " + data_path_.string() + " ends inside frame " +
                                             std::to_string(t_));
  }
  FrameBuffer frame(meta_.frame_size());
  decode_f32(raw, frame, t_ * meta_.frame_size());
  ++t_;
  return frame;
}

FileFrameSink::FileFrameSink(const std::filesystem::path& header_path, StackMeta meta)
    : header_path_(header_path), data_path_(header_path), meta_(meta) {
  data_path_.replace_extension(".f32");
  out_.open(data_path_, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorKind::Io, "cannot write " + data_path_.string());
}

void FileFrameSink::accept(std::size_t index, FrameBuffer frame) {
  if (index != next_) {
    throw Error(ErrorKind::Validation, "sink received frame " + std::to_string(index) + ", expected " +
                                           std::to_string(next_));
  }
  const auto raw = encode_f32(frame);
  out_.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out_) throw Error(ErrorKind::Io, "short write to " + data_path_.string());
  ++next_;
}

void FileFrameSink::finish() {
  out_.close();
  StackMeta m = meta_;
  m.n_t = next_;
  write_stack_header(header_path_, m, data_path_.filename().string());
}

StreamStats stream_denoise(FrameSource& source, FrameSink& sink, const StreamConfig& cfg) {
  cfg.validate();
  return cfg.threaded ? run_threaded(source, sink, cfg) : run_single(source, sink, cfg);
}

FrameStack stream_denoise(const FrameStack& fs, const StreamConfig& cfg, StreamStats* stats) {
  StackSource source(fs);
  StackSink sink(fs.meta());
  StreamStats s = stream_denoise(source, sink, cfg);
  if (stats) *stats = std::move(s);
  return sink.stack();
}

BenchReport bench(const BenchDims& dims, std::size_t reps, std::size_t rank, std::size_t stride,
                  const RsvdOptions& svd) {
  if (reps < 3) throw Error(ErrorKind::Validation, "bench needs reps >= 3 (the first is discarded)");
  if (dims.n_x == 0 || dims.n_z == 0 || dims.n_t == 0) {
    throw Error(ErrorKind::Validation, "bench dimensions must all be >= 1");
  }
  if (stride < 1 || stride > dims.n_t) {
    throw Error(ErrorKind::Validation, "bench stride must lie in [1, n_t]");
  }
  const auto rows = static_cast<Eigen::Index>(dims.n_x * dims.n_z);
  const auto cols = static_cast<Eigen::Index>(dims.n_t);
  Matrix S(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      S(i, j) = standard_normal_at(svd.seed, RandomStream::Bench, static_cast<std::uint64_t>(j * rows + i));
    }
  }

  BenchReport report;
  report.dims = dims;
  report.reps = reps;
  report.rank = rank;
  report.stride = stride;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    Matrix P = rsvd_denoise(S, rank, svd);
    const auto t1 = std::chrono::steady_clock::now();
    if (P.size() == 0) throw Error(ErrorKind::Validation, "bench produced an empty result");
    report.rep_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::vector<double> timed(report.rep_seconds.begin() + 1, report.rep_seconds.end());
  std::sort(timed.begin(), timed.end());
  const std::size_t m = timed.size();
  report.per_window_s = m % 2 ? timed[m / 2] : 0.5 * (timed[m / 2 - 1] + timed[m / 2]);
  report.per_frame_s = report.per_window_s / static_cast<double>(stride);
  return report;
}

void write_bench_csv(std::ostream& out, const BenchReport& r) {
  const auto old = out.precision(9);
  out << "n_x,n_z,n_t,rank,stride,reps,per_window_s,per_frame_s\n";
  out << r.dims.n_x << ',' << r.dims.n_z << ',' << r.dims.n_t << ',' << r.rank << ',' << r.stride << ',' << r.reps
      << ',' << r.per_window_s << ',' << r.per_frame_s << '\n';
  out.precision(old);
}

}  // namespace stsvd
