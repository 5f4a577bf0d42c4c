#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace stsvd {

/// Dense real matrix, column-major. A Casorati matrix is this type with one
/// column per frame and rows indexed by the spatial index p = x * n_z + z.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One frame: rows are channels (x), columns are axial samples (z), so the
/// row-major storage order coincides with the spatial index p.
using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct StackMeta {
  std::size_t n_x = 1;  // channels
  std::size_t n_z = 1;  // axial samples
  std::size_t n_t = 1;  // frames
  double dx_mm = 1.0;
  double dz_mm = 1.0;
  double dt_s = 1.0;

  std::size_t frame_size() const noexcept { return n_x * n_z; }
  std::size_t total() const noexcept { return n_x * n_z * n_t; }

  /// Throws Validation if any count is zero or any pitch is not positive.
  void validate() const;

  bool operator==(const StackMeta&) const = default;
};

/// Ordered frames of shape (n_x, n_z). Sample (t, x, z) lives at
/// t * (n_x * n_z) + x * n_z + z; nothing else in the code base computes
/// that offset by hand.
class FrameStack {
 public:
  FrameStack(StackMeta meta, std::vector<double> samples);

  /// All-zero stack of the given shape.
  static FrameStack zeros(const StackMeta& meta);

  const StackMeta& meta() const noexcept { return meta_; }
  std::size_t n_x() const noexcept { return meta_.n_x; }
  std::size_t n_z() const noexcept { return meta_.n_z; }
  std::size_t n_t() const noexcept { return meta_.n_t; }

  std::size_t index(std::size_t t, std::size_t x, std::size_t z) const noexcept {
    return t * meta_.frame_size() + x * meta_.n_z + z;
  }

  double at(std::size_t t, std::size_t x, std::size_t z) const noexcept {
    return samples_[index(t, x, z)];
  }

  std::span<const double> samples() const noexcept { return samples_; }
  std::span<const double> frame_span(std::size_t t) const;
  Image frame(std::size_t t) const;

  bool operator==(const FrameStack&) const = default;

 private:
  StackMeta meta_;
  std::vector<double> samples_;
};

/// Builds a stack from per-frame images that share one shape.
FrameStack stack_from_frames(const StackMeta& meta_template, const std::vector<Image>& frames);

/// Parsed header of a frame stack file pair.
struct StackHeader {
  StackMeta meta;
  std::filesystem::path data_path;  // resolved against the header directory
};

/// Parses and validates a header without touching the payload.
StackHeader read_stack_header(const std::filesystem::path& header_path);
void write_stack_header(const std::filesystem::path& header_path, const StackMeta& meta,
                        const std::string& data_file_name);

/// Encodes values as little-endian float32 (round-to-nearest-even); throws
/// Validation when a value overflows.
std::vector<char> encode_f32(std::span<const double> values);

/// Decodes little-endian float32 words and rejects non-finite values.
/// `first_offset` only labels error messages.
void decode_f32(std::span<const char> raw, std::span<double> out, std::size_t first_offset = 0);

/// Reads a JSON header plus its raw little-endian float32 payload.
FrameStack load_framestack(const std::filesystem::path& header_path);

/// Writes `<stem>.json` and the payload named in it (`<stem>.f32` next to the
/// header). Values are narrowed with round-to-nearest-even.
void save_framestack(const FrameStack& fs, const std::filesystem::path& header_path);

Matrix to_casorati(const FrameStack& fs);
FrameStack from_casorati(const Matrix& m, const StackMeta& meta);

/// Frames [start, start + len).
FrameStack slice_window(const FrameStack& fs, std::size_t start, std::size_t len);

}  // namespace stsvd
