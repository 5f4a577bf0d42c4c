#include "stsvd/framestack.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "stsvd/error.hpp"

namespace stsvd {

namespace {

using nlohmann::json;

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

template <typename T>
T require_field(const json& header, const char* name) {
  auto it = header.find(name);
  if (it == header.end()) {
    throw Error(ErrorKind::Parse, std::string("frame stack header: missing field '") + name + "'");
  }
  try {
    if constexpr (std::is_same_v<T, std::size_t>) {
      if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
        throw Error(ErrorKind::Parse,
                    std::string("frame stack header: field '") + name + "' must be a non-negative integer");
      }
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) {
        throw Error(ErrorKind::Parse, std::string("frame stack header: field '") + name + "' must be a number");
      }
    } else {
      if (!it->is_string()) {
        throw Error(ErrorKind::Parse, std::string("frame stack header: field '") + name + "' must be a string");
      }
    }
    return it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("frame stack header: field '") + name + "': " + e.what());
  }
}

constexpr const char* kHeaderKeys[] = {"n_x", "n_z", "n_t", "dx_mm", "dz_mm", "dt_s", "data_file"};

}  // namespace

void StackMeta::validate() const {
  if (n_x == 0 || n_z == 0 || n_t == 0) {
    throw Error(ErrorKind::Validation, "frame stack dimensions must all be >= 1");
  }
  if (!(dx_mm > 0.0) || !(dz_mm > 0.0) || !(dt_s > 0.0) || !std::isfinite(dx_mm) ||
      !std::isfinite(dz_mm) || !std::isfinite(dt_s)) {
    throw Error(ErrorKind::Validation, "frame stack pitches dx_mm, dz_mm, dt_s must be finite and > 0");
  }
}

FrameStack::FrameStack(StackMeta meta, std::vector<double> samples)
    : meta_(meta), samples_(std::move(samples)) {
  meta_.validate();
  if (samples_.size() != meta_.total()) {
    throw Error(ErrorKind::SizeMismatch, "frame stack holds " + std::to_string(samples_.size()) +
                                             " samples, expected " + std::to_string(meta_.total()));
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      throw Error(ErrorKind::Validation, "non-finite sample at offset " + std::to_string(i));
    }
  }
}

FrameStack FrameStack::zeros(const StackMeta& meta) {
  meta.validate();
  return FrameStack(meta, std::vector<double>(meta.total(), 0.0));
}

std::span<const double> FrameStack::frame_span(std::size_t t) const {
  if (t >= meta_.n_t) {
    throw Error(ErrorKind::Bounds, "frame index " + std::to_string(t) + " out of range [0, " +
                                       std::to_string(meta_.n_t) + ")");
  }
  return std::span<const double>(samples_).subspan(t * meta_.frame_size(), meta_.frame_size());
}

Image FrameStack::frame(std::size_t t) const {
  auto s = frame_span(t);
  return Eigen::Map<const Image>(s.data(), static_cast<Eigen::Index>(meta_.n_x),
                                 static_cast<Eigen::Index>(meta_.n_z));
}

FrameStack stack_from_frames(const StackMeta& meta_template, const std::vector<Image>& frames) {
  if (frames.empty()) {
    throw Error(ErrorKind::Dimension, "cannot build a frame stack from zero frames");
  }
  StackMeta meta = meta_template;
  meta.n_x = static_cast<std::size_t>(frames.front().rows());
  meta.n_z = static_cast<std::size_t>(frames.front().cols());
  meta.n_t = frames.size();
  std::vector<double> samples;
  samples.reserve(meta.total());
  for (const auto& f : frames) {
    if (static_cast<std::size_t>(f.rows()) != meta.n_x || static_cast<std::size_t>(f.cols()) != meta.n_z) {
      throw Error(ErrorKind::Dimension, "frames passed to stack_from_frames differ in shape");
    }
    samples.insert(samples.end(), f.data(), f.data() + f.size());
  }
  return FrameStack(meta, std::move(samples));
}

StackHeader read_stack_header(const std::filesystem::path& header_path) {
  std::ifstream hin(header_path);
  if (!hin) {
    throw Error(ErrorKind::Io, "cannot open frame stack header " + header_path.string());
  }
  json header;
  try {
    hin >> header;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, "frame stack header " + header_path.string() + ": " + e.what());
  }
  if (!header.is_object()) {
    throw Error(ErrorKind::Parse, "frame stack header must be a JSON object");
  }
  for (const auto& [key, _] : header.items()) {
    bool known = false;
    for (const char* k : kHeaderKeys) known = known || key == k;
    if (!known) {
      throw Error(ErrorKind::Parse, "frame stack header: unexpected field '" + key + "'");
    }
  }

  StackHeader out;
  out.meta.n_x = require_field<std::size_t>(header, "n_x");
  out.meta.n_z = require_field<std::size_t>(header, "n_z");
  out.meta.n_t = require_field<std::size_t>(header, "n_t");
  out.meta.dx_mm = require_field<double>(header, "dx_mm");
  out.meta.dz_mm = require_field<double>(header, "dz_mm");
  out.meta.dt_s = require_field<double>(header, "dt_s");
  out.data_path = require_field<std::string>(header, "data_file");
  out.meta.validate();
  if (out.data_path.is_relative()) out.data_path = header_path.parent_path() / out.data_path;
  return out;
}

void write_stack_header(const std::filesystem::path& header_path, const StackMeta& m,
                        const std::string& data_file_name) {
  json header = {{"n_x", m.n_x},       {"n_z", m.n_z},     {"n_t", m.n_t},
                 {"dx_mm", m.dx_mm},   {"dz_mm", m.dz_mm}, {"dt_s", m.dt_s},
                 {"data_file", data_file_name}};
  std::ofstream hout(header_path, std::ios::trunc);
  if (!hout) throw Error(ErrorKind::Io, "cannot write " + header_path.string());
  hout << header.dump(2) << '\n';
  if (!hout) throw Error(ErrorKind::Io, "short write to " + header_path.string());
}

void decode_f32(std::span<const char> raw, std::span<double> out, std::size_t first_offset) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t word;
    std::memcpy(&word, raw.data() + i * sizeof(float), sizeof(word));
    out[i] = static_cast<double>(std::bit_cast<float>(to_little_endian(word)));
    if (!std::isfinite(out[i])) {
      throw Error(ErrorKind::Validation, "non-finite sample at offset " + std::to_string(first_offset + i));
    }
  }
}

FrameStack load_framestack(const std::filesystem::path& header_path) {
  const StackHeader header = read_stack_header(header_path);
  const StackMeta& meta = header.meta;
  const auto& data_path = header.data_path;

  std::ifstream din(data_path, std::ios::binary);
  if (!din) {
    throw Error(ErrorKind::SizeMismatch, "frame stack data file " + data_path.string() + " is missing");
  }
  const std::size_t expected_bytes = meta.total() * sizeof(float);
  std::vector<char> raw(expected_bytes);
  din.read(raw.data(), static_cast<std::streamsize>(expected_bytes));
  const auto got = static_cast<std::size_t>(din.gcount());
  char extra = 0;
  const bool trailing = got == expected_bytes && static_cast<bool>(din.read(&extra, 1));
  if (got != expected_bytes || trailing) {
    throw Error(ErrorKind::SizeMismatch, "frame stack data file " + data_path.string() + " holds " +
                                             (trailing ? std::string("more than ") : std::to_string(got) + " ") +
                                             "bytes, expected " + std::to_string(expected_bytes));
  }

  std::vector<double> samples(meta.total());
  decode_f32(raw, samples);
  return FrameStack(meta, std::move(samples));
}

std::vector<char> encode_f32(std::span<const double> values) {
  std::vector<char> raw(values.size() * sizeof(float));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = static_cast<float>(values[i]);
    if (!std::isfinite(f)) {
      throw Error(ErrorKind::Validation, "sample at offset " + std::to_string(i) + " overflows float32");
    }
    const std::uint32_t word = to_little_endian(std::bit_cast<std::uint32_t>(f));
    std::memcpy(raw.data() + i * sizeof(float), &word, sizeof(word));
  }
  return raw;
}

void save_framestack(const FrameStack& fs, const std::filesystem::path& header_path) {
  std::filesystem::path data_path = header_path;
  data_path.replace_extension(".f32");

  const auto raw = encode_f32(fs.samples());
  std::ofstream dout(data_path, std::ios::binary | std::ios::trunc);
  if (!dout) throw Error(ErrorKind::Io, "cannot write " + data_path.string());
  dout.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!dout) throw Error(ErrorKind::Io, "short write to " + data_path.string());
  dout.close();
  write_stack_header(header_path, fs.meta(), data_path.filename().string());
}

Matrix to_casorati(const FrameStack& fs) {
  // Frame t is contiguous in the (t, x, z) layout and its offsets within the
  // frame are exactly p, so the sample buffer is the column-major matrix.
  return Eigen::Map<const Matrix>(fs.samples().data(), static_cast<Eigen::Index>(fs.meta().frame_size()),
                                  static_cast<Eigen::Index>(fs.n_t()));
}

FrameStack from_casorati(const Matrix& m, const StackMeta& meta) {
  meta.validate();
  if (static_cast<std::size_t>(m.rows()) != meta.frame_size() || static_cast<std::size_t>(m.cols()) != meta.n_t) {
    throw Error(ErrorKind::Dimension, "Casorati matrix is " + std::to_string(m.rows()) + "x" +
                                          std::to_string(m.cols()) + ", metadata expects " +
                                          std::to_string(meta.frame_size()) + "x" + std::to_string(meta.n_t));
  }
  return FrameStack(meta, std::vector<double>(m.data(), m.data() + m.size()));
}

FrameStack slice_window(const FrameStack& fs, std::size_t start, std::size_t len) {
  if (len == 0 || start > fs.n_t() || len > fs.n_t() - start) {
    throw Error(ErrorKind::Bounds, "window [" + std::to_string(start) + ", " + std::to_string(start + len) +
                                       ") outside stack of " + std::to_string(fs.n_t()) + " frames");
  }
  StackMeta meta = fs.meta();
  meta.n_t = len;
  auto first = fs.samples().begin() + static_cast<std::ptrdiff_t>(start * meta.frame_size());
  return FrameStack(meta, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(len * meta.frame_size())));
}

}  // namespace stsvd
