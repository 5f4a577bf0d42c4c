#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "stsvd/cli.hpp"
#include "stsvd/error.hpp"

namespace stsvd {

MipAxis parse_mip_axis(const std::string& name) {
  if (name == "t") return MipAxis::T;
  if (name == "x") return MipAxis::X;
  if (name == "z") return MipAxis::Z;
  throw Error(ErrorKind::Usage, "unknown MIP axis '" + name + "' (expected t, x or z)");
}

Image display_frame(const FrameStack& fs, std::size_t t) {
  return fs.frame(t).cwiseAbs().transpose();
}

Image display_mip(const FrameStack& fs, MipAxis axis) {
  const auto nx = static_cast<Eigen::Index>(fs.n_x());
  const auto nz = static_cast<Eigen::Index>(fs.n_z());
  const auto nt = static_cast<Eigen::Index>(fs.n_t());
  Image out;
  switch (axis) {
    case MipAxis::T: out = Image::Zero(nz, nx); break;
    case MipAxis::X: out = Image::Zero(nz, nt); break;
    case MipAxis::Z: out = Image::Zero(nt, nx); break;
  }
  for (Eigen::Index t = 0; t < nt; ++t) {
    const Image f = fs.frame(static_cast<std::size_t>(t)).cwiseAbs();
    switch (axis) {
      case MipAxis::T: out = out.cwiseMax(f.transpose()); break;
      case MipAxis::X: out.col(t) = f.colwise().maxCoeff().transpose(); break;
      case MipAxis::Z: out.row(t) = f.rowwise().maxCoeff().transpose(); break;
    }
  }
  return out;
}

Gray8 log_compress(const Image& magnitude, double range_db) {
  if (!(range_db > 0.0) || !std::isfinite(range_db)) {
    throw Error(ErrorKind::Validation, "dynamic range must be a finite positive dB value");
  }
  Gray8 g;
  g.height = static_cast<std::size_t>(magnitude.rows());
  g.width = static_cast<std::size_t>(magnitude.cols());
  g.pixels.assign(g.width * g.height, 0);
  const double peak = magnitude.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) return g;
  for (Eigen::Index r = 0; r < magnitude.rows(); ++r) {
    for (Eigen::Index c = 0; c < magnitude.cols(); ++c) {
      const double a = std::abs(magnitude(r, c));
      if (a == 0.0) continue;
      const double db = std::max(20.0 * std::log10(a / peak), -range_db);
      const double level = std::round(255.0 * (db + range_db) / range_db);
      g.pixels[static_cast<std::size_t>(r) * g.width + static_cast<std::size_t>(c)] =
          static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
    }
  }
  return g;
}

void write_pgm(const std::filesystem::path& path, const Gray8& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

Gray8 read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string magic;
  int maxval = 0;
  Gray8 g;
  in >> magic >> g.width >> g.height >> maxval;
  if (magic != "P5" || maxval != 255 || !in) throw Error(ErrorKind::Parse, path.string() + " is not an 8-bit P5 PGM");
  in.get();
  g.pixels.resize(g.width * g.height);
  in.read(reinterpret_cast<char*>(g.pixels.data()), static_cast<std::streamsize>(g.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != g.pixels.size()) {
    throw Error(ErrorKind::Parse, path.string() + " has a truncated payload");
  }
  return g;
}

}  // namespace stsvd
