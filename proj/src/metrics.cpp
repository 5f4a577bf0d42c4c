#include "stsvd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "stsvd/error.hpp"

namespace stsvd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_shape(const Image& X, const Image& Y, const char* metric) {
  if (X.rows() != Y.rows() || X.cols() != Y.cols()) {
    throw Error(ErrorKind::Dimension, std::string(metric) + ": image shapes differ (" + std::to_string(X.rows()) +
                                          "x" + std::to_string(X.cols()) + " vs " + std::to_string(Y.rows()) +
                                          "x" + std::to_string(Y.cols()) + ")");
  }
  if (X.size() == 0) throw Error(ErrorKind::Dimension, std::string(metric) + ": empty image");
}

struct RoiStats {
  double mean = 0.0;
  double sd = 0.0;  // N - 1 divisor
};

RoiStats roi_stats(const Image& img, const Rect& r) {
  auto block = img.block(static_cast<Eigen::Index>(r.x0), static_cast<Eigen::Index>(r.z0),
                         static_cast<Eigen::Index>(r.width), static_cast<Eigen::Index>(r.height))
                   .cwiseAbs();
  const double n = static_cast<double>(r.area());
  RoiStats s;
  s.mean = block.sum() / n;
  s.sd = r.area() > 1 ? std::sqrt((block.array() - s.mean).square().sum() / (n - 1.0)) : 0.0;
  return s;
}

Rect parse_rect(const nlohmann::json& j) {
  Rect r;
  try {
    r.x0 = j.at("x0").get<std::size_t>();
    r.z0 = j.at("z0").get<std::size_t>();
    r.width = j.at("width").get<std::size_t>();
    r.height = j.at("height").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("ROI rectangle: ") + e.what());
  }
  return r;
}

void write_cell(std::ostream& out, const std::optional<double>& v) {
  out << ',';
  if (!v) return;
  if (std::isinf(*v)) {
    out << (*v > 0 ? "inf" : "-inf");
  } else {
    out << *v;
  }
}

}  // namespace

PsnrForm parse_psnr_form(const std::string& name) {
  if (name == "standard") return PsnrForm::Standard;
  if (name == "paper") return PsnrForm::Paper;
  throw Error(ErrorKind::Usage, "unknown PSNR form '" + name + "' (expected standard or paper)");
}

const char* to_string(PsnrForm form) noexcept {
  return form == PsnrForm::Paper ? "paper" : "standard";
}

double psnr(const Image& X, const Image& Y, PsnrForm form) {
  require_same_shape(X, Y, "psnr");
  const double mse = (X - Y).squaredNorm() / static_cast<double>(X.size());
  if (mse == 0.0) return kInf;
  const double peak = X.maxCoeff();
  const double num = form == PsnrForm::Standard ? peak * peak : peak;
  if (num <= 0.0) return -kInf;
  return 10.0 * std::log10(num / mse);
}

double ssim(const Image& X, const Image& Y) {
  require_same_shape(X, Y, "ssim");
  constexpr double L = 255.0;
  constexpr double C1 = (0.01 * L) * (0.01 * L);
  constexpr double C2 = (0.03 * L) * (0.03 * L);

  const double lo = std::min(X.minCoeff(), Y.minCoeff());
  const double hi = std::max(X.maxCoeff(), Y.maxCoeff());
  const double scale = hi > lo ? L / (hi - lo) : 1.0;
  const Eigen::ArrayXXd a = (X.array() - lo) * scale;
  const Eigen::ArrayXXd b = (Y.array() - lo) * scale;

  const double n = static_cast<double>(X.size());
  const double mu_x = a.sum() / n;
  const double mu_y = b.sum() / n;
  const double var_x = (a - mu_x).square().sum() / n;
  const double var_y = (b - mu_y).square().sum() / n;
  const double cov = ((a - mu_x) * (b - mu_y)).sum() / n;

  return ((2.0 * mu_x * mu_y + C1) * (2.0 * cov + C2)) /
         ((mu_x * mu_x + mu_y * mu_y + C1) * (var_x + var_y + C2));
}

Image laplacian_interior(const Image& img) {
  if (img.rows() < 3 || img.cols() < 3) {
    throw Error(ErrorKind::Dimension, "Laplacian needs an image of at least 3x3");
  }
  const Eigen::Index r = img.rows() - 2;
  const Eigen::Index c = img.cols() - 2;
  return 4.0 * img.block(1, 1, r, c) - img.block(0, 1, r, c) - img.block(2, 1, r, c) - img.block(1, 0, r, c) -
         img.block(1, 2, r, c);
}

std::optional<double> epi(const Image& X, const Image& Y) {
  require_same_shape(X, Y, "epi");
  Image lx = laplacian_interior(X);
  Image ly = laplacian_interior(Y);
  lx.array() -= lx.mean();
  ly.array() -= ly.mean();
  const double gxx = lx.squaredNorm();
  const double gyy = ly.squaredNorm();
  if (gxx == 0.0 || gyy == 0.0) return std::nullopt;
  const double r = lx.cwiseProduct(ly).sum() / std::sqrt(gxx * gyy);
  return std::clamp(r, -1.0, 1.0);
}

void RoiSet::validate(std::size_t n_x, std::size_t n_z) const {
  if (signal.empty() || noise.empty()) {
    throw Error(ErrorKind::Validation, "ROI set needs at least one signal and one noise rectangle");
  }
  const std::size_t area = signal.front().area();
  auto check = [&](const Rect& r, const char* kind) {
    if (r.width == 0 || r.height == 0 || r.x0 + r.width > n_x || r.z0 + r.height > n_z) {
      throw Error(ErrorKind::Validation, std::string(kind) + " ROI at (" + std::to_string(r.x0) + ", " +
                                             std::to_string(r.z0) + ") exceeds the " + std::to_string(n_x) +
                                             "x" + std::to_string(n_z) + " image");
    }
    if (r.area() != area) {
      throw Error(ErrorKind::Validation, "ROIs must all hold the same number of pixels");
    }
  };
  for (const auto& r : signal) check(r, "signal");
  for (const auto& r : noise) check(r, "noise");
  if (area < 2) throw Error(ErrorKind::Validation, "ROIs need at least 2 pixels");
}

RoiSet parse_rois(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("ROI file: ") + e.what());
  }
  RoiSet rois;
  for (const char* key : {"signal", "noise"}) {
    if (!j.contains(key) || !j[key].is_array()) {
      throw Error(ErrorKind::Parse, std::string("ROI file: missing array '") + key + "'");
    }
  }
  for (const auto& r : j["signal"]) rois.signal.push_back(parse_rect(r));
  for (const auto& r : j["noise"]) rois.noise.push_back(parse_rect(r));
  return rois;
}

RoiSet load_rois(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open ROI file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rois(ss.str());
}

double roi_snr(const Image& img, const RoiSet& rois) {
  rois.validate(static_cast<std::size_t>(img.rows()), static_cast<std::size_t>(img.cols()));
  double signal = 0.0;
  for (const auto& r : rois.signal) signal += roi_stats(img, r).mean;
  signal /= static_cast<double>(rois.signal.size());
  double noise_sd = 0.0;
  for (const auto& r : rois.noise) noise_sd += roi_stats(img, r).sd;
  noise_sd /= static_cast<double>(rois.noise.size());
  if (noise_sd == 0.0) return kInf;
  if (signal == 0.0) return -kInf;
  return 20.0 * std::log10(signal / noise_sd);
}

double roi_cnr(const Image& img, const RoiSet& rois) {
  rois.validate(static_cast<std::size_t>(img.rows()), static_cast<std::size_t>(img.cols()));
  double signal = 0.0;
  for (const auto& r : rois.signal) signal += roi_stats(img, r).mean;
  signal /= static_cast<double>(rois.signal.size());
  double noise_mean = 0.0;
  double noise_sd = 0.0;
  for (const auto& r : rois.noise) {
    const auto s = roi_stats(img, r);
    noise_mean += s.mean;
    noise_sd += s.sd;
  }
  noise_mean /= static_cast<double>(rois.noise.size());
  noise_sd /= static_cast<double>(rois.noise.size());
  if (noise_sd == 0.0) return kInf;
  return std::abs(signal - noise_mean) / noise_sd;
}

std::optional<double> fwhm(std::span<const double> profile, double dz_mm) {
  const std::size_t n = profile.size();
  if (n < 3) return std::nullopt;
  const auto peak_it = std::max_element(profile.begin(), profile.end());
  const double peak = *peak_it;
  if (!(peak > 0.0)) return std::nullopt;
  const double half = 0.5 * peak;

  // Flat top: extend the peak to the whole run of maximal samples.
  std::size_t lo = static_cast<std::size_t>(peak_it - profile.begin());
  std::size_t hi = lo;
  while (lo > 0 && profile[lo - 1] == peak) --lo;
  while (hi + 1 < n && profile[hi + 1] == peak) ++hi;

  std::optional<double> left;
  for (std::size_t i = lo; i > 0; --i) {
    const double a = profile[i - 1];
    const double b = profile[i];
    if (a <= half) {
      left = static_cast<double>(i - 1) + (half - a) / (b - a);
      break;
    }
  }
  std::optional<double> right;
  for (std::size_t i = hi; i + 1 < n; ++i) {
    const double a = profile[i];
    const double b = profile[i + 1];
    if (b <= half) {
      right = static_cast<double>(i) + (a - half) / (a - b);
      break;
    }
  }
  if (!left || !right) return std::nullopt;
  return (*right - *left) * dz_mm;
}

void write_metrics_header(std::ostream& out) {
  out << "frame_index,psnr_db,ssim,epi,snr_db,cnr,fwhm_mm\n";
}

void write_metrics_row(std::ostream& out, const MetricsReport& r) {
  const auto old_precision = out.precision(12);
  out << r.frame_index;
  write_cell(out, r.psnr_db);
  write_cell(out, r.ssim);
  write_cell(out, r.epi);
  write_cell(out, r.snr_db);
  write_cell(out, r.cnr);
  write_cell(out, r.fwhm_mm);
  out << '\n';
  out.precision(old_precision);
}

}  // namespace stsvd
