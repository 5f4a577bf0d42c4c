#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stsvd/framestack.hpp"

namespace stsvd {

// Reference metrics (denoised X against noise-free Y) and non-reference
// metrics (ROI statistics, axial FWHM). Identical inputs and zero noise
// deviations yield +infinity rather than an error.

enum class PsnrForm {
  Standard,  // 10 log10(max(X)^2 / MSE)
  Paper,     // 10 log10(max(X) / MSE), as printed without the square
};

PsnrForm parse_psnr_form(const std::string& name);
const char* to_string(PsnrForm form) noexcept;

double psnr(const Image& X, const Image& Y, PsnrForm form = PsnrForm::Standard);

/// Global single-window SSIM with L = 255 after mapping both images with
/// the shared affine rescale [min(X, Y), max(X, Y)] -> [0, 255].
/// Constants C1 = (0.01 L)^2, C2 = (0.03 L)^2; moments use 1/N.
double ssim(const Image& X, const Image& Y);

/// 4-neighbour discrete Laplacian (centre 4, edges -1) evaluated where the
/// full stencil fits, i.e. an (M - 2) x (N - 2) result.
Image laplacian_interior(const Image& img);

/// Normalized correlation of the mean-centred Laplacians. Empty when either
/// filtered image has zero variance.
std::optional<double> epi(const Image& X, const Image& Y);

struct Rect {
  std::size_t x0 = 0;
  std::size_t z0 = 0;
  std::size_t width = 1;   // along x
  std::size_t height = 1;  // along z

  std::size_t area() const noexcept { return width * height; }
};

struct RoiSet {
  std::vector<Rect> signal;
  std::vector<Rect> noise;

  /// >= 1 ROI of each kind, all inside the image, all with the same area
  /// (>= 2 pixels so the noise deviation is defined).
  void validate(std::size_t n_x, std::size_t n_z) const;
};

/// JSON: {"signal": [{"x0":..,"z0":..,"width":..,"height":..}, ...], "noise": [...]}
RoiSet load_rois(const std::filesystem::path& path);
RoiSet parse_rois(const std::string& json_text);

/// 20 log10(mean of signal-ROI mean amplitudes / mean of noise-ROI sample
/// deviations); amplitudes are |pixel|.
double roi_snr(const Image& img, const RoiSet& rois);

/// |mean signal amplitude - mean noise amplitude| / mean noise deviation.
double roi_cnr(const Image& img, const RoiSet& rois);

/// Full width at half maximum in mm. Crossings are linearly interpolated on
/// each side of the peak (a flat top is measured from its edges). Empty when
/// the profile does not drop below half maximum on both sides.
std::optional<double> fwhm(std::span<const double> profile, double dz_mm);

struct MetricsReport {
  std::size_t frame_index = 0;
  std::optional<double> psnr_db;
  std::optional<double> ssim;
  std::optional<double> epi;
  std::optional<double> snr_db;
  std::optional<double> cnr;
  std::optional<double> fwhm_mm;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsReport& report);

}  // namespace stsvd
