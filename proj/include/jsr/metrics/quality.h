#pragma once

#include <limits>
#include <string>

#include "jsr/image/luma_image.h"

namespace jsr::metrics {

// Returned by Psnr() for identical images.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

// PSNR in dB on [0, 255]-scaled intensities (peak 255) after removing
// `shave` pixels from every side.
double Psnr(const image::LumaImage& a, const image::LumaImage& b, int shave = 0);

// Mean SSIM over all 11x11 Gaussian windows (sigma 1.5, K1 = 0.01,
// K2 = 0.03, L = 255) that fit inside the shaved images.
double Ssim(const image::LumaImage& a, const image::LumaImage& b, int shave = 0);

struct MetricReport {
  double psnr = 0.0;
  double ssim = 0.0;
  int border_shave = 0;
};

MetricReport Evaluate(const image::LumaImage& a, const image::LumaImage& b, int shave);

std::string FormatPsnr(double psnr);

}  // namespace jsr::metrics
