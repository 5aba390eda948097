#include "jsr/metrics/quality.h"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace jsr::metrics {
namespace {

constexpr double kPeak = 255.0;

image::LumaImage Shaved(const image::LumaImage& img, int shave) {
  if (shave == 0) return img;
  return img.Crop(shave, shave, img.height() - 2 * shave, img.width() - 2 * shave);
}

void CheckPair(const image::LumaImage& a, const image::LumaImage& b, int shave) {
  if (!a.SameShape(b)) {
    throw std::invalid_argument("metric inputs differ in size: " + std::to_string(a.height()) + "x" +
                                std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                                "x" + std::to_string(b.width()));
  }
  if (shave < 0 || 2 * shave >= a.height() || 2 * shave >= a.width()) {
    throw std::invalid_argument("border shave leaves no pixels");
  }
}

std::vector<double> SsimWindow() {
  constexpr int kSize = 11;
  constexpr double kSigma = 1.5;
  std::vector<double> w(kSize * kSize);
  double sum = 0.0;
  for (int r = 0; r < kSize; ++r) {
    for (int c = 0; c < kSize; ++c) {
      const double dr = r - 5, dc = c - 5;
      w[r * kSize + c] = std::exp(-(dr * dr + dc * dc) / (2.0 * kSigma * kSigma));
      sum += w[r * kSize + c];
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

double Psnr(const image::LumaImage& a, const image::LumaImage& b, int shave) {
  CheckPair(a, b, shave);
  const image::LumaImage sa = Shaved(a, shave), sb = Shaved(b, shave);
  double sse = 0.0;
  auto pa = sa.pixels(), pb = sb.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = (pa[i] - pb[i]) * kPeak;
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(pa.size());
  if (mse == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(kPeak * kPeak / mse);
}

double Ssim(const image::LumaImage& a, const image::LumaImage& b, int shave) {
  CheckPair(a, b, shave);
  const image::LumaImage sa = Shaved(a, shave), sb = Shaved(b, shave);
  constexpr int kSize = 11;
  if (sa.height() < kSize || sa.width() < kSize) {
    throw std::invalid_argument("SSIM needs at least 11x11 pixels after shaving");
  }
  const double c1 = (0.01 * kPeak) * (0.01 * kPeak);
  const double c2 = (0.03 * kPeak) * (0.03 * kPeak);
  static const std::vector<double> window = SsimWindow();

  double total = 0.0;
  std::size_t count = 0;
  for (int r = 0; r + kSize <= sa.height(); ++r) {
    for (int c = 0; c + kSize <= sa.width(); ++c) {
      double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int u = 0; u < kSize; ++u) {
        for (int v = 0; v < kSize; ++v) {
          const double w = window[u * kSize + v];
          const double x = sa.at(r + u, c + v) * kPeak;
          const double y = sb.at(r + u, c + v) * kPeak;
          ma += w * x;
          mb += w * y;
          saa += w * (x * x);
          sbb += w * (y * y);
          sab += w * (x * y);
        }
      }
      const double var_a = saa - ma * ma;
      const double var_b = sbb - mb * mb;
      const double cov = sab - ma * mb;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

MetricReport Evaluate(const image::LumaImage& a, const image::LumaImage& b, int shave) {
  return {Psnr(a, b, shave), Ssim(a, b, shave), shave};
}

std::string FormatPsnr(double psnr) {
  if (std::isinf(psnr)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", psnr);
  return buf;
}

}  // namespace jsr::metrics
