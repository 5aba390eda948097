#include "jsr/image/resample.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace jsr::image {
namespace {

double CubicWeight(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

// Horizontal then vertical pass share this: resample a line of n samples to
// n * factor samples.
struct CubicTaps {
  int first;        // source index of the leftmost tap
  double w[4];
};

std::vector<CubicTaps> CubicTable(int n, int factor) {
  std::vector<CubicTaps> table(static_cast<std::size_t>(n) * factor);
  for (int o = 0; o < n * factor; ++o) {
    const double src = (o + 0.5) / factor - 0.5;
    const int base = static_cast<int>(std::floor(src));
    const double t = src - base;
    CubicTaps& taps = table[o];
    taps.first = base - 1;
    for (int k = 0; k < 4; ++k) taps.w[k] = CubicWeight(t - (k - 1));
  }
  return table;
}

// Blurred value of one line at block centre `block`, kernel described by
// `start` (offset of the first tap from block * factor).
double SampleLine(const double* line, std::ptrdiff_t step, int n,
                  const std::vector<double>& kernel, int origin) {
  double acc = 0.0;
  for (std::size_t t = 0; t < kernel.size(); ++t) {
    acc += kernel[t] * line[ReflectIndex(origin + static_cast<int>(t), n) * step];
  }
  return acc;
}

int KernelRadius(int factor) {
  return static_cast<int>(std::ceil(3.0 * AntiAliasSigma(factor)));
}

}  // namespace

void ValidateFactor(int factor) {
  if (factor < 2 || factor > 4) {
    throw std::invalid_argument("scale factor must be 2, 3 or 4, got " + std::to_string(factor));
  }
}

LumaImage Upsample(const LumaImage& img, int factor) {
  ValidateFactor(factor);
  const int h = img.height(), w = img.width();
  const int oh = h * factor, ow = w * factor;

  const auto col_taps = CubicTable(w, factor);
  LumaImage horiz(h, ow);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < ow; ++c) {
      const CubicTaps& t = col_taps[c];
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.w[k] * img.at(r, ReflectIndex(t.first + k, w));
      horiz.at(r, c) = acc;
    }
  }

  const auto row_taps = CubicTable(h, factor);
  LumaImage out(oh, ow);
  for (int r = 0; r < oh; ++r) {
    const CubicTaps& t = row_taps[r];
    int rows[4];
    for (int k = 0; k < 4; ++k) rows[k] = ReflectIndex(t.first + k, h);
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.w[k] * horiz.at(rows[k], c);
      out.at(r, c) = acc;
    }
  }
  return out;
}

double AntiAliasSigma(int factor) {
  return 0.8 * std::sqrt(static_cast<double>(factor * factor - 1));
}

std::vector<double> AntiAliasKernel(int factor) {
  ValidateFactor(factor);
  const double sigma = AntiAliasSigma(factor);
  const int radius = KernelRadius(factor);
  std::vector<double> kernel;
  if (factor % 2 == 1) {
    for (int t = -radius; t <= radius; ++t) kernel.push_back(std::exp(-0.5 * t * t / (sigma * sigma)));
  } else {
    for (int t = -radius; t < radius; ++t) {
      const double x = t + 0.5;
      kernel.push_back(std::exp(-0.5 * x * x / (sigma * sigma)));
    }
  }
  double sum = 0.0;
  for (double k : kernel) sum += k;
  for (double& k : kernel) k /= sum;
  return kernel;
}

LumaImage Downsample(const LumaImage& img, int factor) {
  ValidateFactor(factor);
  const int h = img.height(), w = img.width();
  const int oh = h / factor, ow = w / factor;
  if (oh < 1 || ow < 1) {
    throw std::invalid_argument("image too small to downsample by " + std::to_string(factor));
  }
  const auto kernel = AntiAliasKernel(factor);
  const int radius = KernelRadius(factor);
  // Offset of the first tap from block * factor.
  const int start = (factor % 2 == 1) ? (factor - 1) / 2 - radius : factor / 2 - radius;

  LumaImage horiz(h, ow);
  for (int r = 0; r < h; ++r) {
    const double* line = img.pixels().data() + static_cast<std::size_t>(r) * w;
    for (int c = 0; c < ow; ++c) {
      horiz.at(r, c) = SampleLine(line, 1, w, kernel, c * factor + start);
    }
  }
  LumaImage out(oh, ow);
  for (int c = 0; c < ow; ++c) {
    const double* column = &horiz.at(0, c);
    for (int r = 0; r < oh; ++r) {
      out.at(r, c) = SampleLine(column, ow, h, kernel, r * factor + start);
    }
  }
  return out;
}

LumaImage SmoothInput(const LumaImage& y, int factor) {
  return Downsample(Upsample(y, factor), factor);
}

LumaImage GaussianBlur(const LumaImage& img, double sigma) {
  if (!(sigma > 0.0)) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel;
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    kernel.push_back(std::exp(-0.5 * t * t / (sigma * sigma)));
    sum += kernel.back();
  }
  for (double& k : kernel) k /= sum;

  const int h = img.height(), w = img.width();
  LumaImage horiz(h, w), out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      horiz.at(r, c) = SampleLine(img.pixels().data() + static_cast<std::size_t>(r) * w, 1, w, kernel, c - radius);
    }
  }
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) {
      out.at(r, c) = SampleLine(&horiz.at(0, c), w, h, kernel, r - radius);
    }
  }
  return out;
}

LumaImage UpsampleNearest(const LumaImage& img, int rows, int cols) {
  LumaImage out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const int sr = std::min(img.height() - 1, r * img.height() / rows);
    for (int c = 0; c < cols; ++c) {
      out.at(r, c) = img.at(sr, std::min(img.width() - 1, c * img.width() / cols));
    }
  }
  return out;
}

}  // namespace jsr::image
