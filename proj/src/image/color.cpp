#include "jsr/image/color.h"

#include <stdexcept>

namespace jsr::image {
namespace {

// JFIF full-range BT.601; chroma rows derived from Kr, Kb so the inverse is exact.
constexpr double kKr = 0.299, kKb = 0.114, kKg = 1.0 - kKr - kKb;
constexpr double kCbScale = 2.0 * (1.0 - kKb);  // 1.772
constexpr double kCrScale = 2.0 * (1.0 - kKr);  // 1.402

}  // namespace

ColorImage RgbToYcbcr(const RgbImage& rgb) {
  if (!rgb.r.SameShape(rgb.g) || !rgb.r.SameShape(rgb.b)) {
    throw std::invalid_argument("RGB planes differ in size");
  }
  ColorImage out{LumaImage(rgb.r.height(), rgb.r.width()),
                 LumaImage(rgb.r.height(), rgb.r.width()),
                 LumaImage(rgb.r.height(), rgb.r.width())};
  auto r = rgb.r.pixels(), g = rgb.g.pixels(), b = rgb.b.pixels();
  auto y = out.luma.pixels(), cb = out.cb.pixels(), cr = out.cr.pixels();
  for (std::size_t i = 0; i < r.size(); ++i) {
    y[i] = kKr * r[i] + kKg * g[i] + kKb * b[i];
    cb[i] = 0.5 + (b[i] - y[i]) / kCbScale;
    cr[i] = 0.5 + (r[i] - y[i]) / kCrScale;
  }
  return out;
}

RgbImage YcbcrToRgb(const ColorImage& ycc) {
  if (!ycc.luma.SameShape(ycc.cb) || !ycc.luma.SameShape(ycc.cr)) {
    throw std::invalid_argument("YCbCr planes differ in size");
  }
  const int h = ycc.luma.height(), w = ycc.luma.width();
  RgbImage out{LumaImage(h, w), LumaImage(h, w), LumaImage(h, w)};
  auto y = ycc.luma.pixels(), cb = ycc.cb.pixels(), cr = ycc.cr.pixels();
  auto r = out.r.pixels(), g = out.g.pixels(), b = out.b.pixels();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double u = cb[i] - 0.5, v = cr[i] - 0.5;
    r[i] = y[i] + kCrScale * v;
    b[i] = y[i] + kCbScale * u;
    g[i] = (y[i] - kKr * r[i] - kKb * b[i]) / kKg;
  }
  return out;
}

}  // namespace jsr::image
