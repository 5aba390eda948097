#pragma once

#include "jsr/image/luma_image.h"

namespace jsr::image {

// Three planes of identical size in [0, 1].
struct RgbImage {
  LumaImage r, g, b;
};

// BT.601 full-range YCbCr; chroma is offset so neutral grey maps to 0.5.
struct ColorImage {
  LumaImage luma;
  LumaImage cb;
  LumaImage cr;
};

ColorImage RgbToYcbcr(const RgbImage& rgb);
RgbImage YcbcrToRgb(const ColorImage& ycc);

}  // namespace jsr::image
