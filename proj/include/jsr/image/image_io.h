#pragma once

#include <string>

#include "jsr/image/color.h"
#include "jsr/image/luma_image.h"

namespace jsr::image {

struct DecodedImage {
  RgbImage rgb;
  bool grayscale = false;
};

// PNG (any bit depth/colour type, via libpng) or binary PGM/PPM. Throws
// FormatError on unreadable or corrupt input.
DecodedImage ReadImage(const std::string& path);
LumaImage ReadLuma(const std::string& path);

// 8-bit output; values are clamped to [0, 1] and rounded. The format is
// chosen from the extension (.png, .pgm, .ppm).
void WriteImage(const std::string& path, const RgbImage& rgb);
void WriteLuma(const std::string& path, const LumaImage& img);

}  // namespace jsr::image
