#pragma once

#include <cstdint>
#include <vector>

#include "jsr/image/luma_image.h"

namespace jsr::testing {

// Deterministic synthetic images for the unit and acceptance suites.

// Smooth gradient background, anti-aliased discs and rectangles, and a
// periodic texture region.
image::LumaImage TextureStructureImage(std::uint64_t seed, int size = 128);

// Left half periodic texture, right half smooth gradient.
image::LumaImage HalfTextureImage(std::uint64_t seed, int size = 128);

// Tiled motif with a random period.
image::LumaImage PeriodicTexture(std::uint64_t seed, int size = 96);

// Sets `fraction` of the pixels in the top-left quadrant to 0 or 1.
image::LumaImage SaltAndPepperQuadrant(const image::LumaImage& img, double fraction,
                                       std::uint64_t seed);

// Low-frequency random field, for epitome tests.
image::LumaImage SmoothRandomImage(std::uint64_t seed, int size = 64);

// Crops both dimensions down to a multiple of `factor`.
image::LumaImage ModCrop(const image::LumaImage& img, int factor);

}  // namespace jsr::testing
