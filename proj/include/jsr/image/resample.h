#pragma once

#include <vector>

#include "jsr/image/luma_image.h"

namespace jsr::image {

// Interpolation operator: Catmull-Rom bicubic (a = -0.5), pixel-centre
// aligned, reflected borders. factor must be 2, 3 or 4.
LumaImage Upsample(const LumaImage& img, int factor);

// Standard deviation of the anti-alias Gaussian used by Downsample().
double AntiAliasSigma(int factor);

// Taps of the anti-alias kernel sampled at the pixel-centre offsets the
// subsampler uses. For odd factors the taps sit at integer offsets
// -R..R; for even factors at half-integer offsets -(R-0.5)..(R-0.5).
// Normalised to unit sum. R = ceil(3 sigma).
std::vector<double> AntiAliasKernel(int factor);

// Downsampling operator: Gaussian anti-alias blur evaluated at the centre of
// every factor x factor block (reflected borders). Output is
// floor(dim / factor) per dimension.
LumaImage Downsample(const LumaImage& img, int factor);

// Y' = Downsample(Upsample(Y)); same size as Y.
LumaImage SmoothInput(const LumaImage& y, int factor);

// Separable Gaussian blur with reflected borders (used by tests and tools).
LumaImage GaussianBlur(const LumaImage& img, double sigma);

// Pixel replication; used for weight-map rendering.
LumaImage UpsampleNearest(const LumaImage& img, int rows, int cols);

void ValidateFactor(int factor);

}  // namespace jsr::image
