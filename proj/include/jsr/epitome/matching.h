#pragma once

#include <vector>

#include "jsr/epitome/epitome.h"
#include "jsr/image/luma_image.h"
#include "jsr/image/patch_grid.h"

namespace jsr::epitome {

struct Candidate {
  image::PatchOrigin origin;
  double error = 0.0;  // ||Y'_mn - query||^2
};

struct MatchResult {
  image::PatchOrigin origin;
  double error = 0.0;
  // p(T* | query, e) for epitomic matches; 0 for window matches.
  double weight = 0.0;
  std::vector<Candidate> candidates;  // ascending error
};

// Most probable mapping T*, then the minimum-SSD patch among the source
// candidates stored for T*.
MatchResult EpitomicMatch(const Epitome& e, const image::LumaImage& smoothed,
                          const image::Patch& query);

// Exhaustive SSD search over patch origins within `radius` of `center`
// (clamped to valid origins). Ties go to the smallest row-major origin.
MatchResult NearestNeighborMatch(const image::LumaImage& smoothed, const image::Patch& query,
                                 image::PatchOrigin center, int radius);

// H = w (Y - Y')[epitomic] + (1 - w) (Y - Y')[window]; returns query + H.
image::Patch TransferHighFrequency(const image::LumaImage& input, const image::LumaImage& smoothed,
                                   const MatchResult& epitomic, const image::Patch& query,
                                   const MatchResult& window);

// Query + (Y - Y') at a single source origin.
image::Patch TransferFrom(const image::LumaImage& input, const image::LumaImage& smoothed,
                          image::PatchOrigin origin, const image::Patch& query);

// N_i: squared matching error of the chosen source patch.
inline double InternalNoise(const MatchResult& match) { return match.error; }

// Origin in the smoothed input whose patch (same pixel size) is centred on
// the LR location of an HR patch origin.
image::PatchOrigin CorrespondingOrigin(image::PatchOrigin hr_origin, int factor, int patch_size,
                                       int smoothed_height, int smoothed_width);

}  // namespace jsr::epitome
