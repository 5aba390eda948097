#pragma once

#include <vector>

#include "jsr/epitome/epitome.h"
#include "jsr/epitome/matching.h"
#include "jsr/image/luma_image.h"
#include "jsr/image/patch_grid.h"

namespace jsr::epitome {

struct InternalConfig {
  int patch_size = 5;   // LR patch size n; HR patches are n * factor
  int overlap = 1;      // LR pixels
  int nn_radius = 7;
  EpitomeConfig epitome;  // patch_size is overridden with n * factor
  int threads = 0;
};

// Everything the internal branch knows about one HR patch.
struct InternalPatch {
  image::Patch query;            // X'^E_ij, the interpolated patch
  MatchResult epitomic;
  MatchResult window;
  // One transferred patch per epitomic candidate, in candidate order; each
  // blends that candidate's band with the window band by the posterior w.
  std::vector<image::Patch> transfers;
  std::vector<double> errors;    // N_i of each candidate
};

struct InternalContext {
  image::LumaImage interpolated;  // X'^E = U(Y)
  image::LumaImage smoothed;      // Y' = D(U(Y))
  Epitome epitome;
  std::vector<double> epitome_log_likelihood;
  std::vector<InternalPatch> patches;  // row-major over the LR grid
};

// Builds X'^E and Y', trains the epitome on Y' (unless `pretrained` is
// given) and matches every HR patch.
InternalContext BuildInternalContext(const image::LumaImage& input, int factor,
                                     const InternalConfig& config,
                                     const Epitome* pretrained = nullptr);

// EPI: blended epitomic + window high-frequency transfer.
image::LumaImage EpiUpscale(const image::LumaImage& input, int factor, const InternalConfig& config,
                            const Epitome* pretrained = nullptr);

// Local self-example baseline: window matching only.
image::LumaImage LocalSelfExampleUpscale(const image::LumaImage& input, int factor,
                                         const InternalConfig& config);

}  // namespace jsr::epitome
