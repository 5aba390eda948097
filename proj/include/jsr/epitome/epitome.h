#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jsr/image/luma_image.h"
#include "jsr/image/patch_grid.h"

namespace jsr::epitome {

// Condensed Gaussian patch model of an image. A hidden mapping places a
// patch_size x patch_size window in the epitome (toroidally wrapped when
// `wrap` is set); each window pixel is an independent Gaussian with the
// epitome's mean and variance at that position.
struct Epitome {
  image::LumaImage mean;
  image::LumaImage variance;
  std::vector<double> prior;  // one entry per mapping, sums to 1
  int patch_size = 0;
  bool wrap = true;

  // Geometry of the image the epitome was trained on; candidate entries
  // index its patch origins row-major over (height-P+1) x (width-P+1).
  int source_height = 0;
  int source_width = 0;
  int candidates_per_mapping = 0;
  // mapping_count() x candidates_per_mapping source origin indices, best
  // first; -1 marks an unused slot.
  std::vector<std::int32_t> candidate_index;

  int rows() const { return mean.height(); }
  int cols() const { return mean.width(); }
  int mapping_rows() const { return wrap ? rows() : rows() - patch_size + 1; }
  int mapping_cols() const { return wrap ? cols() : cols() - patch_size + 1; }
  std::size_t mapping_count() const {
    return static_cast<std::size_t>(mapping_rows()) * static_cast<std::size_t>(mapping_cols());
  }
  int source_origin_cols() const { return source_width - patch_size + 1; }
  image::PatchOrigin SourceOrigin(std::int32_t index) const {
    return {index / source_origin_cols(), index % source_origin_cols()};
  }
  image::PatchOrigin MappingOrigin(std::size_t mapping) const {
    return {static_cast<int>(mapping / mapping_cols()), static_cast<int>(mapping % mapping_cols())};
  }
};

struct EpitomeConfig {
  int rows = 0;  // 0: half the source height (quarter of the area overall)
  int cols = 0;  // 0: half the source width
  int patch_size = 5;
  int em_iterations = 10;
  double variance_floor = 1e-4;
  double initial_variance = 0.1;
  std::uint64_t seed = 1;
  int max_patches = 40000;
  int candidates = 5;
  bool wrap = true;
  int threads = 0;
};

struct EpitomeTrainingResult {
  Epitome epitome;
  // Log-likelihood of the training patches under the model before each EM
  // iteration, followed by the value under the final model.
  std::vector<double> log_likelihood;
};

EpitomeTrainingResult TrainEpitome(const image::LumaImage& source, const EpitomeConfig& config);

// Log of prior(T) * N(patch | mean_T, var_T) for every mapping T.
std::vector<double> MappingLogJoint(const Epitome& e, const image::Patch& patch);

// Normalised posterior over mappings, computed in log space.
std::vector<double> Posterior(const Epitome& e, const image::Patch& patch);

// Binary format: magic "JSREPIT\0", u32 version, rows, cols, patch_size, K,
// wrap, source_height, source_width, then mean, variance (row-major f64),
// prior (f64 per mapping), candidate_index (i32 per mapping x K).
void SaveEpitome(const Epitome& e, const std::string& path);
Epitome LoadEpitome(const std::string& path);

inline constexpr std::uint32_t kEpitomeFormatVersion = 1;

}  // namespace jsr::epitome
