#include "jsr/sparse/coupled_coding.h"

#include <cmath>
#include <stdexcept>

#include "jsr/common/parallel.h"
#include "jsr/image/resample.h"

namespace jsr::sparse {

double ExternalNoise(const SparseCode& code, const Eigen::MatrixXd& low,
                     const Eigen::VectorXd& lr_patch) {
  if (low.cols() != code.coefficients.size() || low.rows() != lr_patch.size()) {
    throw std::invalid_argument("external noise: dimension mismatch");
  }
  return (low * code.coefficients - lr_patch).squaredNorm();
}

CoupledCodingResult CoupledSparseUpscale(const image::LumaImage& lr, const DictionaryPair& dict,
                                         const image::PatchGrid& grid,
                                         const SparseConfig& config, int threads) {
  dict.Validate();
  if (grid.patch_size() != dict.patch_size) {
    throw std::invalid_argument("patch grid size does not match dictionary patch size");
  }
  const image::PatchGrid hr_grid = grid.Scaled(dict.factor);
  std::vector<image::Patch> lr_patches = image::ExtractPatches(lr, grid);

  CoupledCodingResult out;
  out.codes.resize(lr_patches.size());
  out.means.resize(lr_patches.size());
  out.hr_patches.resize(lr_patches.size());

  GramProblem shared;
  shared.gram = dict.low.transpose() * dict.low;
  shared.lambda = config.lambda;
  ParallelFor(lr_patches.size(), threads, [&](std::size_t i) {
    const double mean = lr_patches[i].mean();
    const Eigen::VectorXd centered = lr_patches[i].array() - mean;
    GramProblem p;
    p.shared_gram = &shared.gram;
    p.lambda = shared.lambda;
    p.correlation = dict.low.transpose() * centered;
    out.codes[i] = SolveGram(p, config);
    out.means[i] = mean;
    out.hr_patches[i] = (dict.high * out.codes[i].coefficients).array() + mean;
  });
  out.hr = image::AssemblePatches(out.hr_patches, hr_grid);
  return out;
}

std::vector<TrainingPair> SampleTrainingPairs(const image::LumaImage& hr, int factor,
                                              int patch_size, int stride, double min_std) {
  image::ValidateFactor(factor);
  const int h = (hr.height() / factor) * factor;
  const int w = (hr.width() / factor) * factor;
  const image::LumaImage cropped = hr.Crop(0, 0, h, w);
  const image::LumaImage lr = image::Downsample(cropped, factor);
  std::vector<TrainingPair> pairs;
  const int hp = patch_size * factor;
  for (int r = 0; r + patch_size <= lr.height(); r += stride) {
    for (int c = 0; c + patch_size <= lr.width(); c += stride) {
      Eigen::VectorXd low = image::ExtractPatch(lr, r, c, patch_size);
      const double mean = low.mean();
      low.array() -= mean;
      if (std::sqrt(low.squaredNorm() / static_cast<double>(low.size())) < min_std) continue;
      Eigen::VectorXd high = image::ExtractPatch(cropped, r * factor, c * factor, hp);
      high.array() -= mean;
      pairs.push_back({std::move(low), std::move(high)});
    }
  }
  return pairs;
}

}  // namespace jsr::sparse
