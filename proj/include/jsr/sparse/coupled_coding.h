#pragma once

#include <vector>

#include "jsr/image/luma_image.h"
#include "jsr/image/patch_grid.h"
#include "jsr/sparse/dictionary.h"
#include "jsr/sparse/l1_solver.h"

namespace jsr::sparse {

// N_g: ||D_l a - y||^2.
double ExternalNoise(const SparseCode& code, const Eigen::MatrixXd& low,
                     const Eigen::VectorXd& lr_patch);

struct CoupledCodingResult {
  image::LumaImage hr;
  std::vector<SparseCode> codes;
  std::vector<double> means;            // per-patch LR mean
  std::vector<image::Patch> hr_patches; // D_h a + mean, before assembly
};

// Coupled sparse coding SR: every LR patch on `grid` has its mean removed,
// is coded against D_l, and D_h a + mean becomes the HR patch. Overlaps are
// averaged. Also the initialisation of the joint solver.
CoupledCodingResult CoupledSparseUpscale(const image::LumaImage& lr, const DictionaryPair& dict,
                                         const image::PatchGrid& grid,
                                         const SparseConfig& config, int threads = 0);

// Co-located (LR, HR) patch pairs from an HR image and its downsampled
// version, mean-removed by the LR patch mean. Patches whose LR standard
// deviation is below min_std are skipped.
std::vector<TrainingPair> SampleTrainingPairs(const image::LumaImage& hr, int factor,
                                              int patch_size, int stride, double min_std);

}  // namespace jsr::sparse
