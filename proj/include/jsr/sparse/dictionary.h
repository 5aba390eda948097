#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace jsr::sparse {

// Coupled dictionaries sharing one code: low (d_l x k) acts on mean-removed
// n x n LR patches, high (d_h x k) on the matching (n*factor)^2 HR patches.
// Columns of `low` have unit norm; `high` columns carry the same scale.
struct DictionaryPair {
  Eigen::MatrixXd low;
  Eigen::MatrixXd high;
  int patch_size = 0;
  int factor = 0;

  int atoms() const { return static_cast<int>(low.cols()); }
  int low_dim() const { return static_cast<int>(low.rows()); }
  int high_dim() const { return static_cast<int>(high.rows()); }

  // Throws std::invalid_argument when shapes disagree with the geometry.
  void Validate() const;
};

struct TrainingPair {
  Eigen::VectorXd low;
  Eigen::VectorXd high;
};

struct DictionaryTrainingConfig {
  int atoms = 512;
  double lambda = 1.0;
  // lambda applies to 0..intensity_scale data; patches are stored in [0,1],
  // so the solver sees lambda / intensity_scale.
  double intensity_scale = 255.0;
  int epochs = 10;
  std::uint64_t seed = 1;
  int threads = 0;
  double tolerance = 1e-8;
  int update_sweeps = 5;
};

struct DictionaryTrainingResult {
  DictionaryPair dictionary;
  // Joint objective sum_n |v_n - D a_n|^2 + lambda' |a_n|_1 on the balanced
  // concatenated vectors (lambda' the effective weight), recorded after the coding step of every epoch and
  // once more after the final dictionary update.
  std::vector<double> objective;
};

// Alternates exact joint sparse coding of [low/sqrt(d_l); high/sqrt(d_h)]
// with a norm-constrained least-squares dictionary update (block coordinate
// descent over atoms), then rescales atoms to unit norm. Unused atoms are
// re-seeded from training vectors.
DictionaryTrainingResult TrainCoupledDictionary(const std::vector<TrainingPair>& pairs,
                                                int patch_size, int factor,
                                                const DictionaryTrainingConfig& config);

// Binary format: magic "JSRDICT\0", u32 version, n, factor, k, d_l, d_h,
// then d_l*k doubles of `low` (row-major) and d_h*k doubles of `high`.
void SaveDictionary(const DictionaryPair& dict, const std::string& path);
DictionaryPair LoadDictionary(const std::string& path);

inline constexpr std::uint32_t kDictionaryFormatVersion = 1;

}  // namespace jsr::sparse
