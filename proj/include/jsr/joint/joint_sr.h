#pragma once

#include <optional>
#include <vector>

#include "jsr/epitome/internal_sr.h"
#include "jsr/image/luma_image.h"
#include "jsr/image/patch_grid.h"
#include "jsr/sparse/coupled_coding.h"
#include "jsr/sparse/dictionary.h"
#include "jsr/sparse/l1_solver.h"

namespace jsr::joint {

struct JointConfig {
  double p = 1.0;        // sharpness of the adaptive weight
  double lambda = 1.0;   // L1 weight
  int max_iterations = 10;
  int candidates = 5;    // K internal candidates per patch
  int patch_size = 5;    // LR patch size n
  int overlap = 1;       // LR pixels
  // Stop once an outer iteration lowers the objective by less than this
  // fraction of its previous value.
  double relative_tolerance = 1e-5;
  double exponent_clamp = 50.0;
  // Intensity units of the objective: squared norms carry scale^2 and the
  // L1 term scale, so lambda and p keep their meaning on 0..scale data.
  double intensity_scale = 255.0;
  // Divide LR-domain squared norms by d_l and HR-domain ones by d_h, the
  // balancing used when training the dictionary pair.
  bool balance_dimensions = true;
  int nn_radius = 7;
  epitome::EpitomeConfig epitome;
  sparse::SparseConfig sparse;  // lambda is taken from this struct's lambda
  int threads = 0;

  // 25x25 patches, 5-pixel overlap, 5 iterations.
  static JointConfig ShdPreset();
  void Validate() const;
};

// omega = exp(p (N_g - N_i)), exponent clamped to +-clamp.
double AdaptiveWeight(double external_noise, double internal_noise, double p,
                      double clamp = 50.0);

// Per-patch unknowns and cached terms. `lr` and the dictionary terms work on
// mean-removed patches; `internal` and `current` hold absolute intensities.
struct PatchState {
  Eigen::VectorXd lr;        // Y_ij - mean
  double mean = 0.0;
  sparse::SparseCode code;   // a_ij
  image::Patch internal;     // X^E_ij
  image::Patch current;      // X_ij
  double ng = 0.0;           // N_g = |D_l a - y|^2
  double ni = 0.0;           // N_i of the selected internal candidate
  std::size_t selected = 0;  // index into the candidate list
};

// Internal candidates of one patch: transferred HR patches and their
// matching errors.
struct CandidateSet {
  std::vector<image::Patch> patches;
  std::vector<double> errors;
};

// Precomputed dictionary products shared by every patch.
class JointModel {
 public:
  JointModel(const sparse::DictionaryPair& dict, const JointConfig& config,
             std::optional<double> fixed_weight = std::nullopt);

  const sparse::DictionaryPair& dictionary() const { return dict_; }
  const JointConfig& config() const { return config_; }
  std::optional<double> fixed_weight() const { return fixed_weight_; }

  // omega at the state's current (N_g, N_i), or the frozen value.
  double Weight(double ng, double ni) const;
  double Weight(const PatchState& s) const { return Weight(s.ng, s.ni); }

  // Loss terms of the joint objective for one patch.
  double ExternalLoss(const PatchState& s) const;   // lambda|a|_1 + |D_l a - y|^2 + |D_h a - (X - mean)|^2
  double InternalLoss(const PatchState& s) const;   // |X - X^E|^2
  double PatchObjective(const PatchState& s) const;

  // C = p * l_I * omega(a0, X^E); zero in fixed-weight mode.
  double SurrogateCoefficient(const PatchState& s) const;

  // Minimises lambda|a|_1 + (1 + C)|D_l a - y|^2 + |D_h a - (X - mean)|^2.
  sparse::SparseCode SolveCodeSubproblem(const PatchState& s) const;

  // Picks the candidate minimising exp(-p N_i) |X - X^E|^2 (with the frozen
  // weight: |X - X^E|^2); updates internal, ni and selected.
  void SolveInternalSubproblem(PatchState& s, const CandidateSet& candidates) const;

  // X = (D_h a + mean + omega X^E) / (1 + omega).
  image::Patch SolveReconstructionSubproblem(const PatchState& s) const;

  // Code step with a backtracking guard: the surrogate solution is accepted
  // (possibly shortened towards the previous code) only if the patch
  // objective does not increase. Returns true if the code changed.
  bool UpdateCode(PatchState& s) const;

  void RefreshExternalNoise(PatchState& s) const;

  // Weights applied to raw LR / HR squared norms.
  double LowWeight() const { return low_weight_; }
  double HighWeight() const { return high_weight_; }
  // N_i in objective units from a raw matching error.
  double InternalNoise(double matching_error) const { return high_weight_ * matching_error; }

 private:
  const sparse::DictionaryPair& dict_;
  JointConfig config_;
  std::optional<double> fixed_weight_;
  Eigen::MatrixXd gram_low_;
  Eigen::MatrixXd gram_high_;
  double low_weight_ = 1.0;   // scale^2 (/ d_l)
  double high_weight_ = 1.0;  // scale^2 (/ d_h)
  double l1_weight_ = 1.0;    // lambda * scale
};

// Patch-wise omega on the LR patch grid.
struct WeightMap {
  int grid_rows = 0;
  int grid_cols = 0;
  std::vector<image::PatchOrigin> origins;  // LR patch origins, row-major
  std::vector<double> omega;

  // 1 / (1 + omega) per patch, as a grid_rows x grid_cols image.
  image::LumaImage Normalized() const;
  // Normalized() replicated to an image of the given size.
  image::LumaImage Render(int height, int width) const;
};

struct JointResult {
  image::LumaImage hr;
  WeightMap weights;
  std::vector<double> objective;  // before the first iteration, then after each
  std::vector<PatchState> states;
  int iterations = 0;
};

double JointObjective(const JointModel& model, const std::vector<PatchState>& states);

// Coordinate descent on the joint objective, initialised from coupled sparse
// coding (codes), bicubic interpolation (X) and epitomic matching (X^E).
JointResult JointUpscale(const image::LumaImage& input, const sparse::DictionaryPair& dict,
                         int factor, const JointConfig& config,
                         const epitome::Epitome* pretrained = nullptr);

// The same solver with omega frozen to `omega` for every patch.
JointResult FixedWeightUpscale(const image::LumaImage& input, const sparse::DictionaryPair& dict,
                               int factor, double omega, const JointConfig& config,
                               const epitome::Epitome* pretrained = nullptr);

// Shared driver; `internal` may be reused across runs on the same input.
JointResult RunJoint(const image::LumaImage& input, const sparse::DictionaryPair& dict,
                     int factor, const JointConfig& config,
                     const epitome::InternalContext& internal,
                     std::optional<double> fixed_weight);

epitome::InternalConfig MakeInternalConfig(const JointConfig& config);

}  // namespace jsr::joint
