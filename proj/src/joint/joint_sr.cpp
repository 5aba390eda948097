#include "jsr/joint/joint_sr.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "jsr/common/parallel.h"
#include "jsr/image/resample.h"

namespace jsr::joint {

JointConfig JointConfig::ShdPreset() {
  JointConfig c;
  c.patch_size = 25;
  c.overlap = 5;
  c.max_iterations = 5;
  return c;
}

void JointConfig::Validate() const {
  if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("p must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (max_iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (candidates < 1) throw std::invalid_argument("candidates must be >= 1");
  if (patch_size < 2) throw std::invalid_argument("patch size must be >= 2");
  if (overlap < 0 || overlap >= patch_size) throw std::invalid_argument("overlap must be in [0, patch size)");
  if (!(relative_tolerance >= 0.0)) throw std::invalid_argument("tolerance must be >= 0");
  if (!(exponent_clamp > 0.0)) throw std::invalid_argument("exponent clamp must be positive");
  if (nn_radius < 0) throw std::invalid_argument("window radius must be >= 0");
}

double AdaptiveWeight(double external_noise, double internal_noise, double p, double clamp) {
  const double e = std::clamp(p * (external_noise - internal_noise), -clamp, clamp);
  return std::exp(e);
}

JointModel::JointModel(const sparse::DictionaryPair& dict, const JointConfig& config,
                       std::optional<double> fixed_weight)
    : dict_(dict), config_(config), fixed_weight_(fixed_weight) {
  dict_.Validate();
  config_.Validate();
  if (fixed_weight_ && !(*fixed_weight_ > 0.0 && std::isfinite(*fixed_weight_))) {
    throw std::invalid_argument("fixed omega must be finite and > 0");
  }
  if (!(config_.intensity_scale > 0.0)) throw std::invalid_argument("intensity scale must be positive");
  const double s2 = config_.intensity_scale * config_.intensity_scale;
  low_weight_ = s2;
  high_weight_ = s2;
  if (config_.balance_dimensions) {
    low_weight_ /= static_cast<double>(dict_.low.rows());
    high_weight_ /= static_cast<double>(dict_.high.rows());
  }
  l1_weight_ = config_.lambda * config_.intensity_scale;
  // CSC initialisation: l1_weight |a| + low_weight |D_l a - y|^2.
  config_.sparse.lambda = l1_weight_ / low_weight_;
  gram_low_ = dict_.low.transpose() * dict_.low;
  gram_high_ = dict_.high.transpose() * dict_.high;
}

double JointModel::Weight(double ng, double ni) const {
  if (fixed_weight_) return *fixed_weight_;
  return AdaptiveWeight(ng, ni, config_.p, config_.exponent_clamp);
}

double JointModel::ExternalLoss(const PatchState& s) const {
  const Eigen::VectorXd& a = s.code.coefficients;
  const Eigen::VectorXd x = s.current.array() - s.mean;
  return l1_weight_ * a.lpNorm<1>() + low_weight_ * (dict_.low * a - s.lr).squaredNorm() +
         high_weight_ * (dict_.high * a - x).squaredNorm();
}

double JointModel::InternalLoss(const PatchState& s) const {
  return high_weight_ * (s.current - s.internal).squaredNorm();
}

double JointModel::PatchObjective(const PatchState& s) const {
  return ExternalLoss(s) + Weight(s) * InternalLoss(s);
}

double JointModel::SurrogateCoefficient(const PatchState& s) const {
  if (fixed_weight_) return 0.0;
  return config_.p * InternalLoss(s) * Weight(s);
}

sparse::SparseCode JointModel::SolveCodeSubproblem(const PatchState& s) const {
  const double c = SurrogateCoefficient(s);
  sparse::GramProblem problem;
  // Divided through by high_weight_ to keep the solver's tolerance meaningful.
  const double wl = (1.0 + c) * low_weight_ / high_weight_;
  problem.gram = wl * gram_low_ + gram_high_;
  const Eigen::VectorXd x = s.current.array() - s.mean;
  problem.correlation = wl * (dict_.low.transpose() * s.lr) + dict_.high.transpose() * x;
  problem.lambda = l1_weight_ / high_weight_;
  try {
    return sparse::SolveGram(problem, config_.sparse, &s.code.coefficients);
  } catch (const sparse::L1ConvergenceError& e) {
    // The guard in UpdateCode rejects the iterate if it does not help.
    return e.best();
  }
}

void JointModel::RefreshExternalNoise(PatchState& s) const {
  s.ng = low_weight_ * (dict_.low * s.code.coefficients - s.lr).squaredNorm();
}

bool JointModel::UpdateCode(PatchState& s) const {
  const double before = PatchObjective(s);
  const sparse::SparseCode previous = s.code;
  const double previous_ng = s.ng;
  const sparse::SparseCode proposal = SolveCodeSubproblem(s);

  s.code = proposal;
  RefreshExternalNoise(s);
  if (PatchObjective(s) <= before) return true;

  // Halve the step towards the previous code until the objective stops rising.
  for (int k = 1; k <= 20; ++k) {
    const double t = std::ldexp(1.0, -k);
    s.code = sparse::SparseCode::FromCoefficients(
        previous.coefficients + t * (proposal.coefficients - previous.coefficients));
    RefreshExternalNoise(s);
    if (PatchObjective(s) <= before) return true;
  }
  s.code = previous;
  s.ng = previous_ng;
  return false;
}

void JointModel::SolveInternalSubproblem(PatchState& s, const CandidateSet& candidates) const {
  if (candidates.patches.empty() || candidates.patches.size() != candidates.errors.size()) {
    throw std::invalid_argument("internal candidates missing or inconsistent");
  }
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.patches.size(); ++c) {
    const double li = high_weight_ * (s.current - candidates.patches[c]).squaredNorm();
    // exp(-p N_i) |X - X^E|^2 up to the common factor exp(p N_g); the clamp
    // keeps the ranking consistent with the objective actually evaluated.
    const double cost = Weight(s.ng, InternalNoise(candidates.errors[c])) * li;
    if (cost < best_cost) {
      best_cost = cost;
      best = c;
    }
  }
  s.selected = best;
  s.internal = candidates.patches[best];
  s.ni = InternalNoise(candidates.errors[best]);
}

image::Patch JointModel::SolveReconstructionSubproblem(const PatchState& s) const {
  const double w = Weight(s);
  const Eigen::VectorXd external = (dict_.high * s.code.coefficients).array() + s.mean;
  return (external + w * s.internal) / (1.0 + w);
}

double JointObjective(const JointModel& model, const std::vector<PatchState>& states) {
  double total = 0.0;
  for (const PatchState& s : states) total += model.PatchObjective(s);
  return total;
}

image::LumaImage WeightMap::Normalized() const {
  image::LumaImage out(grid_rows, grid_cols);
  for (int r = 0; r < grid_rows; ++r) {
    for (int c = 0; c < grid_cols; ++c) {
      out.at(r, c) = 1.0 / (1.0 + omega[static_cast<std::size_t>(r) * grid_cols + c]);
    }
  }
  return out;
}

image::LumaImage WeightMap::Render(int height, int width) const {
  return image::UpsampleNearest(Normalized(), height, width);
}

epitome::InternalConfig MakeInternalConfig(const JointConfig& config) {
  epitome::InternalConfig ic;
  ic.patch_size = config.patch_size;
  ic.overlap = config.overlap;
  ic.nn_radius = config.nn_radius;
  ic.epitome = config.epitome;
  ic.epitome.candidates = config.candidates;
  ic.threads = config.threads;
  return ic;
}

JointResult RunJoint(const image::LumaImage& input, const sparse::DictionaryPair& dict,
                     int factor, const JointConfig& config,
                     const epitome::InternalContext& internal,
                     std::optional<double> fixed_weight) {
  image::ValidateFactor(factor);
  if (dict.factor != factor) {
    throw std::invalid_argument("dictionary factor " + std::to_string(dict.factor) +
                                " does not match requested factor " + std::to_string(factor));
  }
  if (dict.patch_size != config.patch_size) {
    throw std::invalid_argument("dictionary patch size " + std::to_string(dict.patch_size) +
                                " does not match configured patch size " +
                                std::to_string(config.patch_size));
  }
  const JointModel model(dict, config, fixed_weight);
  const image::PatchGrid grid(input.height(), input.width(), config.patch_size, config.overlap);
  const image::PatchGrid hr_grid = grid.Scaled(factor);
  if (internal.patches.size() != grid.count()) {
    throw std::invalid_argument("internal context does not match the patch grid");
  }

  std::vector<CandidateSet> candidates(grid.count());
  for (std::size_t i = 0; i < grid.count(); ++i) {
    candidates[i].patches = internal.patches[i].transfers;
    candidates[i].errors = internal.patches[i].errors;
  }

  // Initial codes come from coupled sparse coding against D_l alone.
  const sparse::CoupledCodingResult csc =
      sparse::CoupledSparseUpscale(input, dict, grid, model.config().sparse, config.threads);

  JointResult result;
  result.states.resize(grid.count());
  ParallelFor(grid.count(), config.threads, [&](std::size_t i) {
    PatchState& s = result.states[i];
    const image::PatchOrigin o = grid.origin(i);
    s.mean = csc.means[i];
    s.lr = image::ExtractPatch(input, o.row, o.col, config.patch_size).array() - s.mean;
    s.code = csc.codes[i];
    s.current = internal.patches[i].query;
    s.selected = 0;
    s.internal = candidates[i].patches.front();
    s.ni = model.InternalNoise(candidates[i].errors.front());
    model.RefreshExternalNoise(s);
  });

  double previous = JointObjective(model, result.states);
  result.objective.push_back(previous);
  for (int it = 0; it < config.max_iterations; ++it) {
    ParallelFor(grid.count(), config.threads,
                [&](std::size_t i) { model.UpdateCode(result.states[i]); });
    ParallelFor(grid.count(), config.threads, [&](std::size_t i) {
      model.SolveInternalSubproblem(result.states[i], candidates[i]);
    });
    ParallelFor(grid.count(), config.threads, [&](std::size_t i) {
      result.states[i].current = model.SolveReconstructionSubproblem(result.states[i]);
    });
    const double value = JointObjective(model, result.states);
    result.objective.push_back(value);
    ++result.iterations;
    const double drop = previous - value;
    if (drop < config.relative_tolerance * std::max(std::abs(previous), 1e-300)) break;
    previous = value;
  }

  std::vector<image::Patch> patches;
  patches.reserve(result.states.size());
  result.weights.grid_rows = grid.grid_rows();
  result.weights.grid_cols = grid.grid_cols();
  result.weights.origins = grid.origins();
  for (const PatchState& s : result.states) {
    patches.push_back(s.current);
    result.weights.omega.push_back(model.Weight(s));
  }
  result.hr = image::AssemblePatches(patches, hr_grid);
  result.hr.ClampToUnit();
  return result;
}

JointResult JointUpscale(const image::LumaImage& input, const sparse::DictionaryPair& dict,
                         int factor, const JointConfig& config, const epitome::Epitome* pretrained) {
  config.Validate();
  const epitome::InternalContext ctx =
      epitome::BuildInternalContext(input, factor, MakeInternalConfig(config), pretrained);
  return RunJoint(input, dict, factor, config, ctx, std::nullopt);
}

JointResult FixedWeightUpscale(const image::LumaImage& input, const sparse::DictionaryPair& dict,
                               int factor, double omega, const JointConfig& config,
                               const epitome::Epitome* pretrained) {
  config.Validate();
  const epitome::InternalContext ctx =
      epitome::BuildInternalContext(input, factor, MakeInternalConfig(config), pretrained);
  return RunJoint(input, dict, factor, config, ctx, omega);
}

}  // namespace jsr::joint
