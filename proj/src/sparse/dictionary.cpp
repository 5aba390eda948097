#include "jsr/sparse/dictionary.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "jsr/common/binary_io.h"
#include "jsr/common/errors.h"
#include "jsr/common/parallel.h"
#include "jsr/sparse/l1_solver.h"

namespace jsr::sparse {
namespace {

constexpr char kMagic[9] = "JSRDICT";

}  // namespace

void DictionaryPair::Validate() const {
  if (patch_size < 1 || factor < 1) throw std::invalid_argument("dictionary geometry unset");
  if (low.cols() != high.cols() || low.cols() < 1) {
    throw std::invalid_argument("low and high dictionaries must share a positive atom count");
  }
  if (low.rows() != patch_size * patch_size) {
    throw std::invalid_argument("low dictionary rows must equal patch_size^2");
  }
  const int hr = patch_size * factor;
  if (high.rows() != hr * hr) {
    throw std::invalid_argument("high dictionary rows must equal (patch_size*factor)^2");
  }
  if (low.cols() < high.rows()) {
    throw std::invalid_argument("dictionary must be overcomplete (atoms >= HR patch dimension)");
  }
}

DictionaryTrainingResult TrainCoupledDictionary(const std::vector<TrainingPair>& pairs,
                                                int patch_size, int factor,
                                                const DictionaryTrainingConfig& config) {
  const int k = config.atoms;
  if (k < 1) throw std::invalid_argument("atom count must be positive");
  {
    const int hr = patch_size * factor;
    if (k < hr * hr) {
      throw std::invalid_argument("atom count " + std::to_string(k) + " is below the HR patch dimension " +
                                  std::to_string(hr * hr));
    }
  }
  if (config.epochs < 1) throw std::invalid_argument("need at least one training epoch");
  if (!(config.lambda >= 0.0) || !(config.intensity_scale > 0.0)) {
    throw std::invalid_argument("lambda must be >= 0 and intensity scale > 0");
  }
  if (pairs.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("need at least " + std::to_string(k) + " training pairs, got " +
                                std::to_string(pairs.size()));
  }
  const Eigen::Index dl = pairs.front().low.size();
  const Eigen::Index dh = pairs.front().high.size();
  if (dl != patch_size * patch_size || dh != patch_size * factor * patch_size * factor) {
    throw std::invalid_argument("training vectors do not match patch geometry");
  }
  const Eigen::Index dim = dl + dh;
  const auto count = static_cast<Eigen::Index>(pairs.size());

  // Balanced concatenation, one column per sample.
  Eigen::MatrixXd samples(dim, count);
  const double sl = 1.0 / std::sqrt(static_cast<double>(dl));
  const double sh = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Eigen::Index> usable;
  for (Eigen::Index n = 0; n < count; ++n) {
    const TrainingPair& p = pairs[n];
    if (p.low.size() != dl || p.high.size() != dh) {
      throw std::invalid_argument("training pairs have inconsistent dimensions");
    }
    if (!p.low.allFinite() || !p.high.allFinite()) {
      throw std::invalid_argument("training pairs contain non-finite values");
    }
    samples.col(n).head(dl) = p.low * sl;
    samples.col(n).tail(dh) = p.high * sh;
    if (samples.col(n).norm() > 1e-12) usable.push_back(n);
  }
  if (usable.empty()) throw std::invalid_argument("training data is all zero");

  std::mt19937_64 rng(config.seed);
  auto random_sample = [&] {
    std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
    const Eigen::Index n = usable[pick(rng)];
    return Eigen::VectorXd(samples.col(n) / samples.col(n).norm());
  };

  // Initial atoms: distinct random samples where possible.
  Eigen::MatrixXd dict(dim, k);
  {
    std::vector<Eigen::Index> order = usable;
    std::shuffle(order.begin(), order.end(), rng);
    for (int j = 0; j < k; ++j) {
      if (static_cast<std::size_t>(j) < order.size()) {
        dict.col(j) = samples.col(order[j]) / samples.col(order[j]).norm();
      } else {
        dict.col(j) = random_sample();
      }
    }
  }

  const double lambda = config.lambda / config.intensity_scale;
  SparseConfig coding;
  coding.lambda = lambda;
  coding.tolerance = config.tolerance;
  Eigen::MatrixXd codes = Eigen::MatrixXd::Zero(k, count);

  auto objective = [&] {
    const Eigen::MatrixXd residual = samples - dict * codes;
    return residual.squaredNorm() + lambda * codes.cwiseAbs().sum();
  };

  DictionaryTrainingResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // (a) exact sparse coding of every sample against the current atoms.
    GramProblem shared;
    shared.gram = dict.transpose() * dict;
    shared.lambda = lambda;
    const Eigen::MatrixXd correlations = dict.transpose() * samples;
    ParallelFor(static_cast<std::size_t>(count), config.threads, [&](std::size_t n) {
      GramProblem p;
      p.lambda = shared.lambda;
      p.shared_gram = &shared.gram;
      p.correlation = correlations.col(static_cast<Eigen::Index>(n));
      codes.col(static_cast<Eigen::Index>(n)) = SolveGram(p, coding).coefficients;
    });
    result.objective.push_back(objective());

    // (b) least squares over atoms with |d_j| <= 1, one block per atom.
    const Eigen::MatrixXd cc = codes * codes.transpose();
    const Eigen::MatrixXd vc = samples * codes.transpose();
    for (int sweep = 0; sweep < config.update_sweeps; ++sweep) {
      for (int j = 0; j < k; ++j) {
        if (cc(j, j) <= 0.0) continue;
        Eigen::VectorXd u = dict.col(j) + (vc.col(j) - dict * cc.col(j)) / cc(j, j);
        dict.col(j) = u / std::max(u.norm(), 1.0);
      }
    }

    // Unit-norm atoms; scaling the code row keeps the fit and can only
    // shrink the L1 term. Unused atoms are re-seeded (their codes are zero).
    for (int j = 0; j < k; ++j) {
      const double norm = dict.col(j).norm();
      if (cc(j, j) <= 0.0 || norm < 1e-12) {
        dict.col(j) = random_sample();
        codes.row(j).setZero();
      } else {
        dict.col(j) /= norm;
        codes.row(j) *= norm;
      }
    }
  }
  result.objective.push_back(objective());

  DictionaryPair out;
  out.patch_size = patch_size;
  out.factor = factor;
  out.low = dict.topRows(dl) * std::sqrt(static_cast<double>(dl));
  out.high = dict.bottomRows(dh) * std::sqrt(static_cast<double>(dh));
  for (int j = 0; j < k; ++j) {
    const double norm = out.low.col(j).norm();
    if (norm > 1e-12) {
      out.low.col(j) /= norm;
      out.high.col(j) /= norm;
    } else {
      // An atom with no LR part can never be selected by LR coding.
      out.low.col(j).setZero();
      out.low(j % dl, j) = 1.0;
      out.high.col(j).setZero();
    }
  }
  result.dictionary = std::move(out);
  return result;
}

void SaveDictionary(const DictionaryPair& dict, const std::string& path) {
  dict.Validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  binio::WriteMagic(out, kMagic);
  binio::WriteU32(out, kDictionaryFormatVersion);
  binio::WriteU32(out, static_cast<std::uint32_t>(dict.patch_size));
  binio::WriteU32(out, static_cast<std::uint32_t>(dict.factor));
  binio::WriteU32(out, static_cast<std::uint32_t>(dict.atoms()));
  binio::WriteU32(out, static_cast<std::uint32_t>(dict.low_dim()));
  binio::WriteU32(out, static_cast<std::uint32_t>(dict.high_dim()));
  for (const Eigen::MatrixXd* m : {&dict.low, &dict.high}) {
    for (Eigen::Index r = 0; r < m->rows(); ++r) {
      for (Eigen::Index c = 0; c < m->cols(); ++c) binio::WriteF64(out, (*m)(r, c));
    }
  }
  if (!out) throw FormatError(path + ": write failed");
}

DictionaryPair LoadDictionary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open dictionary");
  binio::ExpectMagic(in, kMagic, "dictionary");
  const std::uint32_t version = binio::ReadU32(in);
  if (version != kDictionaryFormatVersion) {
    throw FormatError(path + ": unsupported dictionary version " + std::to_string(version));
  }
  DictionaryPair dict;
  dict.patch_size = static_cast<int>(binio::ReadU32(in));
  dict.factor = static_cast<int>(binio::ReadU32(in));
  const std::uint32_t k = binio::ReadU32(in);
  const std::uint32_t dl = binio::ReadU32(in);
  const std::uint32_t dh = binio::ReadU32(in);
  if (k == 0 || k > (1u << 20) || dl == 0 || dl > (1u << 20) || dh == 0 || dh > (1u << 20)) {
    throw FormatError(path + ": implausible dictionary dimensions");
  }
  dict.low.resize(dl, k);
  dict.high.resize(dh, k);
  for (Eigen::MatrixXd* m : {&dict.low, &dict.high}) {
    for (Eigen::Index r = 0; r < m->rows(); ++r) {
      for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = binio::ReadF64(in);
    }
  }
  try {
    dict.Validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(path + ": " + e.what());
  }
  return dict;
}

}  // namespace jsr::sparse
