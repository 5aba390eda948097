#include "jsr/epitome/epitome.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "jsr/common/binary_io.h"
#include "jsr/common/errors.h"
#include "jsr/common/parallel.h"

namespace jsr::epitome {
namespace {

constexpr char kMagic[9] = "JSREPIT";
constexpr std::size_t kAccumulationBlocks = 64;
// Posterior mass below this is dropped from the M-step sums.
constexpr double kNegligiblePosterior = 1e-13;

double LogSumExp(const std::vector<double>& v) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double x : v) peak = std::max(peak, x);
  if (!std::isfinite(peak)) return peak;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - peak);
  return peak + std::log(sum);
}

// Epitome-sized maps padded by patch_size - 1 so every mapping window is a
// plain rectangle (wrapped copies in toroidal mode).
struct Extended {
  int rows = 0, cols = 0;
  std::vector<double> data;
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

Extended Extend(const image::LumaImage& map, const Epitome& e, auto&& value) {
  Extended ext;
  ext.rows = e.wrap ? e.rows() + e.patch_size - 1 : e.rows();
  ext.cols = e.wrap ? e.cols() + e.patch_size - 1 : e.cols();
  ext.data.resize(static_cast<std::size_t>(ext.rows) * ext.cols);
  for (int r = 0; r < ext.rows; ++r) {
    for (int c = 0; c < ext.cols; ++c) {
      ext.data[static_cast<std::size_t>(r) * ext.cols + c] =
          value(map.at(r % e.rows(), c % e.cols()), r % e.rows(), c % e.cols());
    }
  }
  return ext;
}

// Everything needed to score a patch against every mapping.
struct Scorer {
  const Epitome& e;
  Extended inv_var;       // 1 / var
  Extended mean_inv_var;  // mean / var
  std::vector<double> offset;  // log prior - 0.5 * sum(mean^2/var + log(2 pi var))

  explicit Scorer(const Epitome& epitome) : e(epitome) {
    inv_var = Extend(e.variance, e, [](double v, int, int) { return 1.0 / v; });
    mean_inv_var = Extend(e.variance, e, [&](double v, int r, int c) { return e.mean.at(r, c) / v; });
    const Extended constant = Extend(e.variance, e, [&](double v, int r, int c) {
      const double m = e.mean.at(r, c);
      return m * m / v + std::log(2.0 * std::numbers::pi * v);
    });
    const int p = e.patch_size;
    offset.resize(e.mapping_count());
    for (std::size_t t = 0; t < offset.size(); ++t) {
      const image::PatchOrigin o = e.MappingOrigin(t);
      double k = 0.0;
      for (int u = 0; u < p; ++u) {
        for (int v = 0; v < p; ++v) k += constant.at(o.row + u, o.col + v);
      }
      const double prior = e.prior[t];
      offset[t] = (prior > 0.0 ? std::log(prior) : -std::numeric_limits<double>::infinity()) -
                  0.5 * k;
    }
  }

  double LogJoint(std::size_t t, const double* z, const double* z2) const {
    const int p = e.patch_size;
    const image::PatchOrigin o = e.MappingOrigin(t);
    double acc = 0.0;
    for (int u = 0; u < p; ++u) {
      const double* iv = &inv_var.data[static_cast<std::size_t>(o.row + u) * inv_var.cols + o.col];
      const double* miv =
          &mean_inv_var.data[static_cast<std::size_t>(o.row + u) * mean_inv_var.cols + o.col];
      const double* zr = z + u * p;
      const double* z2r = z2 + u * p;
      for (int v = 0; v < p; ++v) acc += z2r[v] * iv[v] - 2.0 * zr[v] * miv[v];
    }
    return offset[t] - 0.5 * acc;
  }

  void LogJointAll(const image::Patch& z, std::vector<double>& out) const {
    const Eigen::VectorXd z2 = z.array().square();
    out.resize(offset.size());
    for (std::size_t t = 0; t < offset.size(); ++t) out[t] = LogJoint(t, z.data(), z2.data());
  }
};

struct Accumulator {
  std::vector<double> weight, sum, sum_sq;  // extended epitome layout
  std::vector<double> prior;
  double log_likelihood = 0.0;
};

void Validate(const image::LumaImage& source, const EpitomeConfig& config) {
  if (config.patch_size < 1) throw std::invalid_argument("epitome patch size must be positive");
  if (source.height() < config.patch_size || source.width() < config.patch_size) {
    throw std::invalid_argument("image smaller than epitome patch size");
  }
  if (config.em_iterations < 1) throw std::invalid_argument("need at least one EM iteration");
  if (!(config.variance_floor > 0.0)) throw std::invalid_argument("variance floor must be > 0");
  if (config.candidates < 1) throw std::invalid_argument("candidate count must be positive");
  if (config.max_patches < 1) throw std::invalid_argument("patch budget must be positive");
}

}  // namespace

std::vector<double> MappingLogJoint(const Epitome& e, const image::Patch& patch) {
  if (patch.size() != e.patch_size * e.patch_size) {
    throw std::invalid_argument("patch does not match epitome patch size");
  }
  std::vector<double> out;
  Scorer(e).LogJointAll(patch, out);
  return out;
}

std::vector<double> Posterior(const Epitome& e, const image::Patch& patch) {
  std::vector<double> logp = MappingLogJoint(e, patch);
  const double norm = LogSumExp(logp);
  for (double& v : logp) v = std::exp(v - norm);
  return logp;
}

EpitomeTrainingResult TrainEpitome(const image::LumaImage& source, const EpitomeConfig& config) {
  Validate(source, config);
  const int p = config.patch_size;
  const int rows = config.rows > 0 ? config.rows : std::max(1, (source.height() + 1) / 2);
  const int cols = config.cols > 0 ? config.cols : std::max(1, (source.width() + 1) / 2);
  if (rows >= source.height() || cols >= source.width()) {
    throw std::invalid_argument("epitome must be smaller than the image");
  }
  if (!config.wrap && (rows < p || cols < p)) {
    throw std::invalid_argument("non-wrapping epitome must be at least one patch in size");
  }

  Epitome e;
  e.patch_size = p;
  e.wrap = config.wrap;
  e.source_height = source.height();
  e.source_width = source.width();
  e.candidates_per_mapping = config.candidates;
  e.mean = image::LumaImage(rows, cols);
  e.variance = image::LumaImage(rows, cols, std::max(config.initial_variance, config.variance_floor));

  std::mt19937_64 rng(config.seed);
  const int origin_rows = source.height() - p + 1;
  const int origin_cols = source.width() - p + 1;
  {
    std::uniform_int_distribution<int> pick_r(0, origin_rows - 1), pick_c(0, origin_cols - 1);
    for (int tr = 0; tr < rows; tr += p) {
      for (int tc = 0; tc < cols; tc += p) {
        const int sr = pick_r(rng), sc = pick_c(rng);
        for (int u = 0; u < p && tr + u < rows; ++u) {
          for (int v = 0; v < p && tc + v < cols; ++v) e.mean.at(tr + u, tc + v) = source.at(sr + u, sc + v);
        }
      }
    }
  }
  e.prior.assign(e.mapping_count(), 1.0 / static_cast<double>(e.mapping_count()));

  // Training patches: all origins, or a sorted uniform subset.
  std::vector<std::int32_t> origins(static_cast<std::size_t>(origin_rows) * origin_cols);
  for (std::size_t i = 0; i < origins.size(); ++i) origins[i] = static_cast<std::int32_t>(i);
  if (origins.size() > static_cast<std::size_t>(config.max_patches)) {
    std::shuffle(origins.begin(), origins.end(), rng);
    origins.resize(static_cast<std::size_t>(config.max_patches));
    std::sort(origins.begin(), origins.end());
  }
  const std::size_t count = origins.size();
  auto patch_at = [&](std::size_t k) {
    const std::int32_t idx = origins[k];
    return image::ExtractPatch(source, idx / origin_cols, idx % origin_cols, p);
  };

  const std::size_t blocks = std::min(kAccumulationBlocks, count);
  auto block_range = [&](std::size_t b) {
    return std::pair{b * count / blocks, (b + 1) * count / blocks};
  };

  EpitomeTrainingResult result;
  for (int iter = 0; iter < config.em_iterations; ++iter) {
    const Scorer scorer(e);
    const int ext_rows = scorer.inv_var.rows, ext_cols = scorer.inv_var.cols;
    const std::size_t ext_size = static_cast<std::size_t>(ext_rows) * ext_cols;

    std::vector<Accumulator> acc(blocks);
    ParallelFor(blocks, config.threads, [&](std::size_t b) {
      Accumulator& a = acc[b];
      a.weight.assign(ext_size, 0.0);
      a.sum.assign(ext_size, 0.0);
      a.sum_sq.assign(ext_size, 0.0);
      a.prior.assign(e.mapping_count(), 0.0);
      std::vector<double> logp;
      const auto [begin, end] = block_range(b);
      for (std::size_t k = begin; k < end; ++k) {
        const image::Patch z = patch_at(k);
        scorer.LogJointAll(z, logp);
        const double norm = LogSumExp(logp);
        a.log_likelihood += norm;
        for (std::size_t t = 0; t < logp.size(); ++t) {
          const double q = std::exp(logp[t] - norm);
          if (q < kNegligiblePosterior) continue;
          a.prior[t] += q;
          const image::PatchOrigin o = e.MappingOrigin(t);
          for (int u = 0; u < p; ++u) {
            const std::size_t row = static_cast<std::size_t>(o.row + u) * ext_cols + o.col;
            for (int v = 0; v < p; ++v) {
              const double zv = z[u * p + v];
              a.weight[row + v] += q;
              a.sum[row + v] += q * zv;
              a.sum_sq[row + v] += q * zv * zv;
            }
          }
        }
      }
    });

    // Fixed-order reduction keeps the model independent of thread count.
    Accumulator total = std::move(acc[0]);
    for (std::size_t b = 1; b < blocks; ++b) {
      for (std::size_t i = 0; i < ext_size; ++i) {
        total.weight[i] += acc[b].weight[i];
        total.sum[i] += acc[b].sum[i];
        total.sum_sq[i] += acc[b].sum_sq[i];
      }
      for (std::size_t t = 0; t < total.prior.size(); ++t) total.prior[t] += acc[b].prior[t];
      total.log_likelihood += acc[b].log_likelihood;
    }
    result.log_likelihood.push_back(total.log_likelihood);

    // Fold the padded border back onto the torus.
    image::LumaImage w(rows, cols), s(rows, cols), s2(rows, cols);
    for (int r = 0; r < ext_rows; ++r) {
      for (int c = 0; c < ext_cols; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * ext_cols + c;
        w.at(r % rows, c % cols) += total.weight[i];
        s.at(r % rows, c % cols) += total.sum[i];
        s2.at(r % rows, c % cols) += total.sum_sq[i];
      }
    }
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double weight = w.at(r, c);
        if (!(weight > 1e-300)) continue;
        const double m = s.at(r, c) / weight;
        e.mean.at(r, c) = m;
        e.variance.at(r, c) = std::max(config.variance_floor, s2.at(r, c) / weight - m * m);
      }
    }
    double prior_sum = 0.0;
    for (double v : total.prior) prior_sum += v;
    for (std::size_t t = 0; t < e.prior.size(); ++t) e.prior[t] = total.prior[t] / prior_sum;
  }

  // Final likelihood and the per-patch normaliser for candidate ranking.
  const Scorer scorer(e);
  std::vector<double> log_norm(count);
  std::vector<double> block_ll(blocks, 0.0);
  ParallelFor(blocks, config.threads, [&](std::size_t b) {
    std::vector<double> logp;
    const auto [begin, end] = block_range(b);
    for (std::size_t k = begin; k < end; ++k) {
      scorer.LogJointAll(patch_at(k), logp);
      log_norm[k] = LogSumExp(logp);
      block_ll[b] += log_norm[k];
    }
  });
  double final_ll = 0.0;
  for (double v : block_ll) final_ll += v;
  result.log_likelihood.push_back(final_ll);

  // Top-K source patches per mapping by log posterior; ties to the smaller
  // source index.
  const int k_max = config.candidates;
  e.candidate_index.assign(e.mapping_count() * static_cast<std::size_t>(k_max), -1);
  using Entry = std::pair<double, std::int32_t>;
  auto better = [](const Entry& a, const Entry& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  const std::size_t mappings = e.mapping_count();
  const std::size_t chunks = std::min<std::size_t>(kAccumulationBlocks, mappings);
  ParallelFor(chunks, config.threads, [&](std::size_t chunk) {
    const std::size_t t_begin = chunk * mappings / chunks;
    const std::size_t t_end = (chunk + 1) * mappings / chunks;
    std::vector<std::vector<Entry>> best(t_end - t_begin);
    for (auto& b : best) b.reserve(static_cast<std::size_t>(k_max) + 1);
    for (std::size_t k = 0; k < count; ++k) {
      const image::Patch z = patch_at(k);
      const Eigen::VectorXd z2 = z.array().square();
      for (std::size_t t = t_begin; t < t_end; ++t) {
        const Entry entry{scorer.LogJoint(t, z.data(), z2.data()) - log_norm[k], origins[k]};
        std::vector<Entry>& list = best[t - t_begin];
        if (list.size() == static_cast<std::size_t>(k_max) && !better(entry, list.back())) continue;
        list.insert(std::upper_bound(list.begin(), list.end(), entry, better), entry);
        if (list.size() > static_cast<std::size_t>(k_max)) list.pop_back();
      }
    }
    for (std::size_t t = t_begin; t < t_end; ++t) {
      const std::vector<Entry>& list = best[t - t_begin];
      for (std::size_t i = 0; i < list.size(); ++i) {
        e.candidate_index[t * k_max + i] = list[i].second;
      }
    }
  });

  result.epitome = std::move(e);
  return result;
}

void SaveEpitome(const Epitome& e, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  binio::WriteMagic(out, kMagic);
  binio::WriteU32(out, kEpitomeFormatVersion);
  binio::WriteU32(out, static_cast<std::uint32_t>(e.rows()));
  binio::WriteU32(out, static_cast<std::uint32_t>(e.cols()));
  binio::WriteU32(out, static_cast<std::uint32_t>(e.patch_size));
  binio::WriteU32(out, static_cast<std::uint32_t>(e.candidates_per_mapping));
  binio::WriteU32(out, e.wrap ? 1u : 0u);
  binio::WriteU32(out, static_cast<std::uint32_t>(e.source_height));
  binio::WriteU32(out, static_cast<std::uint32_t>(e.source_width));
  binio::WriteF64s(out, e.mean.pixels());
  binio::WriteF64s(out, e.variance.pixels());
  binio::WriteF64s(out, e.prior);
  for (std::int32_t idx : e.candidate_index) binio::WriteU32(out, static_cast<std::uint32_t>(idx));
  if (!out) throw FormatError(path + ": write failed");
}

Epitome LoadEpitome(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open epitome");
  binio::ExpectMagic(in, kMagic, "epitome");
  const std::uint32_t version = binio::ReadU32(in);
  if (version != kEpitomeFormatVersion) {
    throw FormatError(path + ": unsupported epitome version " + std::to_string(version));
  }
  const std::uint32_t rows = binio::ReadU32(in), cols = binio::ReadU32(in);
  const std::uint32_t patch = binio::ReadU32(in), k = binio::ReadU32(in);
  const std::uint32_t wrap = binio::ReadU32(in);
  const std::uint32_t src_h = binio::ReadU32(in), src_w = binio::ReadU32(in);
  constexpr std::uint32_t kLimit = 1u << 15;
  if (rows == 0 || cols == 0 || patch == 0 || k == 0 || rows > kLimit || cols > kLimit ||
      patch > kLimit || k > 1024 || wrap > 1 || src_h < patch || src_w < patch ||
      src_h > kLimit || src_w > kLimit) {
    throw FormatError(path + ": implausible epitome header");
  }
  Epitome e;
  e.patch_size = static_cast<int>(patch);
  e.wrap = wrap == 1;
  e.source_height = static_cast<int>(src_h);
  e.source_width = static_cast<int>(src_w);
  e.candidates_per_mapping = static_cast<int>(k);
  e.mean = image::LumaImage(static_cast<int>(rows), static_cast<int>(cols));
  e.variance = image::LumaImage(static_cast<int>(rows), static_cast<int>(cols));
  if (!e.wrap && (rows < patch || cols < patch)) throw FormatError(path + ": epitome too small");
  binio::ReadF64s(in, e.mean.pixels());
  binio::ReadF64s(in, e.variance.pixels());
  e.prior.resize(e.mapping_count());
  binio::ReadF64s(in, e.prior);
  e.candidate_index.resize(e.mapping_count() * k);
  const std::int32_t origin_count =
      static_cast<std::int32_t>((src_h - patch + 1) * (src_w - patch + 1));
  for (std::int32_t& idx : e.candidate_index) {
    idx = static_cast<std::int32_t>(binio::ReadU32(in));
    if (idx < -1 || idx >= origin_count) throw FormatError(path + ": candidate index out of range");
  }
  for (double v : e.variance.pixels()) {
    if (!(v > 0.0) || !std::isfinite(v)) throw FormatError(path + ": invalid variance");
  }
  return e;
}

}  // namespace jsr::epitome
