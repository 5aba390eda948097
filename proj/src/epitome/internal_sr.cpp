#include "jsr/epitome/internal_sr.h"

#include <stdexcept>
#include <string>

#include "jsr/common/parallel.h"
#include "jsr/image/resample.h"

namespace jsr::epitome {

InternalContext BuildInternalContext(const image::LumaImage& input, int factor,
                                     const InternalConfig& config, const Epitome* pretrained) {
  image::ValidateFactor(factor);
  const int hr_patch = config.patch_size * factor;
  if (input.height() < hr_patch || input.width() < hr_patch) {
    throw std::invalid_argument("input too small for HR patches of size " + std::to_string(hr_patch));
  }

  InternalContext ctx;
  ctx.interpolated = image::Upsample(input, factor);
  ctx.smoothed = image::Downsample(ctx.interpolated, factor);

  if (pretrained != nullptr) {
    if (pretrained->patch_size != hr_patch || pretrained->source_height != input.height() ||
        pretrained->source_width != input.width()) {
      throw std::invalid_argument("supplied epitome does not match this input and patch size");
    }
    ctx.epitome = *pretrained;
  } else {
    EpitomeConfig ec = config.epitome;
    ec.patch_size = hr_patch;
    ec.threads = config.threads;
    EpitomeTrainingResult trained = TrainEpitome(ctx.smoothed, ec);
    ctx.epitome = std::move(trained.epitome);
    ctx.epitome_log_likelihood = std::move(trained.log_likelihood);
  }

  const image::PatchGrid grid(input.height(), input.width(), config.patch_size, config.overlap);
  const image::PatchGrid hr_grid = grid.Scaled(factor);
  ctx.patches.resize(hr_grid.count());
  ParallelFor(hr_grid.count(), config.threads, [&](std::size_t i) {
    InternalPatch& ip = ctx.patches[i];
    const image::PatchOrigin o = hr_grid.origin(i);
    ip.query = image::ExtractPatch(ctx.interpolated, o.row, o.col, hr_patch);
    ip.epitomic = EpitomicMatch(ctx.epitome, ctx.smoothed, ip.query);
    const image::PatchOrigin centre =
        CorrespondingOrigin(o, factor, hr_patch, ctx.smoothed.height(), ctx.smoothed.width());
    ip.window = NearestNeighborMatch(ctx.smoothed, ip.query, centre, config.nn_radius);
    for (const Candidate& c : ip.epitomic.candidates) {
      MatchResult single = ip.epitomic;
      single.origin = c.origin;
      single.error = c.error;
      ip.transfers.push_back(TransferHighFrequency(input, ctx.smoothed, single, ip.query, ip.window));
      ip.errors.push_back(c.error);
    }
  });
  return ctx;
}

image::LumaImage EpiUpscale(const image::LumaImage& input, int factor, const InternalConfig& config,
                            const Epitome* pretrained) {
  const InternalContext ctx = BuildInternalContext(input, factor, config, pretrained);
  std::vector<image::Patch> patches;
  patches.reserve(ctx.patches.size());
  for (const InternalPatch& ip : ctx.patches) patches.push_back(ip.transfers.front());
  const image::PatchGrid grid(input.height(), input.width(), config.patch_size, config.overlap);
  image::LumaImage out = image::AssemblePatches(patches, grid.Scaled(factor));
  out.ClampToUnit();
  return out;
}

image::LumaImage LocalSelfExampleUpscale(const image::LumaImage& input, int factor,
                                         const InternalConfig& config) {
  image::ValidateFactor(factor);
  const int hr_patch = config.patch_size * factor;
  if (input.height() < hr_patch || input.width() < hr_patch) {
    throw std::invalid_argument("input too small for HR patches of size " + std::to_string(hr_patch));
  }
  const image::LumaImage interpolated = image::Upsample(input, factor);
  const image::LumaImage smoothed = image::Downsample(interpolated, factor);
  const image::PatchGrid grid(input.height(), input.width(), config.patch_size, config.overlap);
  const image::PatchGrid hr_grid = grid.Scaled(factor);
  std::vector<image::Patch> patches(hr_grid.count());
  ParallelFor(hr_grid.count(), config.threads, [&](std::size_t i) {
    const image::PatchOrigin o = hr_grid.origin(i);
    const image::Patch query = image::ExtractPatch(interpolated, o.row, o.col, hr_patch);
    const image::PatchOrigin centre =
        CorrespondingOrigin(o, factor, hr_patch, smoothed.height(), smoothed.width());
    const MatchResult window = NearestNeighborMatch(smoothed, query, centre, config.nn_radius);
    patches[i] = TransferFrom(input, smoothed, window.origin, query);
  });
  image::LumaImage out = image::AssemblePatches(patches, hr_grid);
  out.ClampToUnit();
  return out;
}

}  // namespace jsr::epitome
