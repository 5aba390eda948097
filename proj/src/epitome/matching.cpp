#include "jsr/epitome/matching.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace jsr::epitome {
namespace {

double PatchSsd(const image::LumaImage& img, int row, int col, int size, const image::Patch& query) {
  double acc = 0.0;
  for (int r = 0; r < size; ++r) {
    const double* line = img.pixels().data() + static_cast<std::size_t>(row + r) * img.width() + col;
    const double* q = query.data() + r * size;
    for (int c = 0; c < size; ++c) {
      const double d = line[c] - q[c];
      acc += d * d;
    }
  }
  return acc;
}

int PatchSide(const image::Patch& query) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(query.size()))));
  if (side * side != query.size() || side < 1) throw std::invalid_argument("query patch is not square");
  return side;
}

image::Patch Band(const image::LumaImage& input, const image::LumaImage& smoothed,
                  image::PatchOrigin o, int size) {
  return image::ExtractPatch(input, o.row, o.col, size) -
         image::ExtractPatch(smoothed, o.row, o.col, size);
}

}  // namespace

MatchResult EpitomicMatch(const Epitome& e, const image::LumaImage& smoothed,
                          const image::Patch& query) {
  if (smoothed.height() != e.source_height || smoothed.width() != e.source_width) {
    throw std::invalid_argument("epitome was trained on an image of different size");
  }
  const std::vector<double> logp = MappingLogJoint(e, query);
  std::size_t best = 0;
  for (std::size_t t = 1; t < logp.size(); ++t) {
    if (logp[t] > logp[best]) best = t;
  }
  double sum = 0.0;
  for (double v : logp) sum += std::exp(v - logp[best]);

  MatchResult out;
  out.weight = 1.0 / sum;
  const int k = e.candidates_per_mapping;
  std::vector<std::pair<Candidate, std::int32_t>> found;
  for (int i = 0; i < k; ++i) {
    const std::int32_t idx = e.candidate_index[best * k + i];
    if (idx < 0) continue;
    const image::PatchOrigin o = e.SourceOrigin(idx);
    found.push_back({{o, PatchSsd(smoothed, o.row, o.col, e.patch_size, query)}, idx});
  }
  if (found.empty()) throw std::invalid_argument("epitome has no stored candidates");
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return a.first.error < b.first.error || (a.first.error == b.first.error && a.second < b.second);
  });
  for (const auto& f : found) out.candidates.push_back(f.first);
  out.origin = out.candidates.front().origin;
  out.error = out.candidates.front().error;
  return out;
}

MatchResult NearestNeighborMatch(const image::LumaImage& smoothed, const image::Patch& query,
                                 image::PatchOrigin center, int radius) {
  const int size = PatchSide(query);
  if (size > smoothed.height() || size > smoothed.width()) {
    throw std::invalid_argument("query patch larger than image");
  }
  if (radius < 0) throw std::invalid_argument("search radius must be non-negative");
  const int max_r = smoothed.height() - size, max_c = smoothed.width() - size;
  const int cr = std::clamp(center.row, 0, max_r), cc = std::clamp(center.col, 0, max_c);

  MatchResult out;
  out.error = std::numeric_limits<double>::infinity();
  for (int r = std::max(0, cr - radius); r <= std::min(max_r, cr + radius); ++r) {
    for (int c = std::max(0, cc - radius); c <= std::min(max_c, cc + radius); ++c) {
      const double err = PatchSsd(smoothed, r, c, size, query);
      if (err < out.error) {
        out.error = err;
        out.origin = {r, c};
      }
    }
  }
  out.weight = 0.0;
  out.candidates = {{out.origin, out.error}};
  return out;
}

image::Patch TransferFrom(const image::LumaImage& input, const image::LumaImage& smoothed,
                          image::PatchOrigin origin, const image::Patch& query) {
  return query + Band(input, smoothed, origin, PatchSide(query));
}

image::Patch TransferHighFrequency(const image::LumaImage& input, const image::LumaImage& smoothed,
                                   const MatchResult& epitomic, const image::Patch& query,
                                   const MatchResult& window) {
  if (!input.SameShape(smoothed)) throw std::invalid_argument("Y and Y' differ in size");
  const int size = PatchSide(query);
  const double w = epitomic.weight;
  return query + w * Band(input, smoothed, epitomic.origin, size) +
         (1.0 - w) * Band(input, smoothed, window.origin, size);
}

image::PatchOrigin CorrespondingOrigin(image::PatchOrigin hr_origin, int factor, int patch_size,
                                       int smoothed_height, int smoothed_width) {
  auto axis = [&](int hr, int limit) {
    const double centre = (hr + 0.5 * patch_size) / factor;
    const int origin = static_cast<int>(std::lround(centre - 0.5 * patch_size));
    return std::clamp(origin, 0, std::max(0, limit - patch_size));
  };
  return {axis(hr_origin.row, smoothed_height), axis(hr_origin.col, smoothed_width)};
}

}  // namespace jsr::epitome
