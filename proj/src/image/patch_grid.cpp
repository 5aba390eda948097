#include "jsr/image/patch_grid.h"

#include <stdexcept>
#include <string>

namespace jsr::image {
namespace {

std::vector<int> AxisOrigins(int length, int size, int stride) {
  std::vector<int> origins;
  for (int o = 0; o + size <= length; o += stride) origins.push_back(o);
  if (origins.back() + size < length) origins.push_back(length - size);
  return origins;
}

}  // namespace

PatchGrid::PatchGrid(int image_height, int image_width, int patch_size, int overlap)
    : image_height_(image_height),
      image_width_(image_width),
      patch_size_(patch_size),
      overlap_(overlap) {
  if (patch_size < 1 || overlap < 0 || overlap >= patch_size) {
    throw std::invalid_argument("need patch_size >= 1 and 0 <= overlap < patch_size");
  }
  if (image_height < patch_size || image_width < patch_size) {
    throw std::invalid_argument("image " + std::to_string(image_height) + "x" +
                                std::to_string(image_width) + " smaller than patch size " +
                                std::to_string(patch_size));
  }
  rows_ = AxisOrigins(image_height, patch_size, stride());
  cols_ = AxisOrigins(image_width, patch_size, stride());
}

PatchOrigin PatchGrid::origin(std::size_t index) const {
  return {rows_[index / cols_.size()], cols_[index % cols_.size()]};
}

std::vector<PatchOrigin> PatchGrid::origins() const {
  std::vector<PatchOrigin> out;
  out.reserve(count());
  for (int r : rows_) {
    for (int c : cols_) out.push_back({r, c});
  }
  return out;
}

PatchGrid PatchGrid::Scaled(int factor) const {
  PatchGrid g;
  g.image_height_ = image_height_ * factor;
  g.image_width_ = image_width_ * factor;
  g.patch_size_ = patch_size_ * factor;
  g.overlap_ = overlap_ * factor;
  for (int r : rows_) g.rows_.push_back(r * factor);
  for (int c : cols_) g.cols_.push_back(c * factor);
  return g;
}

Patch ExtractPatch(const LumaImage& img, int row, int col, int size) {
  if (row < 0 || col < 0 || row + size > img.height() || col + size > img.width()) {
    throw std::invalid_argument("patch outside image");
  }
  Patch p(size * size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) p[r * size + c] = img.at(row + r, col + c);
  }
  return p;
}

std::vector<Patch> ExtractPatches(const LumaImage& img, const PatchGrid& grid) {
  if (img.height() != grid.image_height() || img.width() != grid.image_width()) {
    throw std::invalid_argument("patch grid does not match image size");
  }
  std::vector<Patch> patches;
  patches.reserve(grid.count());
  for (const PatchOrigin& o : grid.origins()) {
    patches.push_back(ExtractPatch(img, o.row, o.col, grid.patch_size()));
  }
  return patches;
}

LumaImage AssemblePatches(const std::vector<Patch>& patches, const PatchGrid& grid) {
  if (patches.size() != grid.count()) {
    throw std::invalid_argument("expected " + std::to_string(grid.count()) + " patches, got " +
                                std::to_string(patches.size()));
  }
  const int n = grid.patch_size();
  LumaImage sum(grid.image_height(), grid.image_width());
  LumaImage coverage(grid.image_height(), grid.image_width());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (patches[i].size() != n * n) throw std::invalid_argument("patch has wrong length");
    const PatchOrigin o = grid.origin(i);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        sum.at(o.row + r, o.col + c) += patches[i][r * n + c];
        coverage.at(o.row + r, o.col + c) += 1.0;
      }
    }
  }
  auto s = sum.pixels();
  auto cov = coverage.pixels();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] /= cov[i];
  return sum;
}

}  // namespace jsr::image
