#pragma once

#include <vector>

#include <Eigen/Core>

#include "jsr/image/luma_image.h"

namespace jsr::image {

struct PatchOrigin {
  int row = 0;
  int col = 0;
  bool operator==(const PatchOrigin&) const = default;
};

// Overlapping square patches covering an image. Origins advance by
// stride = patch_size - overlap; the last row/column is snapped inward so
// every patch lies fully inside the image.
class PatchGrid {
 public:
  PatchGrid(int image_height, int image_width, int patch_size, int overlap);

  int image_height() const { return image_height_; }
  int image_width() const { return image_width_; }
  int patch_size() const { return patch_size_; }
  int overlap() const { return overlap_; }
  int stride() const { return patch_size_ - overlap_; }

  const std::vector<int>& row_origins() const { return rows_; }
  const std::vector<int>& col_origins() const { return cols_; }
  int grid_rows() const { return static_cast<int>(rows_.size()); }
  int grid_cols() const { return static_cast<int>(cols_.size()); }
  std::size_t count() const { return rows_.size() * cols_.size(); }

  // Row-major.
  PatchOrigin origin(std::size_t index) const;
  std::vector<PatchOrigin> origins() const;

  // The same grid with every length multiplied by factor (HR geometry).
  PatchGrid Scaled(int factor) const;

 private:
  PatchGrid() = default;

  int image_height_ = 0;
  int image_width_ = 0;
  int patch_size_ = 0;
  int overlap_ = 0;
  std::vector<int> rows_;
  std::vector<int> cols_;
};

using Patch = Eigen::VectorXd;

// Row-major flattened size x size crop.
Patch ExtractPatch(const LumaImage& img, int row, int col, int size);
std::vector<Patch> ExtractPatches(const LumaImage& img, const PatchGrid& grid);

// Averages overlapping contributions (sum / coverage).
LumaImage AssemblePatches(const std::vector<Patch>& patches, const PatchGrid& grid);

}  // namespace jsr::image
