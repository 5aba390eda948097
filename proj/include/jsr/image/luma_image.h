#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace jsr::image {

// Single-channel image of doubles, row-major. Intensities are nominally in
// [0, 1]; nothing clamps them except ClampToUnit().
class LumaImage {
 public:
  LumaImage() = default;
  LumaImage(int height, int width, double fill = 0.0);
  LumaImage(int height, int width, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int row, int col) { return data_[Index(row, col)]; }
  double at(int row, int col) const { return data_[Index(row, col)]; }

  std::span<double> pixels() { return data_; }
  std::span<const double> pixels() const { return data_; }

  bool SameShape(const LumaImage& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  void ClampToUnit();

  // Sub-image [row, row+rows) x [col, col+cols); must lie inside.
  LumaImage Crop(int row, int col, int rows, int cols) const;

  bool operator==(const LumaImage& other) const = default;

 private:
  std::size_t Index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Reflects an out-of-range index back into [0, n) without repeating the edge
// sample (..., 2, 1, 0, 1, 2, ...). n == 1 maps everything to 0.
int ReflectIndex(int i, int n);

}  // namespace jsr::image
