#include "jsr/image/luma_image.h"

#include <algorithm>
#include <string>

namespace jsr::image {

LumaImage::LumaImage(int height, int width, double fill)
    : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("image dimensions must be positive, got " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
  data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
}

LumaImage::LumaImage(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw std::invalid_argument("pixel buffer does not match image dimensions");
  }
}

void LumaImage::ClampToUnit() {
  for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

LumaImage LumaImage::Crop(int row, int col, int rows, int cols) const {
  if (row < 0 || col < 0 || rows < 1 || cols < 1 || row + rows > height_ ||
      col + cols > width_) {
    throw std::invalid_argument("crop window outside image");
  }
  LumaImage out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    std::copy_n(&data_[Index(row + r, col)], cols, &out.at(r, 0));
  }
  return out;
}

int ReflectIndex(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace jsr::image
