#pragma once

#include <cstddef>
#include <vector>

#include "c2pd/error.hpp"

namespace c2pd {

/// Interleaved RGB, row-major, channels in [0, 1].
class RgbImage {
 public:
  RgbImage(std::size_t height, std::size_t width, std::vector<double> rgb);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  double r(std::size_t row, std::size_t col) const { return rgb_[3 * (row * width_ + col)]; }
  double g(std::size_t row, std::size_t col) const { return rgb_[3 * (row * width_ + col) + 1]; }
  double b(std::size_t row, std::size_t col) const { return rgb_[3 * (row * width_ + col) + 2]; }
  const std::vector<double>& data() const { return rgb_; }

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> rgb_;
};

}  // namespace c2pd
