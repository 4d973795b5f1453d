#include "c2pd/guidance.hpp"

#include <algorithm>
#include <cmath>

#include "c2pd/imageio.hpp"

namespace c2pd {

RgbImage::RgbImage(std::size_t height, std::size_t width, std::vector<double> rgb)
    : height_(height), width_(width), rgb_(std::move(rgb)) {
  if (height_ == 0 || width_ == 0) throw SizeError("RgbImage: dimensions must be positive");
  if (rgb_.size() != 3 * height_ * width_) throw ShapeError("RgbImage: channel data does not match dimensions");
  for (double v : rgb_) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("RgbImage: channel value outside [0, 1]");
  }
}

GuidanceKind parse_guidance_kind(std::string_view text) {
  if (text == "grayscale" || text == "grayscale-gradient") return GuidanceKind::Grayscale;
  if (text == "gt-oracle") return GuidanceKind::GtOracle;
  if (text == "file") return GuidanceKind::File;
  throw ConfigError("unknown guidance source '" + std::string(text) + "' (expected grayscale, gt-oracle or file)");
}

std::string to_string(GuidanceKind kind) {
  switch (kind) {
    case GuidanceKind::Grayscale:
      return "grayscale";
    case GuidanceKind::GtOracle:
      return "gt-oracle";
    case GuidanceKind::File:
      return "file";
  }
  return "?";
}

GuidanceGrid guidance_from_rgb(const RgbImage& img) {
  std::vector<double> lum(img.height() * img.width());
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t c = 0; c < img.width(); ++c)
      lum[r * img.width() + c] = 0.299 * img.r(r, c) + 0.587 * img.g(r, c) + 0.114 * img.b(r, c);
  return GuidanceGrid(img.height(), img.width(), std::move(lum));
}

GuidanceGrid guidance_from_gt(const DepthGrid& gt) {
  const auto [lo, hi] = std::minmax_element(gt.values().begin(), gt.values().end());
  const double min = *lo;
  const double range = *hi - *lo;
  std::vector<double> v(gt.size(), 0.0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (gt[i] - min) / range;
  }
  return GuidanceGrid(gt.height(), gt.width(), std::move(v));
}

GuidanceGrid load_guidance(const std::filesystem::path& path) {
  return retag<GuidanceTag>(read_depth(path, DepthUnit::Centimeters));
}

}  // namespace c2pd
