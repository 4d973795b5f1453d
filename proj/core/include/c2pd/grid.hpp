#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "c2pd/error.hpp"

namespace c2pd {

struct DepthTag {};
struct GuidanceTag {};

/// Dense row-major 2-D grid of doubles. Immutable once built: every
/// operation in the library returns a new grid. The constructor enforces
/// positive dimensions, a matching value count, and finiteness.
template <class Tag>
class Grid {
 public:
  Grid(std::size_t height, std::size_t width, std::vector<double> values)
      : height_(height), width_(width), values_(std::move(values)) {
    if (height_ == 0 || width_ == 0) {
      throw SizeError("grid dimensions must be positive, got " + std::to_string(height_) + "x" +
                      std::to_string(width_));
    }
    if (values_.size() != height_ * width_) {
      throw ShapeError("grid value count " + std::to_string(values_.size()) + " does not match " +
                       std::to_string(height_) + "x" + std::to_string(width_));
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw NumericError("grid contains a non-finite value");
    }
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }

  double operator()(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  double operator[](std::size_t index) const { return values_[index]; }

  bool same_shape(std::size_t h, std::size_t w) const { return height_ == h && width_ == w; }
  template <class Other>
  bool same_shape(const Grid<Other>& other) const {
    return same_shape(other.height(), other.width());
  }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
};

using DepthGrid = Grid<DepthTag>;
using GuidanceGrid = Grid<GuidanceTag>;

/// Reinterpret the values of a grid under a different tag (e.g. a depth
/// gradient magnitude used as guidance).
template <class To, class From>
Grid<To> retag(const Grid<From>& g) {
  return Grid<To>(g.height(), g.width(), std::vector<double>(g.values().begin(), g.values().end()));
}

DepthGrid make_grid(long long height, long long width, double fill);

template <class Tag>
Grid<Tag> transpose(const Grid<Tag>& g) {
  const std::size_t h = g.height();
  const std::size_t w = g.width();
  std::vector<double> out(h * w);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) out[c * h + r] = g(r, c);
  return Grid<Tag>(w, h, std::move(out));
}

template <class Tag>
void require_same_shape(const DepthGrid& a, const Grid<Tag>& b, std::string_view what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": dimension mismatch " + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()));
  }
}

/// Left-to-right sum in index order. Throws NumericError on non-finite input.
double stable_sum(std::span<const double> values);

// ---------------------------------------------------------------------------
// Windows

enum class WindowShape { Row1x4, Col4x1, Square3x3 };
enum class Padding { Replicate, Circular };

struct Offset {
  long row;
  long col;
};

struct WindowSpec {
  WindowShape shape = WindowShape::Row1x4;
  Padding padding = Padding::Replicate;

  std::size_t n() const { return shape == WindowShape::Square3x3 ? 9 : 4; }
  std::size_t rows() const { return shape == WindowShape::Col4x1 ? 4 : shape == WindowShape::Row1x4 ? 1 : 3; }
  std::size_t cols() const { return shape == WindowShape::Row1x4 ? 4 : shape == WindowShape::Col4x1 ? 1 : 3; }

  /// Offset of window slot `slot` relative to its anchor. Line windows are
  /// anchored at their last cell ({t-3..t}); 3x3 windows at their center with
  /// row-major slot order.
  Offset slot_offset(std::size_t slot) const;

  /// The same shape with rows and columns swapped (3x3 maps to itself).
  WindowSpec transposed() const;

  bool operator==(const WindowSpec&) const = default;
};

WindowShape parse_window_shape(std::string_view text);
Padding parse_padding(std::string_view text);
std::string to_string(WindowShape shape);
std::string to_string(Padding padding);

/// Where slot `slot` of the window anchored at flat index `anchor` reads its
/// value from: wrapped (circular) or clamped (replicate) into the grid.
std::size_t window_source(const WindowSpec& spec, std::size_t height, std::size_t width,
                          std::size_t anchor, std::size_t slot);

/// Which cell receives the variation of slot `slot`. Under replicate padding
/// a slot that falls outside the grid has no target; its variation is dropped.
std::optional<std::size_t> window_target(const WindowSpec& spec, std::size_t height,
                                         std::size_t width, std::size_t anchor, std::size_t slot);

/// Per-anchor windows over a stream/guide pair. Anchors are enumerated in
/// row-major order (one per grid cell); each window holds n coordinates and
/// 2n values: the n stream values in slot order, then the n guide values in
/// the same order.
struct WindowSet {
  WindowSpec spec;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::size_t> coords;
  std::vector<double> values;

  std::size_t anchor_count() const { return height * width; }
  std::span<const std::size_t> coordinates(std::size_t anchor) const {
    return std::span(coords).subspan(anchor * spec.n(), spec.n());
  }
  std::span<const double> window(std::size_t anchor) const {
    return std::span(values).subspan(anchor * 2 * spec.n(), 2 * spec.n());
  }
};

WindowSet extract_windows(const DepthGrid& stream, const GuidanceGrid& guide, const WindowSpec& spec);

}  // namespace c2pd
