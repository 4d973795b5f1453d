#include "c2pd/grid.hpp"

namespace c2pd {

DepthGrid make_grid(long long height, long long width, double fill) {
  if (height < 1 || width < 1) {
    throw SizeError("make_grid: dimensions must be >= 1, got " + std::to_string(height) + "x" +
                    std::to_string(width));
  }
  if (!std::isfinite(fill)) throw NumericError("make_grid: fill value must be finite");
  const auto h = static_cast<std::size_t>(height);
  const auto w = static_cast<std::size_t>(width);
  return DepthGrid(h, w, std::vector<double>(h * w, fill));
}

double stable_sum(std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError("stable_sum: non-finite input");
    acc += v;
  }
  return acc;
}

Offset WindowSpec::slot_offset(std::size_t slot) const {
  const long s = static_cast<long>(slot);
  switch (shape) {
    case WindowShape::Row1x4:
      return {0, s - 3};
    case WindowShape::Col4x1:
      return {s - 3, 0};
    case WindowShape::Square3x3:
      return {s / 3 - 1, s % 3 - 1};
  }
  return {0, 0};
}

WindowSpec WindowSpec::transposed() const {
  WindowSpec t = *this;
  if (shape == WindowShape::Row1x4) t.shape = WindowShape::Col4x1;
  else if (shape == WindowShape::Col4x1) t.shape = WindowShape::Row1x4;
  return t;
}

WindowShape parse_window_shape(std::string_view text) {
  if (text == "1x4") return WindowShape::Row1x4;
  if (text == "4x1") return WindowShape::Col4x1;
  if (text == "3x3") return WindowShape::Square3x3;
  throw ConfigError("unknown window shape '" + std::string(text) + "' (expected 1x4, 4x1 or 3x3)");
}

Padding parse_padding(std::string_view text) {
  if (text == "replicate") return Padding::Replicate;
  if (text == "circular") return Padding::Circular;
  throw ConfigError("unknown padding '" + std::string(text) + "' (expected replicate or circular)");
}

std::string to_string(WindowShape shape) {
  switch (shape) {
    case WindowShape::Row1x4:
      return "1x4";
    case WindowShape::Col4x1:
      return "4x1";
    case WindowShape::Square3x3:
      return "3x3";
  }
  return "?";
}

std::string to_string(Padding padding) { return padding == Padding::Circular ? "circular" : "replicate"; }

namespace {

long wrap(long i, long extent) {
  const long m = i % extent;
  return m < 0 ? m + extent : m;
}

long clamp(long i, long extent) { return i < 0 ? 0 : (i >= extent ? extent - 1 : i); }

}  // namespace

std::size_t window_source(const WindowSpec& spec, std::size_t height, std::size_t width,
                          std::size_t anchor, std::size_t slot) {
  const long h = static_cast<long>(height);
  const long w = static_cast<long>(width);
  const Offset off = spec.slot_offset(slot);
  long r = static_cast<long>(anchor / width) + off.row;
  long c = static_cast<long>(anchor % width) + off.col;
  if (spec.padding == Padding::Circular) {
    r = wrap(r, h);
    c = wrap(c, w);
  } else {
    r = clamp(r, h);
    c = clamp(c, w);
  }
  return static_cast<std::size_t>(r * w + c);
}

std::optional<std::size_t> window_target(const WindowSpec& spec, std::size_t height,
                                         std::size_t width, std::size_t anchor, std::size_t slot) {
  const long h = static_cast<long>(height);
  const long w = static_cast<long>(width);
  const Offset off = spec.slot_offset(slot);
  long r = static_cast<long>(anchor / width) + off.row;
  long c = static_cast<long>(anchor % width) + off.col;
  if (spec.padding == Padding::Circular) {
    r = wrap(r, h);
    c = wrap(c, w);
  } else if (r < 0 || r >= h || c < 0 || c >= w) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(r * w + c);
}

WindowSet extract_windows(const DepthGrid& stream, const GuidanceGrid& guide, const WindowSpec& spec) {
  require_same_shape(stream, guide, "extract_windows");
  WindowSet set;
  set.spec = spec;
  set.height = stream.height();
  set.width = stream.width();
  const std::size_t n = spec.n();
  const std::size_t anchors = set.anchor_count();
  set.coords.resize(anchors * n);
  set.values.resize(anchors * 2 * n);
  for (std::size_t a = 0; a < anchors; ++a) {
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t src = window_source(spec, set.height, set.width, a, s);
      set.coords[a * n + s] = src;
      set.values[a * 2 * n + s] = stream[src];
      set.values[a * 2 * n + n + s] = guide[src];
    }
  }
  return set;
}

}  // namespace c2pd
