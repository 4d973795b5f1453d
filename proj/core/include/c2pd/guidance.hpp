#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "c2pd/grid.hpp"
#include "c2pd/rgb_image.hpp"

namespace c2pd {

/// Where the guidance grid comes from. Learned RGB feature extraction is not
/// provided; these sources stand in for it.
enum class GuidanceKind { Grayscale, GtOracle, File };

struct GuidanceSource {
  GuidanceKind kind = GuidanceKind::Grayscale;
  std::filesystem::path path;  // GuidanceKind::File only
};

GuidanceKind parse_guidance_kind(std::string_view text);
std::string to_string(GuidanceKind kind);

/// BT.601 luminance, 0.299 R + 0.587 G + 0.114 B.
GuidanceGrid guidance_from_rgb(const RgbImage& img);

/// Ground-truth depth min-max normalized to [0, 1]; a constant grid maps to 0.
GuidanceGrid guidance_from_gt(const DepthGrid& gt);

/// Single-channel PFM read verbatim (no unit conversion).
GuidanceGrid load_guidance(const std::filesystem::path& path);

}  // namespace c2pd
