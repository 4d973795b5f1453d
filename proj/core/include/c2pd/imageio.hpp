#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "c2pd/capo.hpp"
#include "c2pd/grid.hpp"
#include "c2pd/rgb_image.hpp"

namespace c2pd {

enum class DepthUnit { Centimeters, Meters };

DepthUnit parse_unit(std::string_view text);

// ---------------------------------------------------------------------------
// PFM: "Pf" (1 channel) or "PF" (3 channels), width height, scale (negative
// means little-endian), float32 raster stored bottom row first.

struct PfmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  double scale = -1.0;
  std::vector<float> data;  // top row first, channels interleaved
};

PfmImage decode_pfm(std::string_view bytes);
/// Always writes little-endian with scale -|scale|.
std::string encode_pfm(const PfmImage& img);

// ---------------------------------------------------------------------------
// PGM (P5), maxval 255 or 65535, big-endian 16-bit samples.

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint32_t maxval = 65535;
  std::vector<std::uint16_t> samples;
};

PgmImage decode_pgm(std::string_view bytes);
std::string encode_pgm(const PgmImage& img);

// ---------------------------------------------------------------------------
// Depth grids. The container is picked from the file magic on read and from
// the extension on write (".pgm" quantizes, anything else is PFM).
//
// PFM values are multiplied by |scale| on load and by 100 for meter files;
// writing converts back to the requested unit and truncates to float32.
//
// PGM output quantizes linearly over [min, max]; the range goes to a sidecar
// "<file>.range" so the quantization can be undone on read.

DepthGrid read_depth(const std::filesystem::path& path, DepthUnit unit = DepthUnit::Centimeters);
void write_depth(const DepthGrid& grid, const std::filesystem::path& path, DepthUnit unit = DepthUnit::Centimeters);
void write_depth_pgm(const DepthGrid& grid, const std::filesystem::path& path, std::uint32_t maxval = 65535);

// PPM (P6, maxval 255) colour images.
RgbImage read_rgb(const std::filesystem::path& path);
void write_rgb(const RgbImage& img, const std::filesystem::path& path);
RgbImage decode_ppm(std::string_view bytes);

// ---------------------------------------------------------------------------
// Variation-network parameter files, little-endian:
//   "C2PD" | u32 version | u32 n | u32 layer count
//   per layer: u32 out | u32 in | f64 weights[out*in] (row-major) | f64 bias[out]

inline constexpr std::uint32_t kParamsFormatVersion = 1;

std::string encode_params(const CapoParams& params);
CapoParams decode_params(std::string_view bytes);
CapoParams read_params(const std::filesystem::path& path);
void write_params(const CapoParams& params, const std::filesystem::path& path);

/// Throws ConfigError when the network's n does not match the window.
void require_params_match(const CapoParams& params, const WindowSpec& spec);

// ---------------------------------------------------------------------------
// Plain file helpers.

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Shortest decimal representation that round-trips the double.
std::string format_double(double v);

/// Append one CSV row, writing `header` first when the file is new or empty.
void append_csv_row(const std::filesystem::path& path, std::string_view header, std::string_view row);

}  // namespace c2pd
