#include "c2pd/imageio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

namespace c2pd {

namespace {

constexpr std::size_t kMaxDim = std::size_t{1} << 20;
constexpr std::uintmax_t kMaxFileBytes = std::uintmax_t{1} << 32;

// Header tokenizer shared by the Netpbm-family readers.
class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes, bool allow_comments)
      : bytes_(bytes), comments_(allow_comments) {}

  std::string_view token() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && pos_ - start < 64) ++pos_;
    if (pos_ == start) throw FormatError("malformed header: missing field");
    return bytes_.substr(start, pos_ - start);
  }

  std::size_t dimension(const char* what) {
    const std::string_view t = token();
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || v == 0 || v > kMaxDim) {
      throw FormatError(std::string("malformed header: bad ") + what);
    }
    return v;
  }

  // The single whitespace byte that separates the header from the raster.
  void end_of_header() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) throw FormatError("malformed header: no raster separator");
    ++pos_;
  }

  std::size_t position() const { return pos_; }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\v' || c == '\f'; }

  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (comments_ && bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  bool comments_;
  std::size_t pos_ = 0;
};

std::uint32_t load_u32le(const unsigned char* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

std::uint64_t load_u64le(const unsigned char* p) {
  return std::uint64_t{load_u32le(p)} | std::uint64_t{load_u32le(p + 4)} << 32;
}

void store_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void store_u64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

const unsigned char* ubytes(std::string_view s) { return reinterpret_cast<const unsigned char*>(s.data()); }

bool has_extension(const std::filesystem::path& p, std::string_view ext) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e == ext;
}

std::filesystem::path range_sidecar(const std::filesystem::path& p) { return p.string() + ".range"; }

}  // namespace

DepthUnit parse_unit(std::string_view text) {
  if (text == "cm") return DepthUnit::Centimeters;
  if (text == "m") return DepthUnit::Meters;
  throw ConfigError("unknown depth unit '" + std::string(text) + "' (expected m or cm)");
}

std::string read_file(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot read " + path.string() + ": " + ec.message());
  if (size > kMaxFileBytes) throw IoError("file too large: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes(static_cast<std::size_t>(size), '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw IoError("short read from " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// PFM

PfmImage decode_pfm(std::string_view bytes) {
  HeaderReader hdr(bytes, false);
  const std::string_view magic = hdr.token();
  PfmImage img;
  if (magic == "Pf") img.channels = 1;
  else if (magic == "PF") img.channels = 3;
  else throw FormatError("not a PFM file (bad magic)");
  img.width = hdr.dimension("width");
  img.height = hdr.dimension("height");
  const std::string scale_text(hdr.token());
  char* end = nullptr;
  img.scale = std::strtod(scale_text.c_str(), &end);
  if (end != scale_text.c_str() + scale_text.size() || !std::isfinite(img.scale) || img.scale == 0.0) {
    throw FormatError("malformed header: bad PFM scale");
  }
  hdr.end_of_header();

  const std::size_t row = img.width * img.channels;
  const std::size_t remaining = bytes.size() - hdr.position();
  if (img.height > remaining / 4 / row) throw FormatError("truncated PFM raster");
  const std::size_t count = row * img.height;
  if (remaining != count * 4) throw FormatError("PFM raster size does not match the header");

  const bool little = img.scale < 0.0;
  const unsigned char* raster = ubytes(bytes) + hdr.position();
  img.data.resize(count);
  for (std::size_t r = 0; r < img.height; ++r) {
    const unsigned char* src_row = raster + (img.height - 1 - r) * row * 4;
    for (std::size_t i = 0; i < row; ++i) {
      const unsigned char* p = src_row + 4 * i;
      const std::uint32_t bits = little ? load_u32le(p)
                                        : (std::uint32_t{p[0]} << 24 | std::uint32_t{p[1]} << 16 |
                                           std::uint32_t{p[2]} << 8 | std::uint32_t{p[3]});
      img.data[r * row + i] = std::bit_cast<float>(bits);
    }
  }
  return img;
}

std::string encode_pfm(const PfmImage& img) {
  const std::size_t row = img.width * img.channels;
  if (img.data.size() != row * img.height) throw ShapeError("encode_pfm: raster size mismatch");
  std::string out = img.channels == 3 ? "PF\n" : "Pf\n";
  out += std::to_string(img.width) + " " + std::to_string(img.height) + "\n";
  out += "-" + format_double(std::fabs(img.scale)) + "\n";
  out.reserve(out.size() + img.data.size() * 4);
  for (std::size_t r = img.height; r-- > 0;) {
    for (std::size_t i = 0; i < row; ++i) store_u32le(out, std::bit_cast<std::uint32_t>(img.data[r * row + i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// PGM

PgmImage decode_pgm(std::string_view bytes) {
  HeaderReader hdr(bytes, true);
  if (hdr.token() != "P5") throw FormatError("not a binary PGM file (bad magic)");
  PgmImage img;
  img.width = hdr.dimension("width");
  img.height = hdr.dimension("height");
  const std::size_t maxval = hdr.dimension("maxval");
  if (maxval != 255 && maxval != 65535) throw FormatError("PGM maxval must be 255 or 65535");
  img.maxval = static_cast<std::uint32_t>(maxval);
  hdr.end_of_header();
  const std::size_t bps = img.maxval == 255 ? 1 : 2;
  const std::size_t remaining = bytes.size() - hdr.position();
  if (img.height > remaining / bps / img.width) throw FormatError("truncated PGM raster");
  const std::size_t count = img.width * img.height;
  if (remaining != count * bps) throw FormatError("PGM raster size does not match the header");
  const unsigned char* p = ubytes(bytes) + hdr.position();
  img.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    img.samples[i] = bps == 1 ? p[i] : static_cast<std::uint16_t>(p[2 * i] << 8 | p[2 * i + 1]);
    if (img.samples[i] > img.maxval) throw FormatError("PGM sample exceeds maxval");
  }
  return img;
}

std::string encode_pgm(const PgmImage& img) {
  if (img.maxval != 255 && img.maxval != 65535) throw FormatError("PGM maxval must be 255 or 65535");
  if (img.samples.size() != img.width * img.height) throw ShapeError("encode_pgm: sample count mismatch");
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n" +
                    std::to_string(img.maxval) + "\n";
  for (std::uint16_t s : img.samples) {
    if (img.maxval == 255) {
      out.push_back(static_cast<char>(s & 0xff));
    } else {
      out.push_back(static_cast<char>(s >> 8));
      out.push_back(static_cast<char>(s & 0xff));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Depth

DepthGrid read_depth(const std::filesystem::path& path, DepthUnit unit) {
  const std::string bytes = read_file(path);
  const double to_cm = unit == DepthUnit::Meters ? 100.0 : 1.0;
  std::vector<double> values;
  std::size_t h = 0;
  std::size_t w = 0;
  if (bytes.rfind("P5", 0) == 0) {
    const PgmImage pgm = decode_pgm(bytes);
    h = pgm.height;
    w = pgm.width;
    double lo = 0.0;
    double hi = static_cast<double>(pgm.maxval);
    if (std::filesystem::exists(range_sidecar(path))) {
      std::istringstream in(read_file(range_sidecar(path)));
      if (!(in >> lo >> hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw FormatError("malformed range sidecar for " + path.string());
      }
    }
    values.resize(pgm.samples.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      values[i] = to_cm * (lo + (hi - lo) * pgm.samples[i] / static_cast<double>(pgm.maxval));
  } else {
    const PfmImage pfm = decode_pfm(bytes);
    if (pfm.channels != 1) throw FormatError("depth PFM must be single-channel (Pf): " + path.string());
    h = pfm.height;
    w = pfm.width;
    const double scale = std::fabs(pfm.scale) * to_cm;
    values.resize(pfm.data.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = static_cast<double>(pfm.data[i]) * scale;
      if (!std::isfinite(values[i])) throw FormatError("non-finite depth sample in " + path.string());
    }
  }
  return DepthGrid(h, w, std::move(values));
}

void write_depth(const DepthGrid& grid, const std::filesystem::path& path, DepthUnit unit) {
  if (has_extension(path, ".pgm")) {
    write_depth_pgm(grid, path);
    return;
  }
  PfmImage img;
  img.width = grid.width();
  img.height = grid.height();
  img.channels = 1;
  img.scale = -1.0;
  img.data.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = unit == DepthUnit::Meters ? grid[i] / 100.0 : grid[i];
    img.data[i] = static_cast<float>(v);
  }
  write_file(path, encode_pfm(img));
}

void write_depth_pgm(const DepthGrid& grid, const std::filesystem::path& path, std::uint32_t maxval) {
  const auto [lo_it, hi_it] = std::minmax_element(grid.values().begin(), grid.values().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  PgmImage img;
  img.width = grid.width();
  img.height = grid.height();
  img.maxval = maxval;
  img.samples.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = hi > lo ? (grid[i] - lo) / (hi - lo) : 0.0;
    img.samples[i] = static_cast<std::uint16_t>(std::lround(t * maxval));
  }
  write_file(path, encode_pgm(img));
  write_file(range_sidecar(path), format_double(lo) + " " + format_double(hi) + "\n");
}

// ---------------------------------------------------------------------------
// PPM

RgbImage decode_ppm(std::string_view bytes) {
  HeaderReader hdr(bytes, true);
  if (hdr.token() != "P6") throw FormatError("not a binary PPM file (bad magic)");
  const std::size_t w = hdr.dimension("width");
  const std::size_t h = hdr.dimension("height");
  if (hdr.dimension("maxval") != 255) throw FormatError("PPM maxval must be 255");
  hdr.end_of_header();
  const std::size_t remaining = bytes.size() - hdr.position();
  if (h > remaining / 3 / w) throw FormatError("truncated PPM raster");
  if (remaining != 3 * w * h) throw FormatError("PPM raster size does not match the header");
  const unsigned char* p = ubytes(bytes) + hdr.position();
  std::vector<double> rgb(3 * w * h);
  for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = p[i] / 255.0;
  return RgbImage(h, w, std::move(rgb));
}

RgbImage read_rgb(const std::filesystem::path& path) { return decode_ppm(read_file(path)); }

void write_rgb(const RgbImage& img, const std::filesystem::path& path) {
  std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  for (double v : img.data()) out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  write_file(path, out);
}

// ---------------------------------------------------------------------------
// Parameters

std::string encode_params(const CapoParams& params) {
  params.validate();
  std::string out = "C2PD";
  store_u32le(out, kParamsFormatVersion);
  store_u32le(out, static_cast<std::uint32_t>(params.n));
  store_u32le(out, static_cast<std::uint32_t>(params.layers.size()));
  for (const DenseLayer& l : params.layers) {
    store_u32le(out, static_cast<std::uint32_t>(l.out));
    store_u32le(out, static_cast<std::uint32_t>(l.in));
    for (double w : l.weights) store_u64le(out, std::bit_cast<std::uint64_t>(w));
    for (double b : l.bias) store_u64le(out, std::bit_cast<std::uint64_t>(b));
  }
  return out;
}

CapoParams decode_params(std::string_view bytes) {
  constexpr std::size_t kHeader = 16;
  if (bytes.size() < kHeader) throw FormatError("parameter file too short for its header");
  if (bytes.substr(0, 4) != "C2PD") throw FormatError("not a parameter file (bad magic)");
  const unsigned char* p = ubytes(bytes);
  const std::uint32_t version = load_u32le(p + 4);
  if (version != kParamsFormatVersion) {
    throw FormatError("unsupported parameter file version " + std::to_string(version));
  }
  CapoParams params;
  params.n = load_u32le(p + 8);
  const std::uint32_t layer_count = load_u32le(p + 12);
  if (params.n == 0 || params.n > 4096) throw FormatError("parameter file: bad window size");
  if (layer_count == 0 || layer_count > 64) throw FormatError("parameter file: bad layer count");

  std::size_t pos = kHeader;
  for (std::uint32_t k = 0; k < layer_count; ++k) {
    if (bytes.size() - pos < 8) throw FormatError("parameter file truncated in layer header");
    DenseLayer l;
    l.out = load_u32le(p + pos);
    l.in = load_u32le(p + pos + 4);
    pos += 8;
    if (l.out == 0 || l.in == 0 || l.out > 65536 || l.in > 65536) throw FormatError("parameter file: bad layer size");
    const std::size_t values = l.out * l.in + l.out;
    if ((bytes.size() - pos) / 8 < values) throw FormatError("parameter file truncated in layer data");
    l.weights.resize(l.out * l.in);
    l.bias.resize(l.out);
    for (double& w : l.weights) {
      w = std::bit_cast<double>(load_u64le(p + pos));
      pos += 8;
    }
    for (double& b : l.bias) {
      b = std::bit_cast<double>(load_u64le(p + pos));
      pos += 8;
    }
    params.layers.push_back(std::move(l));
  }
  if (pos != bytes.size()) throw FormatError("parameter file has trailing bytes");
  try {
    params.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("parameter file: ") + e.what());
  }
  return params;
}

CapoParams read_params(const std::filesystem::path& path) { return decode_params(read_file(path)); }

void write_params(const CapoParams& params, const std::filesystem::path& path) {
  write_file(path, encode_params(params));
}

void require_params_match(const CapoParams& params, const WindowSpec& spec) {
  if (params.n != spec.n()) {
    throw ConfigError("parameter file has n=" + std::to_string(params.n) + " but window " + to_string(spec.shape) +
                      " needs n=" + std::to_string(spec.n()));
  }
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void append_csv_row(const std::filesystem::path& path, std::string_view header, std::string_view row) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  if (fresh) out << header << '\n';
  out << row << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace c2pd
