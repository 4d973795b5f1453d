#include "c2pd/resample.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace c2pd {

double BicubicKernel::operator()(double x) const {
  const double ax = std::fabs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

std::array<double, 4> BicubicKernel::weights(double phase) const {
  return {(*this)(1.0 + phase), (*this)(phase), (*this)(1.0 - phase), (*this)(2.0 - phase)};
}

namespace {

// Resample one axis from `in_extent` to `out_extent` samples. Output sample o
// sits at source coordinate (o + 0.5) * in/out - 0.5.
std::vector<double> resample_axis(std::span<const double> src, std::size_t lines, std::size_t in_extent,
                                  std::size_t out_extent, bool along_rows, std::size_t src_width,
                                  const BicubicKernel& kernel) {
  const double ratio = static_cast<double>(in_extent) / static_cast<double>(out_extent);
  const long last = static_cast<long>(in_extent) - 1;
  std::vector<double> out(lines * out_extent);
  const std::size_t out_width = along_rows ? out_extent : lines;
  for (std::size_t o = 0; o < out_extent; ++o) {
    const double pos = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    const double base = std::floor(pos);
    const auto w = kernel.weights(pos - base);
    long taps[4];
    for (int k = 0; k < 4; ++k) {
      long t = static_cast<long>(base) - 1 + k;
      taps[k] = t < 0 ? 0 : (t > last ? last : t);
    }
    for (std::size_t l = 0; l < lines; ++l) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) {
        const std::size_t idx = along_rows ? l * src_width + static_cast<std::size_t>(taps[k])
                                           : static_cast<std::size_t>(taps[k]) * src_width + l;
        acc += w[k] * src[idx];
      }
      out[along_rows ? l * out_width + o : o * out_width + l] = acc;
    }
  }
  return out;
}

DepthGrid resample(const DepthGrid& g, std::size_t out_h, std::size_t out_w, const BicubicKernel& kernel) {
  const std::vector<double> rows =
      resample_axis(g.values(), g.height(), g.width(), out_w, true, g.width(), kernel);
  std::vector<double> both = resample_axis(rows, out_w, g.height(), out_h, false, out_w, kernel);
  return DepthGrid(out_h, out_w, std::move(both));
}

}  // namespace

DepthGrid bicubic_down(const DepthGrid& gt, long factor, const BicubicKernel& kernel) {
  if (factor < 1) throw SizeError("bicubic_down: factor must be >= 1");
  const auto f = static_cast<std::size_t>(factor);
  if (gt.height() % f != 0 || gt.width() % f != 0) {
    throw SizeError("bicubic_down: " + std::to_string(gt.height()) + "x" + std::to_string(gt.width()) +
                    " is not divisible by factor " + std::to_string(factor));
  }
  return resample(gt, gt.height() / f, gt.width() / f, kernel);
}

DepthGrid bicubic_up(const DepthGrid& lr, long factor, const BicubicKernel& kernel) {
  if (factor < 1) throw SizeError("bicubic_up: factor must be >= 1");
  const auto f = static_cast<std::size_t>(factor);
  constexpr std::size_t kMaxCells = std::size_t{1} << 30;
  if (lr.height() > kMaxCells / f || lr.width() > kMaxCells / f ||
      (lr.height() * f) > kMaxCells / (lr.width() * f)) {
    throw SizeError("bicubic_up: output would exceed the size limit");
  }
  return resample(lr, lr.height() * f, lr.width() * f, kernel);
}

double rmse_cm(const DepthGrid& out, const DepthGrid& gt) {
  require_same_shape(out, gt, "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out[i] - gt[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(out.size()));
}

double mad_cm(const DepthGrid& out, const DepthGrid& gt) {
  require_same_shape(out, gt, "mad");
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) acc += std::fabs(out[i] - gt[i]);
  return acc / static_cast<double>(out.size());
}

}  // namespace c2pd
