#pragma once

#include <array>
#include <cstddef>

#include "c2pd/grid.hpp"

namespace c2pd {

/// Keys cubic convolution kernel. a = -0.5 is Catmull-Rom, which
/// interpolates samples and reproduces polynomials up to degree 2.
struct BicubicKernel {
  double a = -0.5;

  double operator()(double x) const;

  /// Tap weights for samples at offsets -1, 0, +1, +2 from floor(position),
  /// where `phase` = position - floor(position) in [0, 1).
  std::array<double, 4> weights(double phase) const;
};

/// Bicubic decimation by an integer factor: each coarse cell center is
/// interpolated from the fine grid with the 4-tap kernel (replicate edges).
DepthGrid bicubic_down(const DepthGrid& gt, long factor, const BicubicKernel& kernel = {});

/// Bicubic enlargement by an integer factor, center-aligned, replicate edges.
DepthGrid bicubic_up(const DepthGrid& lr, long factor, const BicubicKernel& kernel = {});

/// Root mean square difference, same units as the grids (cm).
double rmse_cm(const DepthGrid& out, const DepthGrid& gt);

/// Mean absolute difference (cm).
double mad_cm(const DepthGrid& out, const DepthGrid& gt);

}  // namespace c2pd
