#pragma once

#include <vector>

#include "c2pd/capo.hpp"
#include "c2pd/grid.hpp"

namespace c2pd {

enum class Axis { Horizontal, Vertical };

/// Forward differences of a grid along one axis, split by sign. The field has
/// the source's shape; the last entry along the axis is always 0. `anchor`
/// holds the first column (horizontal) or first row (vertical) of the source,
/// the integration constants.
struct GradientField {
  Axis axis = Axis::Horizontal;
  DepthGrid positive;
  DepthGrid negative;
  std::vector<double> anchor;
};

/// |forward difference| of the guidance along one axis.
struct GuidanceGradient {
  Axis axis = Axis::Horizontal;
  GuidanceGrid magnitude;
};

GradientField differentiate(const DepthGrid& grid, Axis axis);
GuidanceGradient guidance_gradient(const GuidanceGrid& guide, Axis axis);

/// Cumulative sum of `diffs` along `axis` starting from `anchor`. Only the
/// first extent-1 entries along the axis are used.
DepthGrid integrate(const DepthGrid& diffs, Axis axis, std::span<const double> anchor);
DepthGrid integrate(const GradientField& field);

/// Gradient-domain deformation: each axis' depth gradient is split by sign,
/// both magnitude streams are deformed by CAPO guided by the absolute guide
/// gradient (one parameter set for all four streams), recombined, integrated
/// from the original first row/column, and the two reconstructions averaged.
/// Along an axis of extent 1 the reconstruction is the input itself.
DepthGrid pcgd_apply(const DepthGrid& depth, const GuidanceGrid& guide, const CapoParams& params,
                     const WindowSpec& spec_h, const WindowSpec& spec_v);

struct PcgdGradients {
  DepthGrid d_depth;
  GuidanceGrid d_guide;
  std::vector<double> d_params;
};

/// Reverse-mode gradients of pcgd_apply. At a zero depth difference the
/// sign split routes the gradient to the positive stream; at a zero guide
/// difference |.| uses slope +1.
PcgdGradients pcgd_backward(const DepthGrid& depth, const GuidanceGrid& guide, const CapoParams& params,
                            const WindowSpec& spec_h, const WindowSpec& spec_v, const DepthGrid& upstream);

}  // namespace c2pd
