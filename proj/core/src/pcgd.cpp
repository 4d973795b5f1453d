#include "c2pd/pcgd.hpp"

#include <cmath>
#include <string>

namespace c2pd {

namespace {

// Addressing of a grid as a set of lines along an axis.
struct LineView {
  std::size_t lines;
  std::size_t extent;
  std::size_t width;
  Axis axis;

  LineView(std::size_t h, std::size_t w, Axis a)
      : lines(a == Axis::Horizontal ? h : w), extent(a == Axis::Horizontal ? w : h), width(w), axis(a) {}

  std::size_t at(std::size_t line, std::size_t i) const {
    return axis == Axis::Horizontal ? line * width + i : i * width + line;
  }
};

std::vector<double> forward_difference(std::span<const double> v, const LineView& view) {
  std::vector<double> d(v.size(), 0.0);
  for (std::size_t l = 0; l < view.lines; ++l)
    for (std::size_t i = 0; i + 1 < view.extent; ++i) d[view.at(l, i)] = v[view.at(l, i + 1)] - v[view.at(l, i)];
  return d;
}

void require_extent(std::size_t h, std::size_t w, Axis axis, const char* what) {
  const std::size_t extent = axis == Axis::Horizontal ? w : h;
  if (extent < 2) {
    throw SizeError(std::string(what) + ": need at least 2 samples along the " +
                    (axis == Axis::Horizontal ? "horizontal" : "vertical") + " axis");
  }
}

std::vector<double> to_vector(const DepthGrid& g) { return {g.values().begin(), g.values().end()}; }

// Deformed gradient of one axis plus what the backward pass needs.
struct AxisPass {
  GradientField field;
  GuidanceGradient guide;
  DepthGrid negative_magnitude;
  DepthGrid processed;
};

DepthGrid negated(const DepthGrid& g) {
  std::vector<double> v = to_vector(g);
  for (double& x : v) x = -x;
  return DepthGrid(g.height(), g.width(), std::move(v));
}

AxisPass run_axis(const DepthGrid& depth, const GuidanceGrid& guide, const CapoParams& params,
                  const WindowSpec& spec, Axis axis) {
  GradientField field = differentiate(depth, axis);
  GuidanceGradient gg = guidance_gradient(guide, axis);
  DepthGrid neg_mag = negated(field.negative);
  const DepthGrid pos = capo_apply(field.positive, gg.magnitude, params, spec);
  const DepthGrid neg = capo_apply(neg_mag, gg.magnitude, params, spec);
  std::vector<double> processed(pos.size());
  for (std::size_t i = 0; i < processed.size(); ++i) processed[i] = pos[i] - neg[i];
  DepthGrid proc(depth.height(), depth.width(), std::move(processed));
  return AxisPass{std::move(field), std::move(gg), std::move(neg_mag), std::move(proc)};
}

}  // namespace

GradientField differentiate(const DepthGrid& grid, Axis axis) {
  require_extent(grid.height(), grid.width(), axis, "differentiate");
  const LineView view(grid.height(), grid.width(), axis);
  const std::vector<double> d = forward_difference(grid.values(), view);
  std::vector<double> pos(d.size());
  std::vector<double> neg(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    pos[i] = d[i] > 0.0 ? d[i] : 0.0;
    neg[i] = d[i] < 0.0 ? d[i] : 0.0;
  }
  std::vector<double> anchor(view.lines);
  for (std::size_t l = 0; l < view.lines; ++l) anchor[l] = grid[view.at(l, 0)];
  return GradientField{axis, DepthGrid(grid.height(), grid.width(), std::move(pos)),
                       DepthGrid(grid.height(), grid.width(), std::move(neg)), std::move(anchor)};
}

GuidanceGradient guidance_gradient(const GuidanceGrid& guide, Axis axis) {
  require_extent(guide.height(), guide.width(), axis, "guidance_gradient");
  const LineView view(guide.height(), guide.width(), axis);
  std::vector<double> d = forward_difference(guide.values(), view);
  for (double& x : d) x = std::fabs(x);
  return GuidanceGradient{axis, GuidanceGrid(guide.height(), guide.width(), std::move(d))};
}

DepthGrid integrate(const DepthGrid& diffs, Axis axis, std::span<const double> anchor) {
  const LineView view(diffs.height(), diffs.width(), axis);
  if (anchor.size() != view.lines) throw ShapeError("integrate: anchor length does not match the grid");
  std::vector<double> out(diffs.size());
  for (std::size_t l = 0; l < view.lines; ++l) {
    double acc = anchor[l];
    out[view.at(l, 0)] = acc;
    for (std::size_t i = 0; i + 1 < view.extent; ++i) {
      acc += diffs[view.at(l, i)];
      out[view.at(l, i + 1)] = acc;
    }
  }
  return DepthGrid(diffs.height(), diffs.width(), std::move(out));
}

DepthGrid integrate(const GradientField& field) {
  std::vector<double> d(field.positive.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = field.positive[i] + field.negative[i];
  return integrate(DepthGrid(field.positive.height(), field.positive.width(), std::move(d)), field.axis,
                   field.anchor);
}

DepthGrid pcgd_apply(const DepthGrid& depth, const GuidanceGrid& guide, const CapoParams& params,
                     const WindowSpec& spec_h, const WindowSpec& spec_v) {
  require_same_shape(depth, guide, "pcgd_apply");
  // A single-sample line has no differences; its reconstruction is the anchor itself.
  auto reconstruct = [&](const WindowSpec& spec, Axis axis) {
    if (LineView(depth.height(), depth.width(), axis).extent < 2) return depth;
    const AxisPass pass = run_axis(depth, guide, params, spec, axis);
    return integrate(pass.processed, axis, pass.field.anchor);
  };
  const DepthGrid rec_h = reconstruct(spec_h, Axis::Horizontal);
  const DepthGrid rec_v = reconstruct(spec_v, Axis::Vertical);
  std::vector<double> out(depth.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (rec_h[i] + rec_v[i]);
  try {
    return DepthGrid(depth.height(), depth.width(), std::move(out));
  } catch (const NumericError&) {
    throw NumericError("pcgd_apply: non-finite output");
  }
}

PcgdGradients pcgd_backward(const DepthGrid& depth, const GuidanceGrid& guide, const CapoParams& params,
                            const WindowSpec& spec_h, const WindowSpec& spec_v, const DepthGrid& upstream) {
  require_same_shape(depth, guide, "pcgd_backward");
  require_same_shape(depth, upstream, "pcgd_backward (upstream)");
  const std::size_t hgt = depth.height();
  const std::size_t wid = depth.width();
  std::vector<double> d_depth(depth.size(), 0.0);
  std::vector<double> d_guide(depth.size(), 0.0);
  std::vector<double> d_params(params.parameter_count(), 0.0);

  const std::vector<double> g_avg = [&] {
    std::vector<double> g = to_vector(upstream);
    for (double& x : g) x *= 0.5;
    return g;
  }();

  for (Axis axis : {Axis::Horizontal, Axis::Vertical}) {
    const WindowSpec& spec = axis == Axis::Horizontal ? spec_h : spec_v;
    const LineView view(hgt, wid, axis);
    if (view.extent < 2) {
      for (std::size_t i = 0; i < g_avg.size(); ++i) d_depth[i] += g_avg[i];
      continue;
    }
    const AxisPass pass = run_axis(depth, guide, params, spec, axis);

    // integrate: suffix sums give the diff gradient, the full line sum the anchor gradient
    std::vector<double> g_proc(depth.size(), 0.0);
    for (std::size_t l = 0; l < view.lines; ++l) {
      double suffix = 0.0;
      for (std::size_t i = view.extent; i-- > 1;) {
        suffix += g_avg[view.at(l, i)];
        g_proc[view.at(l, i - 1)] = suffix;
      }
      d_depth[view.at(l, 0)] += suffix + g_avg[view.at(l, 0)];
    }
    const DepthGrid g_proc_grid(hgt, wid, g_proc);
    const DepthGrid g_neg_out = negated(g_proc_grid);

    const CapoGradients pos = capo_backward(pass.field.positive, pass.guide.magnitude, params, spec, g_proc_grid);
    const CapoGradients neg = capo_backward(pass.negative_magnitude, pass.guide.magnitude, params, spec, g_neg_out);

    for (std::size_t k = 0; k < d_params.size(); ++k) d_params[k] += pos.d_params[k];
    for (std::size_t k = 0; k < d_params.size(); ++k) d_params[k] += neg.d_params[k];

    // sign split and forward difference of depth
    for (std::size_t l = 0; l < view.lines; ++l) {
      for (std::size_t i = 0; i + 1 < view.extent; ++i) {
        const std::size_t idx = view.at(l, i);
        const double diff = pass.field.positive[idx] + pass.field.negative[idx];
        const double g_diff = diff >= 0.0 ? pos.d_stream[idx] : -neg.d_stream[idx];
        d_depth[view.at(l, i + 1)] += g_diff;
        d_depth[idx] -= g_diff;
      }
    }
    // absolute forward difference of the guide
    for (std::size_t l = 0; l < view.lines; ++l) {
      for (std::size_t i = 0; i + 1 < view.extent; ++i) {
        const std::size_t idx = view.at(l, i);
        const std::size_t nxt = view.at(l, i + 1);
        const double g_mag = pos.d_guide[idx] + neg.d_guide[idx];
        const double g_diff = guide[nxt] - guide[idx] >= 0.0 ? g_mag : -g_mag;
        d_guide[nxt] += g_diff;
        d_guide[idx] -= g_diff;
      }
    }
  }
  return PcgdGradients{DepthGrid(hgt, wid, std::move(d_depth)), GuidanceGrid(hgt, wid, std::move(d_guide)),
                       std::move(d_params)};
}

}  // namespace c2pd
