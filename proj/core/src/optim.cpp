#include "c2pd/optim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

#include "c2pd/pcgd.hpp"

namespace c2pd {

L1Result l1_loss(const DepthGrid& out, const DepthGrid& gt) {
  require_same_shape(out, gt, "l1_loss");
  const double inv_n = 1.0 / static_cast<double>(out.size());
  std::vector<double> grad(out.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out[i] - gt[i];
    acc += std::fabs(d);
    grad[i] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
  }
  return L1Result{acc * inv_n, DepthGrid(out.height(), out.width(), std::move(grad))};
}

OptimState make_optim_state(std::size_t parameter_count, const AdamConfig& config) {
  return OptimState{config, std::vector<double>(parameter_count, 0.0), std::vector<double>(parameter_count, 0.0), 0};
}

void adam_step(std::span<double> params, std::span<const double> grads, OptimState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() || state.m.size() != state.v.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

double grad_check(const DifferentiableFn& fn, std::span<const double> x, std::span<const std::uint8_t> mask,
                  const GradCheckOptions& options) {
  if (!mask.empty() && mask.size() != x.size()) throw ShapeError("grad_check: mask length differs from input");
  const std::vector<double> y0 = fn.forward(x);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> upstream(y0.size());
  for (double& u : upstream) u = dist(rng);

  auto objective = [&](std::span<const double> at) {
    const std::vector<double> y = fn.forward(at);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += upstream[i] * y[i];
    return acc;
  };

  const std::vector<double> analytic = fn.backward(x, upstream);
  std::vector<double> numeric(x.size(), 0.0);
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    probe[i] = x[i] + options.epsilon;
    const double plus = objective(probe);
    probe[i] = x[i] - options.epsilon;
    const double minus = objective(probe);
    probe[i] = x[i];
    numeric[i] = (plus - minus) / (2.0 * options.epsilon);
  }

  double scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    scale = std::max({scale, std::fabs(analytic[i]), std::fabs(numeric[i])});
  }
  const double floor = std::max(1e-3 * scale, 1e-12);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), floor});
    worst = std::max(worst, std::fabs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

namespace {

std::vector<double> copy_values(const auto& grid) { return {grid.values().begin(), grid.values().end()}; }

template <class Tag>
Grid<Tag> grid_like(const DepthGrid& shape, std::span<const double> v) {
  return Grid<Tag>(shape.height(), shape.width(), std::vector<double>(v.begin(), v.end()));
}

// Builds forward/backward closures that substitute x for the chosen operand.
template <class Forward, class Backward>
DifferentiableFn make_fn(const DepthGrid& stream, const GuidanceGrid& guide, const CapoParams& params,
                         GradTarget target, Forward forward, Backward backward) {
  auto unpack = [=](std::span<const double> x) {
    DepthGrid s = stream;
    GuidanceGrid g = guide;
    CapoParams p = params;
    switch (target) {
      case GradTarget::Stream:
        s = grid_like<DepthTag>(stream, x);
        break;
      case GradTarget::Guide:
        g = grid_like<GuidanceTag>(stream, x);
        break;
      case GradTarget::Params:
        p.assign(x);
        break;
    }
    return std::tuple{s, g, p};
  };
  DifferentiableFn fn;
  fn.forward = [=](std::span<const double> x) {
    auto [s, g, p] = unpack(x);
    return copy_values(forward(s, g, p));
  };
  fn.backward = [=](std::span<const double> x, std::span<const double> up) {
    auto [s, g, p] = unpack(x);
    const auto grads = backward(s, g, p, grid_like<DepthTag>(stream, up));
    switch (target) {
      case GradTarget::Stream:
        return copy_values(std::get<0>(grads));
      case GradTarget::Guide:
        return copy_values(std::get<1>(grads));
      case GradTarget::Params:
        break;
    }
    return std::get<2>(grads);
  };
  return fn;
}

}  // namespace

DifferentiableFn capo_fn(const DepthGrid& stream, const GuidanceGrid& guide, const CapoParams& params,
                         const WindowSpec& spec, GradTarget target) {
  return make_fn(
      stream, guide, params, target,
      [spec](const DepthGrid& s, const GuidanceGrid& g, const CapoParams& p) { return capo_apply(s, g, p, spec); },
      [spec](const DepthGrid& s, const GuidanceGrid& g, const CapoParams& p, const DepthGrid& up) {
        CapoGradients r = capo_backward(s, g, p, spec, up);
        return std::tuple{std::move(r.d_stream), std::move(r.d_guide), std::move(r.d_params)};
      });
}

DifferentiableFn pcgd_fn(const DepthGrid& depth, const GuidanceGrid& guide, const CapoParams& params,
                         const WindowSpec& spec_h, const WindowSpec& spec_v, GradTarget target) {
  return make_fn(
      depth, guide, params, target,
      [spec_h, spec_v](const DepthGrid& d, const GuidanceGrid& g, const CapoParams& p) {
        return pcgd_apply(d, g, p, spec_h, spec_v);
      },
      [spec_h, spec_v](const DepthGrid& d, const GuidanceGrid& g, const CapoParams& p, const DepthGrid& up) {
        PcgdGradients r = pcgd_backward(d, g, p, spec_h, spec_v, up);
        return std::tuple{std::move(r.d_depth), std::move(r.d_guide), std::move(r.d_params)};
      });
}

std::vector<std::uint8_t> sign_boundary_mask(const DepthGrid& values, double threshold) {
  const std::size_t h = values.height();
  const std::size_t w = values.width();
  std::vector<std::uint8_t> mask(values.size(), 1);
  auto flag_pair = [&](std::size_t a, std::size_t b) {
    if (std::fabs(values[b] - values[a]) <= threshold) mask[a] = mask[b] = 0;
  };
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c + 1 < w; ++c) flag_pair(r * w + c, r * w + c + 1);
  for (std::size_t r = 0; r + 1 < h; ++r)
    for (std::size_t c = 0; c < w; ++c) flag_pair(r * w + c, (r + 1) * w + c);
  return mask;
}

}  // namespace c2pd
