#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "c2pd/capo.hpp"
#include "c2pd/grid.hpp"

namespace c2pd {

struct LossReport {
  std::size_t step = 0;
  double l1 = 0.0;    // cm
  double rmse = 0.0;  // cm
};

struct L1Result {
  double loss;
  DepthGrid gradient;  // sign(out - gt) / N, sign(0) = 0
};

/// Mean absolute error and its subgradient with respect to `out`.
L1Result l1_loss(const DepthGrid& out, const DepthGrid& gt);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
};

OptimState make_optim_state(std::size_t parameter_count, const AdamConfig& config = {});

/// One bias-corrected Adam update, in place.
void adam_step(std::span<double> params, std::span<const double> grads, OptimState& state);

// ---------------------------------------------------------------------------
// Finite-difference verification

/// A vector function with its vector-Jacobian product.
struct DifferentiableFn {
  std::function<std::vector<double>(std::span<const double>)> forward;
  std::function<std::vector<double>(std::span<const double> x, std::span<const double> upstream)> backward;
};

struct GradCheckOptions {
  double epsilon = 1e-6;
  std::uint64_t seed = 1;
};

/// Compares backward() against central differences of the scalar
/// sum(u * forward(x)) for a random upstream u. Returns the largest
/// per-entry relative error |a - n| / max(|a|, |n|, floor) over unmasked
/// entries, where floor is 1e-3 of the largest gradient magnitude seen.
/// `mask` may be empty (check everything); otherwise mask[i] == 0 skips i.
double grad_check(const DifferentiableFn& fn, std::span<const double> x, std::span<const std::uint8_t> mask = {},
                  const GradCheckOptions& options = {});

enum class GradTarget { Stream, Guide, Params };

DifferentiableFn capo_fn(const DepthGrid& stream, const GuidanceGrid& guide, const CapoParams& params,
                         const WindowSpec& spec, GradTarget target);
DifferentiableFn pcgd_fn(const DepthGrid& depth, const GuidanceGrid& guide, const CapoParams& params,
                         const WindowSpec& spec_h, const WindowSpec& spec_v, GradTarget target);

/// Cells whose value feeds a depth or guide forward difference within
/// `threshold` of zero (where |.| and the sign split are not smooth) are
/// masked out. Returns one flag per cell, 1 = check.
std::vector<std::uint8_t> sign_boundary_mask(const DepthGrid& values, double threshold = 1e-6);

}  // namespace c2pd
