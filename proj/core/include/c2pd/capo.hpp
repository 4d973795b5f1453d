#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "c2pd/grid.hpp"

namespace c2pd {

/// Fully connected layer, weights row-major (out x in).
struct DenseLayer {
  std::size_t out = 0;
  std::size_t in = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

/// Parameters of the variation network: 2n window values in, n raw
/// variations out. tanh follows every layer except the last.
struct CapoParams {
  std::size_t n = 4;
  std::vector<DenseLayer> layers;

  /// Throws ConfigError on broken layer chaining or non-finite values.
  void validate() const;
  std::size_t parameter_count() const;
  /// Layer by layer: weights (row-major), then bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  bool operator==(const CapoParams&) const = default;
};

struct CapoInit {
  std::vector<std::size_t> hidden = {32, 32};
  // Start with a zero final layer so the initial network is the identity map.
  bool zero_output_layer = false;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
CapoParams make_capo_params(std::size_t n, std::uint64_t seed, const CapoInit& init = {});

/// Same architecture, every parameter zero: the variation network outputs 0.
CapoParams zero_capo_params(std::size_t n, const std::vector<std::size_t>& hidden = {32, 32});

/// Raw variations var_0..var_{n-1} of one window (stream values then guide
/// values, slot order). Index i refers to window slot i.
std::vector<double> interaction(std::span<const double> window_values, const CapoParams& params);

/// Volume-conserving normalization: subtract the window mean.
std::vector<double> conserve(std::span<const double> raw);

struct VariationVector {
  std::vector<double> raw;
  std::vector<double> normalized;
};

VariationVector fit_variations(std::span<const double> window_values, const CapoParams& params);

using ConserveFn = std::vector<double> (*)(std::span<const double>);

/// out(x) = stream(x) + (1/n) * sum of the normalized variations assigned to
/// x by every window that covers it, accumulated in ascending anchor order.
/// Under replicate padding, variations of slots that fall outside the grid
/// are dropped. `normalize` exists so fault-injection tests can substitute a
/// broken normalization; production callers use the default.
DepthGrid capo_apply(const DepthGrid& stream, const GuidanceGrid& guide, const CapoParams& params,
                     const WindowSpec& spec, ConserveFn normalize = &conserve);

struct CapoGradients {
  DepthGrid d_stream;
  GuidanceGrid d_guide;
  std::vector<double> d_params;  // CapoParams::flatten() order
};

/// Exact reverse-mode gradients of capo_apply for the given upstream gradient.
CapoGradients capo_backward(const DepthGrid& stream, const GuidanceGrid& guide, const CapoParams& params,
                            const WindowSpec& spec, const DepthGrid& upstream);

}  // namespace c2pd
