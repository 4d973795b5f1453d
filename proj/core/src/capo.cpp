#include "c2pd/capo.hpp"

#include <cmath>
#include <random>
#include <string>

#include "c2pd/parallel.hpp"

namespace c2pd {

void CapoParams::validate() const {
  if (n == 0) throw ConfigError("variation network: window size n must be positive");
  if (layers.empty()) throw ConfigError("variation network: no layers");
  if (layers.front().in != 2 * n) {
    throw ConfigError("variation network: first layer takes " + std::to_string(layers.front().in) +
                      " inputs, window needs " + std::to_string(2 * n));
  }
  if (layers.back().out != n) {
    throw ConfigError("variation network: last layer emits " + std::to_string(layers.back().out) +
                      " outputs, window needs " + std::to_string(n));
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const DenseLayer& l = layers[k];
    if (l.out == 0 || l.in == 0) throw ConfigError("variation network: empty layer");
    if (k > 0 && l.in != layers[k - 1].out) throw ConfigError("variation network: layer widths do not chain");
    if (l.weights.size() != l.out * l.in || l.bias.size() != l.out) {
      throw ConfigError("variation network: layer storage does not match its dimensions");
    }
    for (double v : l.weights)
      if (!std::isfinite(v)) throw ConfigError("variation network: non-finite weight");
    for (double v : l.bias)
      if (!std::isfinite(v)) throw ConfigError("variation network: non-finite bias");
  }
}

std::size_t CapoParams::parameter_count() const {
  std::size_t count = 0;
  for (const auto& l : layers) count += l.weights.size() + l.bias.size();
  return count;
}

std::vector<double> CapoParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void CapoParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ShapeError("CapoParams::assign: parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : layers) {
    for (double& w : l.weights) w = flat[k++];
    for (double& b : l.bias) b = flat[k++];
  }
}

namespace {

std::vector<DenseLayer> shaped_layers(std::size_t n, const std::vector<std::size_t>& hidden) {
  std::vector<DenseLayer> layers;
  std::size_t in = 2 * n;
  auto add = [&](std::size_t out) {
    layers.push_back(DenseLayer{out, in, std::vector<double>(out * in, 0.0), std::vector<double>(out, 0.0)});
    in = out;
  };
  for (std::size_t h : hidden) add(h);
  add(n);
  return layers;
}

}  // namespace

CapoParams make_capo_params(std::size_t n, std::uint64_t seed, const CapoInit& init) {
  CapoParams p{n, shaped_layers(n, init.hidden)};
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    DenseLayer& l = p.layers[k];
    if (init.zero_output_layer && k + 1 == p.layers.size()) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : l.weights) w = dist(rng);
  }
  return p;
}

CapoParams zero_capo_params(std::size_t n, const std::vector<std::size_t>& hidden) {
  return CapoParams{n, shaped_layers(n, hidden)};
}

namespace {

// Activations of one forward pass: acts[0] is the input, acts[k+1] the output
// of layer k (after tanh for hidden layers).
struct NetTrace {
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> deltas;

  explicit NetTrace(const CapoParams& p) {
    acts.resize(p.layers.size() + 1);
    deltas.resize(p.layers.size() + 1);
    acts[0].resize(p.layers.front().in);
    deltas[0].resize(p.layers.front().in);
    for (std::size_t k = 0; k < p.layers.size(); ++k) {
      acts[k + 1].resize(p.layers[k].out);
      deltas[k + 1].resize(p.layers[k].out);
    }
  }
};

void net_forward(const CapoParams& p, NetTrace& t) {
  const std::size_t last = p.layers.size() - 1;
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const DenseLayer& l = p.layers[k];
    const std::vector<double>& x = t.acts[k];
    std::vector<double>& y = t.acts[k + 1];
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* w = &l.weights[o * l.in];
      double acc = l.bias[o];
      for (std::size_t i = 0; i < l.in; ++i) acc += w[i] * x[i];
      y[o] = k == last ? acc : std::tanh(acc);
    }
  }
}

// Expects t.deltas.back() = dL/d(output). Leaves dL/d(input) in t.deltas[0]
// and accumulates parameter gradients into `grad` (flatten() order).
void net_backward(const CapoParams& p, NetTrace& t, double* grad) {
  const std::size_t last = p.layers.size() - 1;
  std::vector<std::size_t> offsets(p.layers.size());
  std::size_t off = 0;
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    offsets[k] = off;
    off += p.layers[k].weights.size() + p.layers[k].bias.size();
  }
  for (std::size_t k = p.layers.size(); k-- > 0;) {
    const DenseLayer& l = p.layers[k];
    std::vector<double>& dy = t.deltas[k + 1];
    if (k != last) {
      const std::vector<double>& y = t.acts[k + 1];
      for (std::size_t o = 0; o < l.out; ++o) dy[o] *= 1.0 - y[o] * y[o];
    }
    const std::vector<double>& x = t.acts[k];
    std::vector<double>& dx = t.deltas[k];
    std::fill(dx.begin(), dx.end(), 0.0);
    double* gw = grad + offsets[k];
    double* gb = gw + l.weights.size();
    for (std::size_t o = 0; o < l.out; ++o) {
      const double d = dy[o];
      const double* w = &l.weights[o * l.in];
      double* gwo = gw + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) {
        gwo[i] += d * x[i];
        dx[i] += w[i] * d;
      }
      gb[o] += d;
    }
  }
}

void check_params_for(const CapoParams& params, const WindowSpec& spec) {
  params.validate();
  if (params.n != spec.n()) {
    throw ConfigError("variation network expects n=" + std::to_string(params.n) + " but window " +
                      to_string(spec.shape) + " has n=" + std::to_string(spec.n()));
  }
}

constexpr std::size_t kAnchorChunk = 256;

}  // namespace

std::vector<double> interaction(std::span<const double> window_values, const CapoParams& params) {
  params.validate();
  if (window_values.size() != 2 * params.n) {
    throw ShapeError("interaction: expected " + std::to_string(2 * params.n) + " window values, got " +
                     std::to_string(window_values.size()));
  }
  NetTrace t(params);
  std::copy(window_values.begin(), window_values.end(), t.acts[0].begin());
  net_forward(params, t);
  return t.acts.back();
}

std::vector<double> conserve(std::span<const double> raw) {
  const double mean = stable_sum(raw) / static_cast<double>(raw.size());
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] - mean;
  return out;
}

VariationVector fit_variations(std::span<const double> window_values, const CapoParams& params) {
  VariationVector v;
  v.raw = interaction(window_values, params);
  v.normalized = conserve(v.raw);
  return v;
}

DepthGrid capo_apply(const DepthGrid& stream, const GuidanceGrid& guide, const CapoParams& params,
                     const WindowSpec& spec, ConserveFn normalize) {
  require_same_shape(stream, guide, "capo_apply");
  check_params_for(params, spec);
  const std::size_t h = stream.height();
  const std::size_t w = stream.width();
  const std::size_t n = spec.n();
  const std::size_t anchors = h * w;

  std::vector<double> variations(anchors * n);
  for_each_chunk(anchors, kAnchorChunk, [&](std::size_t, std::size_t begin, std::size_t end) {
    NetTrace t(params);
    for (std::size_t a = begin; a < end; ++a) {
      for (std::size_t s = 0; s < n; ++s) {
        const std::size_t src = window_source(spec, h, w, a, s);
        t.acts[0][s] = stream[src];
        t.acts[0][n + s] = guide[src];
      }
      net_forward(params, t);
      const std::vector<double> norm = normalize(t.acts.back());
      std::copy(norm.begin(), norm.end(), variations.begin() + static_cast<std::ptrdiff_t>(a * n));
    }
  });

  std::vector<double> acc(anchors, 0.0);
  for (std::size_t a = 0; a < anchors; ++a) {
    for (std::size_t s = 0; s < n; ++s) {
      if (auto target = window_target(spec, h, w, a, s)) acc[*target] += variations[a * n + s];
    }
  }
  std::vector<double> out(anchors);
  for (std::size_t i = 0; i < anchors; ++i) out[i] = stream[i] + acc[i] / static_cast<double>(n);
  try {
    return DepthGrid(h, w, std::move(out));
  } catch (const NumericError&) {
    throw NumericError("capo_apply: non-finite output");
  }
}

CapoGradients capo_backward(const DepthGrid& stream, const GuidanceGrid& guide, const CapoParams& params,
                            const WindowSpec& spec, const DepthGrid& upstream) {
  require_same_shape(stream, guide, "capo_backward");
  require_same_shape(stream, upstream, "capo_backward (upstream)");
  check_params_for(params, spec);
  const std::size_t h = stream.height();
  const std::size_t w = stream.width();
  const std::size_t n = spec.n();
  const std::size_t anchors = h * w;
  const std::size_t pcount = params.parameter_count();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> input_grads(anchors * 2 * n);
  std::vector<double> chunk_grads(chunk_count(anchors, kAnchorChunk) * pcount, 0.0);
  for_each_chunk(anchors, kAnchorChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    NetTrace t(params);
    double* grad = chunk_grads.data() + chunk * pcount;
    std::vector<double> g_norm(n);
    for (std::size_t a = begin; a < end; ++a) {
      for (std::size_t s = 0; s < n; ++s) {
        const std::size_t src = window_source(spec, h, w, a, s);
        t.acts[0][s] = stream[src];
        t.acts[0][n + s] = guide[src];
        const auto target = window_target(spec, h, w, a, s);
        g_norm[s] = target ? upstream[*target] * inv_n : 0.0;
      }
      // mean subtraction is its own adjoint
      const double mean = stable_sum(g_norm) / static_cast<double>(n);
      for (std::size_t s = 0; s < n; ++s) t.deltas.back()[s] = g_norm[s] - mean;
      net_forward(params, t);
      net_backward(params, t, grad);
      std::copy(t.deltas[0].begin(), t.deltas[0].end(),
                input_grads.begin() + static_cast<std::ptrdiff_t>(a * 2 * n));
    }
  });

  std::vector<double> d_stream(upstream.values().begin(), upstream.values().end());
  std::vector<double> d_guide(anchors, 0.0);
  for (std::size_t a = 0; a < anchors; ++a) {
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t src = window_source(spec, h, w, a, s);
      d_stream[src] += input_grads[a * 2 * n + s];
      d_guide[src] += input_grads[a * 2 * n + n + s];
    }
  }
  std::vector<double> d_params(pcount, 0.0);
  for (std::size_t c = 0; c < chunk_grads.size() / pcount; ++c)
    for (std::size_t k = 0; k < pcount; ++k) d_params[k] += chunk_grads[c * pcount + k];

  return CapoGradients{DepthGrid(h, w, std::move(d_stream)), GuidanceGrid(h, w, std::move(d_guide)),
                       std::move(d_params)};
}

}  // namespace c2pd
