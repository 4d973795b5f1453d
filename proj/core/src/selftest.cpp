#include "c2pd/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <utility>

#include "c2pd/imageio.hpp"
#include "c2pd/optim.hpp"
#include "c2pd/pcgd.hpp"
#include "c2pd/resample.hpp"

namespace c2pd {

namespace {

template <class Tag>
Grid<Tag> random_grid(std::size_t h, std::size_t w, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(h * w);
  for (double& x : v) x = dist(rng);
  return Grid<Tag>(h, w, std::move(v));
}

double max_abs_diff(const DepthGrid& a, const DepthGrid& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
  return worst;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

SelftestResult check_conservation(const SelftestOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const WindowShape shape = trial % 3 == 0 ? WindowShape::Row1x4
                              : trial % 3 == 1 ? WindowShape::Col4x1
                                               : WindowShape::Square3x3;
    const WindowSpec spec{shape, Padding::Circular};
    const auto in = random_grid<DepthTag>(6, 7, rng, 0.0, 10.0);
    const auto guide = random_grid<GuidanceTag>(6, 7, rng, 0.0, 1.0);
    const CapoParams params = make_capo_params(spec.n(), opt.seed + trial);
    const DepthGrid out = capo_apply(in, guide, params, spec, opt.conserve);
    double abs_in = 0.0;
    for (double v : in.values()) abs_in += std::fabs(v);
    const double err = std::fabs(stable_sum(out.values()) - stable_sum(in.values())) / std::max(1.0, abs_in);
    worst = std::max(worst, err);
  }
  return {"conservation", worst <= 1e-9, "max relative sum drift " + fmt(worst)};
}

SelftestResult check_identity(const SelftestOptions& opt) {
  std::mt19937_64 rng(opt.seed + 1);
  const auto depth = random_grid<DepthTag>(16, 16, rng, 20.0, 200.0);
  const auto guide = random_grid<GuidanceTag>(16, 16, rng, 0.0, 1.0);
  const CapoParams zero4 = zero_capo_params(4);
  const WindowSpec h{WindowShape::Row1x4, Padding::Replicate};
  const double capo_err = max_abs_diff(capo_apply(depth, guide, zero4, h), depth);
  const double pcgd_err = max_abs_diff(pcgd_apply(depth, guide, zero4, h, h.transposed()), depth);
  const double worst = std::max(capo_err, pcgd_err);
  return {"identity", worst <= 1e-12, "max abs error " + fmt(worst)};
}

SelftestResult check_round_trip(const SelftestOptions& opt) {
  std::mt19937_64 rng(opt.seed + 2);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = random_grid<DepthTag>(32, 32, rng, -100.0, 100.0);
    for (Axis axis : {Axis::Horizontal, Axis::Vertical}) worst = std::max(worst, max_abs_diff(integrate(differentiate(g, axis)), g));
  }
  return {"round-trip", worst <= 1e-12, "max abs error " + fmt(worst)};
}

SelftestResult check_locality(const SelftestOptions& opt) {
  std::mt19937_64 rng(opt.seed + 3);
  const WindowSpec spec{WindowShape::Row1x4, Padding::Replicate};
  const auto stream = random_grid<DepthTag>(1, 32, rng, 0.0, 5.0);
  const auto guide = random_grid<GuidanceTag>(1, 32, rng, 0.0, 1.0);
  const CapoParams params = make_capo_params(4, opt.seed + 3);
  const DepthGrid base = capo_apply(stream, guide, params, spec);
  std::size_t violations = 0;
  for (std::size_t p = 0; p < 32; ++p) {
    std::vector<double> v(stream.values().begin(), stream.values().end());
    v[p] += 0.5;
    const DepthGrid out = capo_apply(DepthGrid(1, 32, v), guide, params, spec);
    for (std::size_t i = 0; i < 32; ++i) {
      const std::size_t dist = i > p ? i - p : p - i;
      if (dist > 3 && out[i] != base[i]) ++violations;
    }
  }
  return {"locality", violations == 0, std::to_string(violations) + " cells changed beyond distance 3"};
}

SelftestResult check_transpose(const SelftestOptions& opt) {
  std::mt19937_64 rng(opt.seed + 4);
  const WindowSpec h{WindowShape::Row1x4, Padding::Replicate};
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto depth = random_grid<DepthTag>(12, 12, rng, 0.0, 1.0);
    const auto guide = random_grid<GuidanceTag>(12, 12, rng, 0.0, 1.0);
    const CapoParams params = make_capo_params(4, opt.seed + 40 + trial);
    const DepthGrid a = pcgd_apply(transpose(depth), transpose(guide), params, h, h.transposed());
    const DepthGrid b = transpose(pcgd_apply(depth, guide, params, h, h.transposed()));
    worst = std::max(worst, max_abs_diff(a, b));
  }
  return {"transpose-equivariance", worst <= 1e-9, "max abs deviation " + fmt(worst)};
}

SelftestResult check_gradients(const SelftestOptions& opt) {
  std::mt19937_64 rng(opt.seed + 5);
  const WindowSpec h{WindowShape::Row1x4, Padding::Replicate};
  const auto depth = random_grid<DepthTag>(6, 6, rng, 0.0, 1.0);
  const auto guide = random_grid<GuidanceTag>(6, 6, rng, 0.0, 1.0);
  const CapoParams params = make_capo_params(4, opt.seed + 5, CapoInit{{8, 8}});
  double worst = 0.0;
  for (GradTarget t : {GradTarget::Stream, GradTarget::Guide, GradTarget::Params}) {
    const auto x = t == GradTarget::Stream  ? std::vector<double>(depth.values().begin(), depth.values().end())
                   : t == GradTarget::Guide ? std::vector<double>(guide.values().begin(), guide.values().end())
                                            : params.flatten();
    worst = std::max(worst, grad_check(capo_fn(depth, guide, params, h, t), x));
    std::vector<std::uint8_t> mask;
    if (t == GradTarget::Stream) mask = sign_boundary_mask(depth);
    if (t == GradTarget::Guide) mask = sign_boundary_mask(retag<DepthTag>(guide));
    worst = std::max(worst, grad_check(pcgd_fn(depth, guide, params, h, h.transposed(), t), x, mask));
  }
  return {"gradient-check", worst <= 1e-4, "max relative error " + fmt(worst)};
}

SelftestResult check_kernel(const SelftestOptions& opt) {
  std::mt19937_64 rng(opt.seed + 6);
  std::uniform_real_distribution<double> phase(0.0, 1.0);
  const BicubicKernel k;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto w = k.weights(phase(rng));
    worst = std::max(worst, std::fabs(w[0] + w[1] + w[2] + w[3] - 1.0));
  }
  const auto half = k.weights(0.5);
  const double expected[4] = {-0.0625, 0.5625, 0.5625, -0.0625};
  for (int i = 0; i < 4; ++i) worst = std::max(worst, std::fabs(half[i] - expected[i]));
  return {"kernel-partition-of-unity", worst <= 1e-12, "max deviation " + fmt(worst)};
}

SelftestResult check_file_round_trip(const SelftestOptions& opt) {
  std::mt19937_64 rng(opt.seed + 7);
  const CapoParams params = make_capo_params(9, opt.seed + 7);
  const std::string bytes = encode_params(params);
  bool ok = decode_params(bytes) == params && encode_params(decode_params(bytes)) == bytes;

  PfmImage img;
  img.width = 5;
  img.height = 3;
  std::uniform_real_distribution<float> dist(-1e3f, 1e3f);
  img.data.resize(15);
  for (float& v : img.data) v = dist(rng);
  const PfmImage back = decode_pfm(encode_pfm(img));
  ok = ok && back.data == img.data && back.width == 5 && back.height == 3;
  return {"file-round-trip", ok, ok ? "bit-exact" : "mismatch"};
}

}  // namespace

std::vector<SelftestResult> run_selftest(const SelftestOptions& options) {
  using Check = std::function<SelftestResult(const SelftestOptions&)>;
  const std::vector<std::pair<const char*, Check>> checks = {
      {"conservation", check_conservation},
      {"identity", check_identity},
      {"round-trip", check_round_trip},
      {"locality", check_locality},
      {"transpose-equivariance", check_transpose},
      {"gradient-check", check_gradients},
      {"kernel-partition-of-unity", check_kernel},
      {"file-round-trip", check_file_round_trip},
  };
  std::vector<SelftestResult> results;
  for (const auto& [name, check] : checks) {
    try {
      results.push_back(check(options));
    } catch (const std::exception& e) {
      results.push_back({name, false, std::string("threw: ") + e.what()});
    }
  }
  return results;
}

}  // namespace c2pd
