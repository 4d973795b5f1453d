#include <gtest/gtest.h>

#include <random>

#include "c2pd/error.hpp"
#include "c2pd/optim.hpp"
#include "c2pd/pcgd.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace c2pd;
using testing_support::max_abs_diff;
using testing_support::random_grid;
using testing_support::to_matrix;

namespace {

const WindowSpec kRow{WindowShape::Row1x4, Padding::Replicate};

std::vector<double> values(const DepthGrid& g) { return {g.values().begin(), g.values().end()}; }

}  // namespace

TEST(Differentiate, IncreasingRow) {
  const GradientField f = differentiate(DepthGrid(1, 3, {1, 3, 6}), Axis::Horizontal);
  EXPECT_EQ(values(f.positive), (std::vector<double>{2, 3, 0}));
  EXPECT_EQ(values(f.negative), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(f.anchor, (std::vector<double>{1}));
}

TEST(Differentiate, SignSplit) {
  const GradientField f = differentiate(DepthGrid(1, 4, {5, 2, 2, 4}), Axis::Horizontal);
  EXPECT_EQ(values(f.positive), (std::vector<double>{0, 0, 2, 0}));
  EXPECT_EQ(values(f.negative), (std::vector<double>{-3, 0, 0, 0}));
}

TEST(Differentiate, ConstantGridHasZeroField) {
  const GradientField f = differentiate(make_grid(4, 5, 7.0), Axis::Vertical);
  for (double v : f.positive.values()) EXPECT_EQ(v, 0.0);
  for (double v : f.negative.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(f.anchor, std::vector<double>(5, 7.0));
}

TEST(Differentiate, ShortAxisIsASizeError) {
  EXPECT_THROW(differentiate(make_grid(3, 1, 0.0), Axis::Horizontal), SizeError);
  EXPECT_THROW(differentiate(make_grid(1, 3, 0.0), Axis::Vertical), SizeError);
}

TEST(Differentiate, SignStreamsAreCompleteAndSigned) {
  std::mt19937_64 rng(1);
  const auto g = random_grid(9, 7, rng, -10, 10);
  for (Axis axis : {Axis::Horizontal, Axis::Vertical}) {
    const GradientField f = differentiate(g, axis);
    for (std::size_t r = 0; r < 9; ++r) {
      for (std::size_t c = 0; c < 7; ++c) {
        EXPECT_GE(f.positive(r, c), 0.0);
        EXPECT_LE(f.negative(r, c), 0.0);
        const bool last = axis == Axis::Horizontal ? c == 6 : r == 8;
        const double expected = last ? 0.0 : axis == Axis::Horizontal ? g(r, c + 1) - g(r, c) : g(r + 1, c) - g(r, c);
        EXPECT_EQ(f.positive(r, c) + f.negative(r, c), expected);
      }
    }
  }
}

TEST(Integrate, RoundTrip) {
  const DepthGrid row(1, 3, {1, 3, 6});
  EXPECT_EQ(integrate(differentiate(row, Axis::Horizontal)), row);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const auto g = random_grid(64, 64, rng, -100, 100);
    for (Axis axis : {Axis::Horizontal, Axis::Vertical}) EXPECT_LE(max_abs_diff(integrate(differentiate(g, axis)), g), 1e-12);
  }
}

TEST(Integrate, ZeroFieldContinuesTheAnchor) {
  const std::vector<double> anchor = {7.0};
  EXPECT_EQ(integrate(make_grid(1, 5, 0.0), Axis::Horizontal, anchor), make_grid(1, 5, 7.0));
}

TEST(GuidanceGradient, IsNonNegative) {
  std::mt19937_64 rng(3);
  const auto g = random_grid<GuidanceTag>(6, 6, rng);
  for (Axis axis : {Axis::Horizontal, Axis::Vertical})
    for (double v : testing_support::vals(guidance_gradient(g, axis).magnitude)) EXPECT_GE(v, 0.0);
}

TEST(PcgdApply, ZeroNetworkIsTheIdentity) {
  std::mt19937_64 rng(4);
  const auto d = random_grid(16, 12, rng, 20, 200);
  const auto g = random_grid<GuidanceTag>(16, 12, rng);
  EXPECT_LE(max_abs_diff(pcgd_apply(d, g, zero_capo_params(4), kRow, kRow.transposed()), d), 1e-12);
  const WindowSpec sq{WindowShape::Square3x3, Padding::Replicate};
  EXPECT_LE(max_abs_diff(pcgd_apply(d, g, zero_capo_params(9), sq, sq), d), 1e-12);
}

TEST(PcgdApply, StepRowMatchesOracle) {
  const DepthGrid d(1, 8, {0, 0, 0, 0, 10, 10, 10, 10});
  const GuidanceGrid g(1, 8, {0, 0, 0, 1, 1, 1, 1, 1});
  CapoParams p;
  p.n = 4;
  p.layers.push_back(DenseLayer{4, 8,
                                {0.3, -0.1, 0.0, 0.2, 0.5, 0.0, 0.0, 0.0,  //
                                 0.0, 0.2, 0.1, 0.0, 0.0, -0.5, 0.0, 0.0,  //
                                 0.1, 0.0, -0.3, 0.0, 0.0, 0.0, 0.7, 0.0,  //
                                 0.0, 0.0, 0.0, 0.4, 0.0, 0.0, 0.0, -0.2},
                                {0.0, 0.1, -0.1, 0.0}});
  const auto ref = oracle::pcgd(to_matrix(d), to_matrix(g), p, oracle::Shape::Row, oracle::Shape::Col, false);
  EXPECT_LE(max_abs_diff(pcgd_apply(d, g, p, kRow, kRow.transposed()), ref), 1e-10);
}

TEST(PcgdApply, RandomGridsMatchOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 3; ++t) {
    const auto d = random_grid(8, 8, rng, 0, 10);
    const auto g = random_grid<GuidanceTag>(8, 8, rng);
    const CapoParams p4 = make_capo_params(4, rng());
    const auto ref = oracle::pcgd(to_matrix(d), to_matrix(g), p4, oracle::Shape::Row, oracle::Shape::Col, false);
    EXPECT_LE(max_abs_diff(pcgd_apply(d, g, p4, kRow, kRow.transposed()), ref), 1e-10);

    const CapoParams p9 = make_capo_params(9, rng());
    const WindowSpec sq{WindowShape::Square3x3, Padding::Circular};
    const auto ref9 = oracle::pcgd(to_matrix(d), to_matrix(g), p9, oracle::Shape::Square, oracle::Shape::Square, true);
    EXPECT_LE(max_abs_diff(pcgd_apply(d, g, p9, sq, sq), ref9), 1e-10);
  }
}

TEST(PcgdApply, TransposeEquivariance) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 5; ++t) {
    const auto d = random_grid(16, 16, rng);
    const auto g = random_grid<GuidanceTag>(16, 16, rng);
    const CapoParams p = make_capo_params(4, rng());
    const DepthGrid a = pcgd_apply(transpose(d), transpose(g), p, kRow, kRow.transposed());
    const DepthGrid b = transpose(pcgd_apply(d, g, p, kRow, kRow.transposed()));
    EXPECT_LE(max_abs_diff(a, b), 1e-9);
  }
}

TEST(PcgdApply, HorizontalPathLeavesEarlierColumnsAlone) {
  std::mt19937_64 rng(7);
  const auto d = random_grid(1, 24, rng, 0, 10);
  const auto g = random_grid<GuidanceTag>(1, 24, rng);
  const CapoParams p = make_capo_params(4, 7);
  const DepthGrid base = pcgd_apply(d, g, p, kRow, kRow.transposed());
  for (std::size_t pos = 0; pos < 24; ++pos) {
    std::vector<double> v(d.values().begin(), d.values().end());
    v[pos] += 1.5;
    const DepthGrid out = pcgd_apply(DepthGrid(1, 24, v), g, p, kRow, kRow.transposed());
    for (std::size_t c = 0; c + 4 < pos; ++c) EXPECT_EQ(out[c], base[c]) << "perturb " << pos << " col " << c;
  }
}

TEST(PcgdBackward, IdentityNetworkPassesTheUpstreamThrough) {
  std::mt19937_64 rng(8);
  const auto d = random_grid(6, 7, rng);
  const auto g = random_grid<GuidanceTag>(6, 7, rng);
  const auto up = random_grid(6, 7, rng, -1, 1);
  const CapoParams p = make_capo_params(4, 8, CapoInit{{32, 32}, true});
  EXPECT_LE(max_abs_diff(pcgd_backward(d, g, p, kRow, kRow.transposed(), up).d_depth, up), 1e-12);
}

TEST(PcgdBackward, ParamGradientSumsAllFourStreams) {
  std::mt19937_64 rng(9);
  const auto d = random_grid(6, 6, rng);
  const auto g = random_grid<GuidanceTag>(6, 6, rng);
  const auto up = random_grid(6, 6, rng, -1, 1);
  const CapoParams p = make_capo_params(4, 9);
  const auto total = pcgd_backward(d, g, p, kRow, kRow.transposed(), up).d_params;

  // Each stream's share, computed through capo_backward with the upstream
  // the integration adjoint hands it.
  std::vector<double> expected(total.size(), 0.0);
  for (Axis axis : {Axis::Horizontal, Axis::Vertical}) {
    const WindowSpec spec = axis == Axis::Horizontal ? kRow : kRow.transposed();
    const GradientField f = differentiate(d, axis);
    const GuidanceGrid gg = guidance_gradient(g, axis).magnitude;
    std::vector<double> g_proc(36, 0.0);
    for (std::size_t line = 0; line < 6; ++line) {
      double suffix = 0.0;
      for (std::size_t i = 6; i-- > 1;) {
        const std::size_t at = axis == Axis::Horizontal ? line * 6 + i : i * 6 + line;
        const std::size_t prev = axis == Axis::Horizontal ? line * 6 + i - 1 : (i - 1) * 6 + line;
        suffix += 0.5 * up[at];
        g_proc[prev] = suffix;
      }
    }
    std::vector<double> neg_mag(36), g_neg(36);
    for (std::size_t i = 0; i < 36; ++i) {
      neg_mag[i] = -f.negative[i];
      g_neg[i] = -g_proc[i];
    }
    const auto a = capo_backward(f.positive, gg, p, spec, DepthGrid(6, 6, g_proc)).d_params;
    const auto b = capo_backward(DepthGrid(6, 6, neg_mag), gg, p, spec, DepthGrid(6, 6, g_neg)).d_params;
    for (std::size_t k = 0; k < expected.size(); ++k) expected[k] += a[k] + b[k];
  }
  for (std::size_t k = 0; k < total.size(); ++k) EXPECT_NEAR(total[k], expected[k], 1e-12 * (1 + std::fabs(expected[k])));
}

TEST(PcgdBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  const auto d = random_grid(8, 8, rng, 0, 5);
  const auto g = random_grid<GuidanceTag>(8, 8, rng);
  const CapoParams p = make_capo_params(4, 10);
  const auto xs = values(d);
  const std::vector<double> xg(g.values().begin(), g.values().end());
  EXPECT_LE(grad_check(pcgd_fn(d, g, p, kRow, kRow.transposed(), GradTarget::Stream), xs, sign_boundary_mask(d)), 1e-4);
  EXPECT_LE(grad_check(pcgd_fn(d, g, p, kRow, kRow.transposed(), GradTarget::Guide), xg,
                       sign_boundary_mask(retag<DepthTag>(g))),
            1e-4);
  EXPECT_LE(grad_check(pcgd_fn(d, g, p, kRow, kRow.transposed(), GradTarget::Params), p.flatten()), 1e-4);
}

TEST(PcgdBackward, FlatRegionsTakeThePositiveBranch) {
  // Zero differences everywhere: the subgradient goes through the positive
  // stream, so the stream gradient is exactly what the positive CAPO sees.
  const DepthGrid d = make_grid(1, 6, 3.0);
  const GuidanceGrid g(1, 6, {0.0, 0.1, 0.3, 0.2, 0.9, 1.0});
  const CapoParams p = make_capo_params(4, 11);
  const auto up = DepthGrid(1, 6, {0.1, -0.2, 0.3, 0.0, 0.5, -0.4});
  const auto grads = pcgd_backward(d, g, p, kRow, kRow.transposed(), up);
  const GradientField f = differentiate(d, Axis::Horizontal);
  const GuidanceGrid gg = guidance_gradient(g, Axis::Horizontal).magnitude;
  std::vector<double> g_proc(6, 0.0);
  double suffix = 0.0;
  for (std::size_t i = 6; i-- > 1;) g_proc[i - 1] = (suffix += 0.5 * up[i]);
  const auto pos = capo_backward(f.positive, gg, p, kRow, DepthGrid(1, 6, g_proc)).d_stream;
  std::vector<double> expected(6, 0.0);
  for (std::size_t i = 0; i < 6; ++i) expected[i] += 0.5 * up[i];  // vertical pass: extent 1
  expected[0] += suffix + 0.5 * up[0];  // anchor of the horizontal pass
  for (std::size_t i = 0; i + 1 < 6; ++i) {
    expected[i + 1] += pos[i];
    expected[i] -= pos[i];
  }
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(grads.d_depth[i], expected[i], 1e-12);
}
