#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "c2pd/error.hpp"
#include "c2pd/guidance.hpp"
#include "c2pd/imageio.hpp"
#include "c2pd/optim.hpp"
#include "c2pd/pipeline.hpp"
#include "c2pd/resample.hpp"
#include "c2pd/train.hpp"
#include "test_support.hpp"

using namespace c2pd;
using testing_support::max_abs_diff;
using testing_support::random_grid;
using testing_support::TempDir;

TEST(Guidance, LuminanceOfPrimaries) {
  for (double v : testing_support::vals(guidance_from_rgb(RgbImage(2, 2, std::vector<double>(12, 1.0))))) EXPECT_NEAR(v, 1.0, 1e-15);
  for (double v : testing_support::vals(guidance_from_rgb(RgbImage(2, 2, std::vector<double>(12, 0.0))))) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(guidance_from_rgb(RgbImage(1, 1, {1, 0, 0}))[0], 0.299, 1e-15);
  EXPECT_THROW(RgbImage(1, 1, {1.5, 0, 0}), ValidationError);
}

TEST(Guidance, MinMaxOfGroundTruth) {
  const GuidanceGrid g = guidance_from_gt(DepthGrid(1, 2, {0, 10}));
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 1.0);
  for (double v : testing_support::vals(guidance_from_gt(make_grid(3, 3, 50.0)))) EXPECT_EQ(v, 0.0);
}

TEST(Guidance, SourceNames) {
  EXPECT_EQ(parse_guidance_kind("gt-oracle"), GuidanceKind::GtOracle);
  EXPECT_EQ(parse_guidance_kind("grayscale"), GuidanceKind::Grayscale);
  EXPECT_EQ(parse_guidance_kind("file"), GuidanceKind::File);
  EXPECT_THROW(parse_guidance_kind("depth"), ConfigError);
}

TEST(Config, ParsesEveryKey) {
  const PipelineConfig c = parse_pipeline_config(
      "# comment\nscale = 8\niso.enabled = false\niso.window = 3x3\npcgd.repeat = 2\npcgd.window = 3x3\n"
      "pcgd.params_path = p.bin\nguidance.source = file\nguidance.path = g.pfm\npadding = circular\nbicubic.a = -0.75\n",
      "/base");
  EXPECT_EQ(c.scale, 8);
  EXPECT_FALSE(c.iso_enabled);
  EXPECT_EQ(c.iso_window, WindowShape::Square3x3);
  EXPECT_EQ(c.pcgd_repeat, 2u);
  EXPECT_EQ(c.pcgd_spec_v().shape, WindowShape::Square3x3);
  EXPECT_EQ(c.pcgd_params_path, std::filesystem::path("/base/p.bin"));
  EXPECT_EQ(c.guidance.kind, GuidanceKind::File);
  EXPECT_EQ(c.guidance.path, std::filesystem::path("/base/g.pfm"));
  EXPECT_EQ(c.padding, Padding::Circular);
  EXPECT_EQ(c.kernel.a, -0.75);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_pipeline_config("scale = 3\n"), ConfigError);
  EXPECT_THROW(parse_pipeline_config("scale = 64\n"), ConfigError);
  EXPECT_THROW(parse_pipeline_config("scale = 4\nscale = 8\n"), ConfigError);
  EXPECT_THROW(parse_pipeline_config("colour = red\n"), ConfigError);
  EXPECT_THROW(parse_pipeline_config("scale 4\n"), ConfigError);
  EXPECT_THROW(parse_pipeline_config("pcgd.window = 4x1\n"), ConfigError);
  EXPECT_THROW(parse_pipeline_config("iso.enabled = maybe\n"), ConfigError);
  EXPECT_THROW(parse_pipeline_config("guidance.source = file\n"), ConfigError);
  EXPECT_THROW(load_pipeline_config("/nonexistent/c2pd.cfg"), ConfigError);
}

TEST(Config, MissingParamsFileNamesTheKey) {
  PipelineConfig c;
  c.iso_params_path = "/nonexistent/iso.bin";
  c.pcgd_repeat = 0;
  try {
    load_model(c);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("iso.params_path"), std::string::npos);
  }
}

TEST(Pipeline, DisabledStagesPassBicubicThrough) {
  std::mt19937_64 rng(1);
  const auto lr = random_grid(4, 5, rng, 20, 200);
  const auto guide = random_grid<GuidanceTag>(16, 20, rng);
  PipelineConfig c;
  c.iso_enabled = false;
  c.pcgd_repeat = 0;
  EXPECT_EQ(run_pipeline(lr, guide, c, {}), bicubic_up(lr, 4));
}

TEST(Pipeline, ZeroNetworksPassBicubicThrough) {
  std::mt19937_64 rng(2);
  const auto lr = random_grid(4, 4, rng, 20, 200);
  const auto guide = random_grid<GuidanceTag>(16, 16, rng);
  PipelineConfig c;
  c.pcgd_repeat = 2;
  PipelineModel m{zero_capo_params(4), zero_capo_params(4)};
  EXPECT_LE(max_abs_diff(run_pipeline(lr, guide, c, m), bicubic_up(lr, 4)), 1e-12);
}

TEST(Pipeline, GuidanceDimensionMismatch) {
  PipelineConfig c;
  const PipelineModel m = init_model(c, 1);
  EXPECT_THROW(run_pipeline(make_grid(4, 4, 1), GuidanceGrid(4, 4, std::vector<double>(16, 0.0)), c, m), ShapeError);
}

TEST(Pipeline, StageGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  const auto up = random_grid(8, 8, rng, 20, 200);
  const auto guide = random_grid<GuidanceTag>(8, 8, rng);
  PipelineConfig c;
  c.pcgd_repeat = 2;
  const PipelineModel base = init_model(c, 3, CapoInit{{6}});
  const std::size_t n_iso = base.iso->parameter_count();
  auto with = [&](std::span<const double> x) {
    PipelineModel m = base;
    m.iso->assign(x.subspan(0, n_iso));
    m.pcgd->assign(x.subspan(n_iso));
    return m;
  };
  DifferentiableFn fn;
  fn.forward = [&](std::span<const double> x) {
    const DepthGrid out = run_stages(up, guide, c, with(x));
    return std::vector<double>(out.values().begin(), out.values().end());
  };
  fn.backward = [&](std::span<const double> x, std::span<const double> u) {
    const std::vector<double> uv(u.begin(), u.end());
    const StagesResult r = run_stages_with_gradients(up, guide, c, with(x), [&](const DepthGrid&) { return DepthGrid(8, 8, uv); });
    std::vector<double> g = r.grads.iso;
    g.insert(g.end(), r.grads.pcgd.begin(), r.grads.pcgd.end());
    return g;
  };
  std::vector<double> x = base.iso->flatten();
  const auto p = base.pcgd->flatten();
  x.insert(x.end(), p.begin(), p.end());
  EXPECT_LE(grad_check(fn, x), 1e-4);
}

TEST(Optim, L1Loss) {
  const DepthGrid gt = make_grid(2, 2, 5.0);
  const L1Result same = l1_loss(gt, gt);
  EXPECT_EQ(same.loss, 0.0);
  for (double v : same.gradient.values()) EXPECT_EQ(v, 0.0);
  const L1Result off = l1_loss(make_grid(2, 2, 8.0), gt);
  EXPECT_EQ(off.loss, 3.0);
  for (double v : off.gradient.values()) EXPECT_EQ(v, 0.25);
  const L1Result mixed = l1_loss(DepthGrid(1, 2, {-1, 1}), make_grid(1, 2, 0.0));
  EXPECT_EQ(mixed.loss, 1.0);
  EXPECT_EQ(mixed.gradient[0], -0.5);
  EXPECT_EQ(mixed.gradient[1], 0.5);
}

TEST(Optim, AdamFirstStep) {
  std::vector<double> p = {0.0};
  const std::vector<double> g = {1.0};
  OptimState s = make_optim_state(1, AdamConfig{0.001, 0.9, 0.999, 1e-8});
  adam_step(p, g, s);
  EXPECT_EQ(s.step, 1u);
  EXPECT_NEAR(p[0], -0.001, 1e-10);
}

TEST(Optim, AdamZeroGradientAndDeterminism) {
  std::vector<double> p = {1.0, -2.0};
  OptimState s = make_optim_state(2);
  adam_step(p, std::vector<double>{0.0, 0.0}, s);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(s.step, 1u);

  auto trajectory = [] {
    std::vector<double> q = {0.3, 0.7};
    OptimState st = make_optim_state(2);
    for (int i = 0; i < 50; ++i) adam_step(q, std::vector<double>{q[0] - q[1], std::sin(q[0])}, st);
    return q;
  };
  EXPECT_EQ(trajectory(), trajectory());
}

TEST(Optim, GradCheckOfALinearMap) {
  DifferentiableFn fn;
  fn.forward = [](std::span<const double> x) { return std::vector<double>{2 * x[0] - x[1], 3 * x[1]}; };
  fn.backward = [](std::span<const double>, std::span<const double> u) {
    return std::vector<double>{2 * u[0], -u[0] + 3 * u[1]};
  };
  const std::vector<double> x = {0.4, -1.2};
  EXPECT_LE(grad_check(fn, x), 1e-10);
}

TEST(Optim, GradCheckCatchesAWrongGradient) {
  DifferentiableFn fn;
  fn.forward = [](std::span<const double> x) { return std::vector<double>{x[0] * x[0]}; };
  fn.backward = [](std::span<const double> x, std::span<const double> u) { return std::vector<double>{x[0] * u[0]}; };
  const std::vector<double> x = {1.5};
  EXPECT_GT(grad_check(fn, x), 0.1);
}

TEST(Optim, SignBoundaryMask) {
  const auto mask = sign_boundary_mask(DepthGrid(1, 4, {1.0, 1.0, 2.0, 5.0}));
  EXPECT_EQ(mask[0], 0);
  EXPECT_EQ(mask[1], 0);
  EXPECT_EQ(mask[3], 1);
}

TEST(Train, OneStepGivesOneReport) {
  TrainConfig tc;
  tc.steps = 1;
  const TrainResult r = train_toy(tc);
  EXPECT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.history[0].step, 1u);
}

TEST(Train, ZeroLearningRateKeepsParameters) {
  TrainConfig tc;
  tc.steps = 5;
  tc.adam.learning_rate = 0.0;
  const TrainResult r = train_toy(tc);
  const PipelineModel init = init_model(tc.pipeline, tc.seed);
  EXPECT_EQ(r.model.iso, init.iso);
  EXPECT_EQ(r.model.pcgd, init.pcgd);
}

TEST(Train, SameSeedSameHistory) {
  TrainConfig tc;
  tc.steps = 4;
  const TrainResult a = train_toy(tc);
  const TrainResult b = train_toy(tc);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].l1, b.history[i].l1);
    EXPECT_EQ(a.history[i].rmse, b.history[i].rmse);
  }
  EXPECT_EQ(a.model.pcgd, b.model.pcgd);
}

TEST(Train, HugeLearningRateDiverges) {
  TrainConfig tc;
  tc.steps = 20;
  tc.adam.learning_rate = 1e308;
  EXPECT_THROW(train_toy(tc), DivergenceError);
}

TEST(Train, AugmentationPreservesContent) {
  std::mt19937_64 rng(4);
  const Scene s = make_scene(SceneSpec{}, rng);
  for (int i = 0; i < 8; ++i) {
    const Scene a = augment(s, rng);
    std::vector<double> x(s.gt.values().begin(), s.gt.values().end());
    std::vector<double> y(a.gt.values().begin(), a.gt.values().end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    EXPECT_EQ(x, y);
  }
  for (double v : s.gt.values()) {
    EXPECT_GE(v, 20.0);
    EXPECT_LE(v, 200.0);
  }
}

namespace {

// Shared 300-step run of the default configuration.
const TrainResult& short_run() {
  static const TrainResult r = [] {
    TrainConfig tc;
    tc.steps = 300;
    return train_toy(tc);
  }();
  return r;
}

}  // namespace

TEST(Train, SmoothedLossTrendsDownward) {
  // 20-step moving average of the L1 loss over the first 200 steps.
  const TrainResult& r = short_run();
  std::vector<double> ma;
  double window = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    window += r.history[i].l1;
    if (i >= 20) window -= r.history[i - 20].l1;
    if (i >= 19) ma.push_back(window / 20.0);
  }
  EXPECT_LT(ma.back(), ma.front());
  const double n = static_cast<double>(ma.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double x = static_cast<double>(i);
    sx += x;
    sy += ma[i];
    sxx += x * x;
    sxy += x * ma[i];
  }
  EXPECT_LT((n * sxy - sx * sy) / (n * sxx - sx * sx), 0.0);
}

TEST(Train, TrainedModelBeatsBicubicOnAStepScene) {
  const TrainResult& r = short_run();
  const PipelineConfig config;
  std::vector<double> gt(12 * 12);
  for (std::size_t row = 0; row < 12; ++row)
    for (std::size_t c = 0; c < 12; ++c) gt[row * 12 + c] = c < 5 ? 60.0 : 140.0;
  const DepthGrid g(12, 12, gt);
  const DepthGrid lr = bicubic_down(g, 4);
  const DepthGrid out = run_pipeline(lr, guidance_from_gt(g), config, r.model);
  EXPECT_LT(rmse_cm(out, g), rmse_cm(bicubic_up(lr, 4), g));
}
