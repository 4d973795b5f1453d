#include "c2pd/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "c2pd/guidance.hpp"
#include "c2pd/resample.hpp"

namespace c2pd {

Scene make_scene(const SceneSpec& spec, std::mt19937_64& rng) {
  const std::size_t n = spec.size;
  std::uniform_real_distribution<double> depth(spec.min_depth_cm, spec.max_depth_cm);
  std::uniform_real_distribution<double> colour(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> rect_count(spec.min_rects, spec.max_rects);
  std::uniform_int_distribution<std::size_t> extent(std::max<std::size_t>(2, n / 8), std::max<std::size_t>(2, n / 2));
  std::uniform_int_distribution<std::size_t> corner(0, n - 1);

  std::vector<double> d(n * n, depth(rng));
  std::vector<double> rgb(3 * n * n);
  const double bg[3] = {colour(rng), colour(rng), colour(rng)};
  for (std::size_t i = 0; i < n * n; ++i) std::copy(bg, bg + 3, rgb.begin() + static_cast<std::ptrdiff_t>(3 * i));

  const std::size_t rects = rect_count(rng);
  for (std::size_t k = 0; k < rects; ++k) {
    const std::size_t r0 = corner(rng);
    const std::size_t c0 = corner(rng);
    const std::size_t rh = extent(rng);
    const std::size_t rw = extent(rng);
    const double z = depth(rng);
    const double col[3] = {colour(rng), colour(rng), colour(rng)};
    for (std::size_t r = r0; r < std::min(n, r0 + rh); ++r) {
      for (std::size_t c = c0; c < std::min(n, c0 + rw); ++c) {
        d[r * n + c] = z;
        std::copy(col, col + 3, rgb.begin() + static_cast<std::ptrdiff_t>(3 * (r * n + c)));
      }
    }
  }
  return Scene{DepthGrid(n, n, std::move(d)), RgbImage(n, n, std::move(rgb))};
}

namespace {

// Maps output (r, c) to the source index for a rotation by k quarter turns
// followed by an optional horizontal flip. Square scenes only.
std::size_t source_index(std::size_t r, std::size_t c, std::size_t n, int k, bool flip) {
  if (flip) c = n - 1 - c;
  for (int i = 0; i < k; ++i) {
    const std::size_t nr = c;
    const std::size_t nc = n - 1 - r;
    r = nr;
    c = nc;
  }
  return r * n + c;
}

}  // namespace

Scene augment(const Scene& scene, std::mt19937_64& rng) {
  const std::size_t n = scene.gt.height();
  if (scene.gt.width() != n) throw ShapeError("augment: scenes must be square");
  std::uniform_int_distribution<int> quarter(0, 3);
  std::uniform_int_distribution<int> coin(0, 1);
  const int k = quarter(rng);
  const bool flip = coin(rng) == 1;
  std::vector<double> d(n * n);
  std::vector<double> rgb(3 * n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t src = source_index(r, c, n, k, flip);
      d[r * n + c] = scene.gt[src];
      for (int ch = 0; ch < 3; ++ch) rgb[3 * (r * n + c) + ch] = scene.rgb.data()[3 * src + ch];
    }
  }
  return Scene{DepthGrid(n, n, std::move(d)), RgbImage(n, n, std::move(rgb))};
}

GuidanceGrid scene_guidance(const Scene& scene, const GuidanceSource& source) {
  switch (source.kind) {
    case GuidanceKind::Grayscale:
      return guidance_from_rgb(scene.rgb);
    case GuidanceKind::GtOracle:
      return guidance_from_gt(scene.gt);
    case GuidanceKind::File:
      break;
  }
  throw ConfigError("guidance.source=file cannot be used with synthetic scenes");
}

TrainResult train_toy(const TrainConfig& config, const std::function<void(const LossReport&)>& on_step) {
  if (config.steps < 1) throw ConfigError("training needs at least one step");
  if (config.batch < 1) throw ConfigError("batch must be at least 1");
  config.pipeline.validate();
  if (!config.pipeline.any_stage()) throw ConfigError("training needs at least one enabled stage");
  if (config.scenes.size % static_cast<std::size_t>(config.pipeline.scale) != 0) {
    throw ConfigError("scene size must be divisible by the scale factor");
  }

  TrainResult result;
  result.model = init_model(config.pipeline, config.seed, config.init);
  PipelineModel& model = result.model;
  std::vector<double> iso_flat = model.iso ? model.iso->flatten() : std::vector<double>{};
  std::vector<double> pcgd_flat = model.pcgd ? model.pcgd->flatten() : std::vector<double>{};
  OptimState iso_state = make_optim_state(iso_flat.size(), config.adam);
  OptimState pcgd_state = make_optim_state(pcgd_flat.size(), config.adam);

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const double inv_batch = 1.0 / static_cast<double>(config.batch);
  for (std::size_t step = 1; step <= config.steps; ++step) {
    std::vector<double> iso_grad(iso_flat.size(), 0.0);
    std::vector<double> pcgd_grad(pcgd_flat.size(), 0.0);
    LossReport report;
    report.step = step;
    for (std::size_t b = 0; b < config.batch; ++b) {
      const Scene scene = augment(make_scene(config.scenes, rng), rng);
      const DepthGrid up = bicubic_up(bicubic_down(scene.gt, config.pipeline.scale, config.pipeline.kernel),
                                      config.pipeline.scale, config.pipeline.kernel);
      const GuidanceGrid guide = scene_guidance(scene, config.pipeline.guidance);
      double l1 = 0.0;
      double rmse = 0.0;
      const StagesResult res = [&] {
        try {
          return run_stages_with_gradients(up, guide, config.pipeline, model, [&](const DepthGrid& out) {
            L1Result loss = l1_loss(out, scene.gt);
            l1 = loss.loss;
            rmse = rmse_cm(out, scene.gt);
            return std::move(loss.gradient);
          });
        } catch (const NumericError& e) {
          throw DivergenceError("training diverged at step " + std::to_string(step) + ": " + e.what());
        }
      }();
      if (!std::isfinite(l1)) throw DivergenceError("training diverged at step " + std::to_string(step));
      report.l1 += l1 * inv_batch;
      report.rmse += rmse * inv_batch;
      for (std::size_t k = 0; k < iso_grad.size(); ++k) iso_grad[k] += res.grads.iso[k] * inv_batch;
      for (std::size_t k = 0; k < pcgd_grad.size(); ++k) pcgd_grad[k] += res.grads.pcgd[k] * inv_batch;
    }
    if (model.iso) {
      adam_step(iso_flat, iso_grad, iso_state);
      model.iso->assign(iso_flat);
    }
    if (model.pcgd) {
      adam_step(pcgd_flat, pcgd_grad, pcgd_state);
      model.pcgd->assign(pcgd_flat);
    }
    for (double v : iso_flat)
      if (!std::isfinite(v)) throw DivergenceError("parameters diverged at step " + std::to_string(step));
    for (double v : pcgd_flat)
      if (!std::isfinite(v)) throw DivergenceError("parameters diverged at step " + std::to_string(step));
    result.history.push_back(report);
    if (on_step) on_step(report);
  }
  return result;
}

EvalReport evaluate_scenes(const PipelineConfig& config, const PipelineModel& model, const SceneSpec& spec,
                           std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  EvalReport report;
  report.scenes = count;
  for (std::size_t i = 0; i < count; ++i) {
    const Scene scene = make_scene(spec, rng);
    const DepthGrid lr = bicubic_down(scene.gt, config.scale, config.kernel);
    const GuidanceGrid guide = scene_guidance(scene, config.guidance);
    const DepthGrid up = bicubic_up(lr, config.scale, config.kernel);
    report.bicubic_rmse += rmse_cm(up, scene.gt);
    report.model_rmse += rmse_cm(run_stages(up, guide, config, model), scene.gt);
  }
  if (count > 0) {
    report.bicubic_rmse /= static_cast<double>(count);
    report.model_rmse /= static_cast<double>(count);
  }
  return report;
}

}  // namespace c2pd
