#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "c2pd/optim.hpp"
#include "c2pd/pipeline.hpp"
#include "c2pd/rgb_image.hpp"

namespace c2pd {

/// Synthetic piecewise-constant scenes: a background plane plus a few
/// axis-aligned rectangles, each at its own depth and colour.
struct SceneSpec {
  std::size_t size = 48;
  std::size_t min_rects = 1;
  std::size_t max_rects = 4;
  double min_depth_cm = 20.0;
  double max_depth_cm = 200.0;
};

struct Scene {
  DepthGrid gt;
  RgbImage rgb;
};

Scene make_scene(const SceneSpec& spec, std::mt19937_64& rng);

/// Random multiple of 90 degrees rotation and optional horizontal flip,
/// applied identically to depth and colour.
Scene augment(const Scene& scene, std::mt19937_64& rng);

/// Guidance for a scene according to the configured source (grayscale or
/// gt-oracle; file sources are not meaningful for synthetic scenes).
GuidanceGrid scene_guidance(const Scene& scene, const GuidanceSource& source);

struct TrainConfig {
  PipelineConfig pipeline;
  std::size_t steps = 2000;
  std::uint64_t seed = 1;
  AdamConfig adam;
  std::size_t batch = 1;  // scenes whose gradients are averaged per step
  SceneSpec scenes;
  CapoInit init;
};

struct TrainResult {
  PipelineModel model;
  std::vector<LossReport> history;
};

/// Trains both stages jointly on freshly generated scenes with the L1
/// objective. Deterministic for a fixed seed. Throws DivergenceError when a
/// loss turns non-finite. `on_step` (optional) sees every report.
TrainResult train_toy(const TrainConfig& config, const std::function<void(const LossReport&)>& on_step = {});

struct EvalReport {
  double model_rmse = 0.0;    // mean over scenes, cm
  double bicubic_rmse = 0.0;  // mean over scenes, cm
  std::size_t scenes = 0;
};

/// Held-out evaluation on `count` scenes drawn from `seed` (no augmentation).
EvalReport evaluate_scenes(const PipelineConfig& config, const PipelineModel& model, const SceneSpec& spec,
                           std::uint64_t seed, std::size_t count);

}  // namespace c2pd
