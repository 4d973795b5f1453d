#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "c2pd/capo.hpp"
#include "c2pd/grid.hpp"
#include "c2pd/guidance.hpp"
#include "c2pd/resample.hpp"

namespace c2pd {

/// Super-resolution pipeline settings, usually parsed from a key=value file:
///
///   scale             4 | 8 | 16 | 32 (any power of two in [2, 32])
///   iso.enabled       true | false
///   iso.window        1x4 | 4x1 | 3x3
///   iso.params_path   parameter file of the isovolumetric stage
///   pcgd.repeat       0..8 (0 disables the gradient stage)
///   pcgd.window       1x4 | 3x3 (the vertical pass uses the transpose)
///   pcgd.params_path  parameter file of the gradient stage
///   guidance.source   grayscale | gt-oracle | file
///   guidance.path     PFM guidance for source=file
///   padding           replicate | circular
///   bicubic.a         cubic kernel parameter (default -0.5)
///
/// Relative parameter/guidance paths resolve against the config file's
/// directory.
struct PipelineConfig {
  long scale = 4;
  bool iso_enabled = true;
  WindowShape iso_window = WindowShape::Row1x4;
  std::filesystem::path iso_params_path;
  std::size_t pcgd_repeat = 1;
  WindowShape pcgd_window = WindowShape::Row1x4;
  std::filesystem::path pcgd_params_path;
  GuidanceSource guidance;
  Padding padding = Padding::Replicate;
  BicubicKernel kernel;

  WindowSpec iso_spec() const { return {iso_window, padding}; }
  WindowSpec pcgd_spec_h() const { return {pcgd_window, padding}; }
  WindowSpec pcgd_spec_v() const { return pcgd_spec_h().transposed(); }
  bool any_stage() const { return iso_enabled || pcgd_repeat > 0; }

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Parameters for the two stages. They are separate networks; within the
/// gradient stage one network serves both axes and both sign streams.
struct PipelineModel {
  std::optional<CapoParams> iso;
  std::optional<CapoParams> pcgd;
};

/// Reads the parameter files named by an enabled stage. Errors name the
/// offending config key.
PipelineModel load_model(const PipelineConfig& config);

/// Fresh randomly initialized networks for every enabled stage.
PipelineModel init_model(const PipelineConfig& config, std::uint64_t seed, const CapoInit& init = {});

/// bicubic_up, then the isovolumetric CAPO stage on depth values, then
/// pcgd_repeat gradient-domain stages. With every stage disabled the result
/// is exactly bicubic_up(lr). Stages operate on depth min-max normalized by
/// the upsampled input's range and the result is mapped back to cm.
DepthGrid run_pipeline(const DepthGrid& lr, const GuidanceGrid& guide, const PipelineConfig& config,
                       const PipelineModel& model);

/// Same, starting from an already upsampled depth grid.
DepthGrid run_stages(const DepthGrid& upsampled, const GuidanceGrid& guide, const PipelineConfig& config,
                     const PipelineModel& model);

/// Gradients of run_stages' output with respect to both stages' parameters.
struct ModelGradients {
  std::vector<double> iso;
  std::vector<double> pcgd;
};

struct StagesResult {
  DepthGrid out;
  ModelGradients grads;
};

/// Runs the stages forward, then backpropagates `d_out_fn(out)` (the loss
/// gradient with respect to the output, in cm) to the parameters.
template <class LossGrad>
StagesResult run_stages_with_gradients(const DepthGrid& upsampled, const GuidanceGrid& guide,
                                       const PipelineConfig& config, const PipelineModel& model, LossGrad&& d_out_fn);

double predict_residual_rmse(const DepthGrid& out, const DepthGrid& gt);

// Implementation detail of run_stages_with_gradients.
namespace detail {
struct StageTrace {
  double lo = 0.0;
  double range = 1.0;
  std::vector<DepthGrid> inputs;  // normalized input of every stage, in order
  DepthGrid out;
};
StageTrace trace_stages(const DepthGrid& upsampled, const GuidanceGrid& guide, const PipelineConfig& config,
                        const PipelineModel& model);
ModelGradients backprop_stages(const StageTrace& trace, const GuidanceGrid& guide, const PipelineConfig& config,
                               const PipelineModel& model, const DepthGrid& d_out);
}  // namespace detail

template <class LossGrad>
StagesResult run_stages_with_gradients(const DepthGrid& upsampled, const GuidanceGrid& guide,
                                       const PipelineConfig& config, const PipelineModel& model, LossGrad&& d_out_fn) {
  detail::StageTrace trace = detail::trace_stages(upsampled, guide, config, model);
  const DepthGrid d_out = d_out_fn(trace.out);
  ModelGradients grads = detail::backprop_stages(trace, guide, config, model, d_out);
  return StagesResult{std::move(trace.out), std::move(grads)};
}

}  // namespace c2pd
