#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "c2pd/guidance.hpp"
#include "c2pd/imageio.hpp"
#include "c2pd/optim.hpp"
#include "c2pd/pcgd.hpp"
#include "c2pd/pipeline.hpp"
#include "c2pd/resample.hpp"
#include "c2pd/selftest.hpp"
#include "c2pd/train.hpp"

namespace c2pd::cli {

namespace {

namespace fs = std::filesystem;

std::string dims(const DepthGrid& g) { return std::to_string(g.height()) + "x" + std::to_string(g.width()); }

struct DegradeArgs {
  std::string gt;
  long factor = 4;
  std::string out;
  std::string unit = "cm";
};

int cmd_degrade(const DegradeArgs& a, std::ostream& out) {
  const DepthUnit unit = parse_unit(a.unit);
  const DepthGrid gt = read_depth(a.gt, unit);
  const DepthGrid lr = bicubic_down(gt, a.factor);
  write_depth(lr, a.out, unit);
  out << "degraded " << dims(gt) << " -> " << dims(lr) << " (factor " << a.factor << ")\n";
  return kExitOk;
}

struct InferArgs {
  std::string lr;
  std::string guide;
  std::string rgb;
  std::string config;
  std::string out;
  std::string gt;
  std::string log;
  std::string vis;
  std::string unit = "cm";
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  const DepthUnit unit = parse_unit(a.unit);
  const PipelineConfig config = load_pipeline_config(a.config);
  const PipelineModel model = load_model(config);
  const DepthGrid lr = read_depth(a.lr, unit);
  std::optional<DepthGrid> gt;
  if (!a.gt.empty()) gt = read_depth(a.gt, unit);

  std::optional<GuidanceGrid> guide;
  if (!a.guide.empty()) {
    guide = load_guidance(a.guide);
  } else if (!a.rgb.empty()) {
    guide = guidance_from_rgb(read_rgb(a.rgb));
  } else {
    switch (config.guidance.kind) {
      case GuidanceKind::File:
        guide = load_guidance(config.guidance.path);
        break;
      case GuidanceKind::GtOracle:
        if (!gt) throw ConfigError("guidance.source=gt-oracle needs --gt");
        guide = guidance_from_gt(*gt);
        break;
      case GuidanceKind::Grayscale:
        throw ConfigError("guidance.source=grayscale needs --rgb");
    }
  }

  const DepthGrid pred = run_pipeline(lr, *guide, config, model);
  write_depth(pred, a.out, unit);
  if (!a.vis.empty()) write_depth_pgm(pred, a.vis);
  out << "wrote " << dims(pred) << " prediction to " << a.out << "\n";
  if (gt) {
    const double rmse = rmse_cm(pred, *gt);
    const double mad = mad_cm(pred, *gt);
    out << "rmse_cm " << format_double(rmse) << " mad_cm " << format_double(mad) << "\n";
    if (!a.log.empty()) append_csv_row(a.log, "file,rmse_cm,mad_cm", a.lr + "," + format_double(rmse) + "," + format_double(mad));
  }
  return kExitOk;
}

struct TrainArgs {
  std::string config;
  std::size_t steps = 2000;
  std::uint64_t seed = 1;
  std::string out_params;
  std::string log;
  double lr = 1e-4;
  std::size_t batch = 1;
  std::size_t eval_scenes = 16;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig tc;
  tc.pipeline = load_pipeline_config(a.config);
  tc.steps = a.steps;
  tc.seed = a.seed;
  tc.adam.learning_rate = a.lr;
  tc.batch = a.batch;

  std::ostringstream csv;
  csv << "step,l1,rmse\n";
  const TrainResult result = train_toy(tc, [&](const LossReport& r) {
    csv << r.step << ',' << format_double(r.l1) << ',' << format_double(r.rmse) << '\n';
  });
  if (!a.log.empty()) write_file(a.log, csv.str());
  if (result.model.iso) {
    write_params(*result.model.iso, a.out_params + ".iso");
    out << "wrote " << a.out_params << ".iso\n";
  }
  if (result.model.pcgd) {
    write_params(*result.model.pcgd, a.out_params + ".pcgd");
    out << "wrote " << a.out_params << ".pcgd\n";
  }
  if (a.eval_scenes > 0) {
    const EvalReport ev = evaluate_scenes(tc.pipeline, result.model, tc.scenes, a.seed + 1000003, a.eval_scenes);
    out << "held-out rmse_cm model " << format_double(ev.model_rmse) << " bicubic " << format_double(ev.bicubic_rmse)
        << "\n";
  }
  return kExitOk;
}

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string config;
  std::size_t scenes = 16;
  std::uint64_t seed = 1000004;
  std::string unit = "cm";
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (!a.config.empty()) {
    const PipelineConfig config = load_pipeline_config(a.config);
    const PipelineModel model = load_model(config);
    const EvalReport ev = evaluate_scenes(config, model, SceneSpec{}, a.seed, a.scenes);
    out << "scenes " << ev.scenes << " rmse_cm model " << format_double(ev.model_rmse) << " bicubic "
        << format_double(ev.bicubic_rmse) << "\n";
    return kExitOk;
  }
  if (a.pred.empty() || a.gt.empty()) throw ConfigError("eval needs --pred and --gt, or --config");
  const DepthUnit unit = parse_unit(a.unit);
  const DepthGrid pred = read_depth(a.pred, unit);
  const DepthGrid gt = read_depth(a.gt, unit);
  out << "rmse_cm " << format_double(rmse_cm(pred, gt)) << " mad_cm " << format_double(mad_cm(pred, gt)) << "\n";
  return kExitOk;
}

struct GradCheckArgs {
  std::uint64_t seed = 1;
  std::size_t size = 8;
};

int cmd_grad_check(const GradCheckArgs& a, std::ostream& out) {
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  auto random_values = [&](std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
  };
  const std::size_t n = a.size;
  const DepthGrid depth(n, n, random_values(n * n));
  const GuidanceGrid guide(n, n, random_values(n * n));
  const WindowSpec h{WindowShape::Row1x4, Padding::Replicate};
  const CapoParams params = make_capo_params(4, a.seed);

  bool ok = true;
  const char* names[] = {"stream", "guide", "params"};
  int idx = 0;
  for (GradTarget t : {GradTarget::Stream, GradTarget::Guide, GradTarget::Params}) {
    const std::vector<double> x = t == GradTarget::Stream ? std::vector<double>(depth.values().begin(), depth.values().end())
                                  : t == GradTarget::Guide ? std::vector<double>(guide.values().begin(), guide.values().end())
                                                           : params.flatten();
    std::vector<std::uint8_t> mask;
    if (t == GradTarget::Stream) mask = sign_boundary_mask(depth);
    if (t == GradTarget::Guide) mask = sign_boundary_mask(retag<DepthTag>(guide));
    const double capo_err = grad_check(capo_fn(depth, guide, params, h, t), x);
    const double pcgd_err = grad_check(pcgd_fn(depth, guide, params, h, h.transposed(), t), x, mask);
    out << "capo d_" << names[idx] << " max_rel_err " << format_double(capo_err) << "\n";
    out << "pcgd d_" << names[idx] << " max_rel_err " << format_double(pcgd_err) << "\n";
    ok = ok && capo_err <= 1e-4 && pcgd_err <= 1e-4;
    ++idx;
  }
  out << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitNumeric;
}

std::vector<double> sign_flipped_conserve(std::span<const double> raw) {
  const double mean = stable_sum(raw) / static_cast<double>(raw.size());
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] + mean;
  return out;
}

int cmd_selftest(const std::string& fault, std::ostream& out) {
  SelftestOptions options;
  if (fault == "conserve-sign") options.conserve = &sign_flipped_conserve;
  else if (!fault.empty()) throw ConfigError("unknown fault '" + fault + "' (known: conserve-sign)");
  bool all = true;
  for (const SelftestResult& r : run_selftest(options)) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    all = all && r.passed;
  }
  return all ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuity-constrained depth super-resolution tools", "c2pd"};
  app.require_subcommand(1);

  DegradeArgs degrade;
  auto* sc_degrade = app.add_subcommand("degrade", "Bicubic-downsample a ground-truth depth map");
  sc_degrade->add_option("--gt", degrade.gt, "ground-truth depth (PFM/PGM)")->required();
  sc_degrade->add_option("--factor", degrade.factor, "downsampling factor")->required();
  sc_degrade->add_option("--out", degrade.out, "output LR depth")->required();
  sc_degrade->add_option("--unit", degrade.unit, "depth unit of the files (m|cm)");

  InferArgs infer;
  auto* sc_infer = app.add_subcommand("infer", "Run the super-resolution pipeline");
  sc_infer->add_option("--lr", infer.lr, "low-resolution depth")->required();
  auto* guide_opt = sc_infer->add_option("--guide", infer.guide, "guidance grid (PFM)");
  auto* rgb_opt = sc_infer->add_option("--rgb", infer.rgb, "RGB guidance image (PPM)");
  guide_opt->excludes(rgb_opt);
  sc_infer->add_option("--config", infer.config, "pipeline config")->required();
  sc_infer->add_option("--out", infer.out, "predicted depth output")->required();
  sc_infer->add_option("--gt", infer.gt, "ground truth; enables metrics");
  sc_infer->add_option("--log", infer.log, "CSV file receiving file,rmse_cm,mad_cm");
  sc_infer->add_option("--vis", infer.vis, "PGM visualization output");
  sc_infer->add_option("--unit", infer.unit, "depth unit of the files (m|cm)");

  TrainArgs train;
  auto* sc_train = app.add_subcommand("train", "Train both stages on synthetic scenes");
  sc_train->add_option("--config", train.config, "pipeline config")->required();
  sc_train->add_option("--steps", train.steps, "optimizer steps")->check(CLI::PositiveNumber);
  sc_train->add_option("--seed", train.seed, "random seed");
  sc_train->add_option("--out-params", train.out_params, "parameter file prefix (.iso/.pcgd appended)")->required();
  sc_train->add_option("--log", train.log, "CSV training history (step,l1,rmse)");
  sc_train->add_option("--lr", train.lr, "Adam learning rate");
  sc_train->add_option("--batch", train.batch, "scenes per step")->check(CLI::PositiveNumber);
  sc_train->add_option("--eval-scenes", train.eval_scenes, "held-out scenes evaluated after training");

  EvalArgs eval;
  auto* sc_eval = app.add_subcommand("eval", "RMSE/MAD of a prediction, or a synthetic held-out evaluation");
  sc_eval->add_option("--pred", eval.pred, "predicted depth");
  sc_eval->add_option("--gt", eval.gt, "ground-truth depth");
  sc_eval->add_option("--config", eval.config, "pipeline config for synthetic evaluation");
  sc_eval->add_option("--scenes", eval.scenes, "number of synthetic scenes");
  sc_eval->add_option("--seed", eval.seed, "scene seed");
  sc_eval->add_option("--unit", eval.unit, "depth unit of the files (m|cm)");

  GradCheckArgs gc;
  auto* sc_gc = app.add_subcommand("grad-check", "Finite-difference check of the analytic gradients");
  sc_gc->add_option("--seed", gc.seed, "random seed");
  sc_gc->add_option("--size", gc.size, "grid side length")->check(CLI::Range(2, 32));

  std::string fault;
  auto* sc_self = app.add_subcommand("selftest", "Run the invariant suite");
  sc_self->add_option("--inject-fault", fault, "deliberately break a component (conserve-sign)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*sc_degrade) return cmd_degrade(degrade, out);
    if (*sc_infer) return cmd_infer(infer, out);
    if (*sc_train) return cmd_train(train, out);
    if (*sc_eval) return cmd_eval(eval, out);
    if (*sc_gc) return cmd_grad_check(gc, out);
    if (*sc_self) return cmd_selftest(fault, out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace c2pd::cli
