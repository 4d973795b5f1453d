#include "c2pd/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "c2pd/imageio.hpp"
#include "c2pd/pcgd.hpp"

namespace c2pd {

void PipelineConfig::validate() const {
  if (scale < 2 || scale > 32 || (scale & (scale - 1)) != 0) {
    throw ConfigError("scale must be a power of two between 2 and 32, got " + std::to_string(scale));
  }
  if (pcgd_repeat > 8) throw ConfigError("pcgd.repeat must be at most 8");
  if (pcgd_window == WindowShape::Col4x1) throw ConfigError("pcgd.window must be 1x4 or 3x3");
  if (guidance.kind == GuidanceKind::File && guidance.path.empty()) {
    throw ConfigError("guidance.source=file requires guidance.path");
  }
  if (!(kernel.a < 0.0 && kernel.a > -3.0)) throw ConfigError("bicubic.a must lie in (-3, 0)");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

long parse_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  double out = 0.0;
  if (!(in >> out) || !in.eof()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  return p.is_relative() && !base.empty() ? base / p : p;
}

template <class Fn>
auto with_key(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind(key, 0) == 0) throw;
    throw ConfigError(key + ": " + msg);
  }
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given twice");

    if (key == "scale") {
      cfg.scale = parse_long(key, value);
    } else if (key == "iso.enabled") {
      cfg.iso_enabled = parse_bool(key, value);
    } else if (key == "iso.window") {
      cfg.iso_window = with_key(key, [&] { return parse_window_shape(value); });
    } else if (key == "iso.params_path") {
      cfg.iso_params_path = resolve(base_dir, value);
    } else if (key == "pcgd.repeat") {
      const long r = parse_long(key, value);
      if (r < 0) throw ConfigError("pcgd.repeat must be >= 0");
      cfg.pcgd_repeat = static_cast<std::size_t>(r);
    } else if (key == "pcgd.window") {
      cfg.pcgd_window = with_key(key, [&] { return parse_window_shape(value); });
    } else if (key == "pcgd.params_path") {
      cfg.pcgd_params_path = resolve(base_dir, value);
    } else if (key == "guidance.source") {
      cfg.guidance.kind = with_key(key, [&] { return parse_guidance_kind(value); });
    } else if (key == "guidance.path") {
      cfg.guidance.path = resolve(base_dir, value);
    } else if (key == "padding") {
      cfg.padding = with_key(key, [&] { return parse_padding(value); });
    } else if (key == "bicubic.a") {
      cfg.kernel.a = parse_double(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "' on line " + std::to_string(line_no));
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_pipeline_config(text, path.parent_path());
}

namespace {

CapoParams load_stage(const std::string& key, const std::filesystem::path& path, const WindowSpec& spec) {
  if (path.empty()) throw ConfigError(key + " is required when the stage is enabled");
  CapoParams p;
  try {
    p = read_params(path);
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
  with_key(key, [&] {
    require_params_match(p, spec);
    return 0;
  });
  return p;
}

}  // namespace

PipelineModel load_model(const PipelineConfig& config) {
  PipelineModel model;
  if (config.iso_enabled) model.iso = load_stage("iso.params_path", config.iso_params_path, config.iso_spec());
  if (config.pcgd_repeat > 0) model.pcgd = load_stage("pcgd.params_path", config.pcgd_params_path, config.pcgd_spec_h());
  return model;
}

PipelineModel init_model(const PipelineConfig& config, std::uint64_t seed, const CapoInit& init) {
  PipelineModel model;
  if (config.iso_enabled) model.iso = make_capo_params(config.iso_spec().n(), seed, init);
  if (config.pcgd_repeat > 0) model.pcgd = make_capo_params(config.pcgd_spec_h().n(), seed + 1, init);
  return model;
}

namespace detail {

StageTrace trace_stages(const DepthGrid& upsampled, const GuidanceGrid& guide, const PipelineConfig& config,
                        const PipelineModel& model) {
  require_same_shape(upsampled, guide, "pipeline guidance");
  StageTrace trace{0.0, 1.0, {}, upsampled};
  if (!config.any_stage()) return trace;
  if (config.iso_enabled && !model.iso) throw ConfigError("isovolumetric stage enabled without parameters");
  if (config.pcgd_repeat > 0 && !model.pcgd) throw ConfigError("gradient stage enabled without parameters");

  const auto [lo, hi] = std::minmax_element(upsampled.values().begin(), upsampled.values().end());
  trace.lo = *lo;
  trace.range = *hi > *lo ? *hi - *lo : 1.0;
  std::vector<double> v(upsampled.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (upsampled[i] - trace.lo) / trace.range;
  DepthGrid x(upsampled.height(), upsampled.width(), std::move(v));

  if (config.iso_enabled) {
    trace.inputs.push_back(x);
    x = capo_apply(x, guide, *model.iso, config.iso_spec());
  }
  for (std::size_t r = 0; r < config.pcgd_repeat; ++r) {
    trace.inputs.push_back(x);
    x = pcgd_apply(x, guide, *model.pcgd, config.pcgd_spec_h(), config.pcgd_spec_v());
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * trace.range + trace.lo;
  trace.out = DepthGrid(x.height(), x.width(), std::move(out));
  return trace;
}

ModelGradients backprop_stages(const StageTrace& trace, const GuidanceGrid& guide, const PipelineConfig& config,
                               const PipelineModel& model, const DepthGrid& d_out) {
  ModelGradients grads;
  if (model.iso) grads.iso.assign(model.iso->parameter_count(), 0.0);
  if (model.pcgd) grads.pcgd.assign(model.pcgd->parameter_count(), 0.0);
  if (!config.any_stage()) return grads;

  std::vector<double> g(d_out.values().begin(), d_out.values().end());
  for (double& x : g) x *= trace.range;
  DepthGrid d_x(d_out.height(), d_out.width(), std::move(g));

  const std::size_t first_pcgd = config.iso_enabled ? 1 : 0;
  for (std::size_t r = config.pcgd_repeat; r-- > 0;) {
    PcgdGradients pg = pcgd_backward(trace.inputs[first_pcgd + r], guide, *model.pcgd, config.pcgd_spec_h(),
                                     config.pcgd_spec_v(), d_x);
    for (std::size_t k = 0; k < grads.pcgd.size(); ++k) grads.pcgd[k] += pg.d_params[k];
    d_x = std::move(pg.d_depth);
  }
  if (config.iso_enabled) {
    CapoGradients cg = capo_backward(trace.inputs[0], guide, *model.iso, config.iso_spec(), d_x);
    grads.iso = std::move(cg.d_params);
  }
  return grads;
}

}  // namespace detail

DepthGrid run_stages(const DepthGrid& upsampled, const GuidanceGrid& guide, const PipelineConfig& config,
                     const PipelineModel& model) {
  return detail::trace_stages(upsampled, guide, config, model).out;
}

DepthGrid run_pipeline(const DepthGrid& lr, const GuidanceGrid& guide, const PipelineConfig& config,
                       const PipelineModel& model) {
  const auto f = static_cast<std::size_t>(config.scale);
  if (lr.height() * f != guide.height() || lr.width() * f != guide.width()) {
    throw ShapeError("pipeline: dimension mismatch, LR " + std::to_string(lr.height()) + "x" +
                     std::to_string(lr.width()) + " x" + std::to_string(config.scale) + " vs guidance " +
                     std::to_string(guide.height()) + "x" + std::to_string(guide.width()));
  }
  return run_stages(bicubic_up(lr, config.scale, config.kernel), guide, config, model);
}

double predict_residual_rmse(const DepthGrid& out, const DepthGrid& gt) { return rmse_cm(out, gt); }

}  // namespace c2pd
