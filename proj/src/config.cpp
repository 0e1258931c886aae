#include "rare/config.hpp"

#include <cstdlib>
#include <fstream>

#include "rare/error.hpp"

namespace rare {

using nlohmann::json;

void ModelConfig::validate() const {
  if (roi.out_size < 1 || roi.sampling_ratio < 1) {
    throw Error(ErrorCode::kInvalidConfig, "roi_size and sampling_ratio must be >= 1");
  }
  if (!roi.use_backbone && !roi.use_neck) {
    throw Error(ErrorCode::kInvalidConfig, "at least one of use_backbone_roi/use_neck_roi is required");
  }
  if (box_embed_dim < 1 || object_embed_dim < 1 || scene_hidden_dim < 1 || fused_dim < 1 ||
      queue_size < 1 || classifier_hidden_dim < 1 || cbam_reduction < 1) {
    throw Error(ErrorCode::kInvalidConfig, "model dimensions must be positive");
  }
  if (num_heads < 1 || fused_dim % num_heads != 0) {
    throw Error(ErrorCode::kInvalidConfig, "fused_dim must be divisible by num_heads");
  }
}

void RunConfig::validate() const {
  detector.validate();
  model.validate();
  if (loss.margin < 0.0 || loss.gamma < 0.0 || loss.alpha < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "margin, gamma and alpha must be non-negative");
  }
  if (train.learning_rate <= 0.0 || train.batch_size < 1 || train.epochs < 0 ||
      train.momentum < 0.0 || train.momentum >= 1.0 || train.grad_clip < 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "invalid optimizer settings");
  }
  if (eval_split != "train" && eval_split != "test") {
    throw Error(ErrorCode::kInvalidConfig, "eval_split must be train or test");
  }
  if (bench_warmup < 0 || bench_measured < 1) {
    throw Error(ErrorCode::kInvalidConfig, "bench_warmup >= 0 and bench_measured >= 1 required");
  }
}

json to_json(const RunConfig& c) {
  const auto& d = c.detector;
  const auto& m = c.model;
  const auto& s = c.synthetic;
  return {
      {"input_size", d.input_size},
      {"confidence_threshold", d.confidence_threshold},
      {"allowed_classes", d.allowed_classes},
      {"n_max", d.n_max},
      {"backend", d.backend == DetectorBackend::kExternal ? "external" : "synthetic"},
      {"external_dir", d.external_dir.string()},
      {"backbone_channels", d.backbone_channels},
      {"backbone_stride", d.backbone_stride},
      {"neck_channels", d.neck_channels},
      {"neck_strides", d.neck_strides},
      {"roi_size", m.roi.out_size},
      {"sampling_ratio", m.roi.sampling_ratio},
      {"use_backbone_roi", m.roi.use_backbone},
      {"use_neck_roi", m.roi.use_neck},
      {"box_embed_dim", m.box_embed_dim},
      {"object_embed_dim", m.object_embed_dim},
      {"cbam_reduction", m.cbam_reduction},
      {"scene_hidden_dim", m.scene_hidden_dim},
      {"num_heads", m.num_heads},
      {"fused_dim", m.fused_dim},
      {"attention_residual", m.attention_residual},
      {"queue_size", m.queue_size},
      {"classifier_hidden_dim", m.classifier_hidden_dim},
      {"margin", c.loss.margin},
      {"gamma", c.loss.gamma},
      {"alpha", c.loss.alpha},
      {"iou_threshold", c.loss.iou_threshold},
      {"literal_eq5", c.loss.literal_eq5},
      {"learning_rate", c.train.learning_rate},
      {"momentum", c.train.momentum},
      {"batch_size", c.train.batch_size},
      {"epochs", c.train.epochs},
      {"seed", c.train.seed},
      {"deterministic", c.train.deterministic},
      {"grad_clip", c.train.grad_clip},
      {"synth_num_positive", s.num_positive},
      {"synth_num_negative", s.num_negative},
      {"synth_test_positive", s.test_positive},
      {"synth_test_negative", s.test_negative},
      {"synth_frames", s.frames_per_video},
      {"synth_fps", s.fps},
      {"synth_width", s.width},
      {"synth_height", s.height},
      {"synth_seed", s.seed},
      {"synth_write_frames", s.write_frames},
      {"dataset_root", c.dataset_root},
      {"output_dir", c.output_dir},
      {"checkpoint", c.checkpoint},
      {"eval_split", c.eval_split},
      {"bench_warmup", c.bench_warmup},
      {"bench_measured", c.bench_measured},
      {"demo_video", c.demo_video},
      {"demo_threshold", c.demo_threshold},
  };
}

namespace {

RunConfig parse_flat(const json& j) {
  RunConfig c;
  auto& d = c.detector;
  auto& m = c.model;
  auto& s = c.synthetic;
  d.input_size = j.at("input_size").get<int>();
  d.confidence_threshold = j.at("confidence_threshold").get<double>();
  d.allowed_classes = j.at("allowed_classes").get<std::vector<int>>();
  d.n_max = j.at("n_max").get<int>();
  const auto backend = j.at("backend").get<std::string>();
  if (backend == "synthetic") {
    d.backend = DetectorBackend::kSynthetic;
  } else if (backend == "external") {
    d.backend = DetectorBackend::kExternal;
  } else {
    throw Error(ErrorCode::kInvalidConfig, "backend must be synthetic or external");
  }
  d.external_dir = j.at("external_dir").get<std::string>();
  d.backbone_channels = j.at("backbone_channels").get<int>();
  d.backbone_stride = j.at("backbone_stride").get<int>();
  d.neck_channels = j.at("neck_channels").get<int>();
  d.neck_strides = j.at("neck_strides").get<std::vector<int>>();
  m.roi.out_size = j.at("roi_size").get<int>();
  m.roi.sampling_ratio = j.at("sampling_ratio").get<int>();
  m.roi.use_backbone = j.at("use_backbone_roi").get<bool>();
  m.roi.use_neck = j.at("use_neck_roi").get<bool>();
  m.box_embed_dim = j.at("box_embed_dim").get<int>();
  m.object_embed_dim = j.at("object_embed_dim").get<int>();
  m.cbam_reduction = j.at("cbam_reduction").get<int>();
  m.scene_hidden_dim = j.at("scene_hidden_dim").get<int>();
  m.num_heads = j.at("num_heads").get<int>();
  m.fused_dim = j.at("fused_dim").get<int>();
  m.attention_residual = j.at("attention_residual").get<bool>();
  m.queue_size = j.at("queue_size").get<int>();
  m.classifier_hidden_dim = j.at("classifier_hidden_dim").get<int>();
  c.loss.margin = j.at("margin").get<double>();
  c.loss.gamma = j.at("gamma").get<double>();
  c.loss.alpha = j.at("alpha").get<double>();
  c.loss.iou_threshold = j.at("iou_threshold").get<double>();
  c.loss.literal_eq5 = j.at("literal_eq5").get<bool>();
  c.train.learning_rate = j.at("learning_rate").get<double>();
  c.train.momentum = j.at("momentum").get<double>();
  c.train.batch_size = j.at("batch_size").get<int>();
  c.train.epochs = j.at("epochs").get<int>();
  c.train.seed = j.at("seed").get<std::uint64_t>();
  c.train.deterministic = j.at("deterministic").get<bool>();
  c.train.grad_clip = j.at("grad_clip").get<double>();
  s.num_positive = j.at("synth_num_positive").get<int>();
  s.num_negative = j.at("synth_num_negative").get<int>();
  s.test_positive = j.at("synth_test_positive").get<int>();
  s.test_negative = j.at("synth_test_negative").get<int>();
  s.frames_per_video = j.at("synth_frames").get<int>();
  s.fps = j.at("synth_fps").get<double>();
  s.width = j.at("synth_width").get<int>();
  s.height = j.at("synth_height").get<int>();
  s.seed = j.at("synth_seed").get<std::uint64_t>();
  s.write_frames = j.at("synth_write_frames").get<bool>();
  c.dataset_root = j.at("dataset_root").get<std::string>();
  c.output_dir = j.at("output_dir").get<std::string>();
  c.checkpoint = j.at("checkpoint").get<std::string>();
  c.eval_split = j.at("eval_split").get<std::string>();
  c.bench_warmup = j.at("bench_warmup").get<int>();
  c.bench_measured = j.at("bench_measured").get<int>();
  c.demo_video = j.at("demo_video").get<std::string>();
  c.demo_threshold = j.at("demo_threshold").get<double>();
  return c;
}

json merged(const RunConfig& base, const json& patch) {
  if (!patch.is_object()) throw Error(ErrorCode::kInvalidConfig, "config must be a JSON object");
  json full = to_json(base);
  for (const auto& [key, value] : patch.items()) {
    if (key == "schema_version") continue;
    if (!full.contains(key)) throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
    full[key] = value;
  }
  return full;
}

RunConfig parse_checked(const json& j) {
  try {
    RunConfig c = parse_flat(j);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("config value has the wrong type: ") + e.what());
  }
}

}  // namespace

RunConfig config_from_json(const json& j) { return parse_checked(merged(RunConfig{}, j)); }

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::kInvalidConfig, "override must look like key=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  config = parse_checked(merged(config, json{{key, value}}));
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
  RunConfig config;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kInvalidConfig, "cannot open config " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kInvalidConfig, "config is not valid JSON: " + path.string());
    config = config_from_json(j);
  }
  if (const char* env = std::getenv("RARE_OUTPUT_DIR"); env && *env) config.output_dir = env;
  for (const auto& o : overrides) apply_override(config, o);
  config.validate();
  return config;
}

}  // namespace rare
