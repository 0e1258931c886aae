#include "rare/detector.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rare/error.hpp"

namespace rare {

FeatureShapeSpec DetectorConfig::shapes() const {
  FeatureShapeSpec s;
  s.input_width = input_size;
  s.input_height = input_size;
  s.backbone_channels = backbone_channels;
  s.backbone_stride = backbone_stride;
  s.neck_channels = neck_channels;
  s.neck_strides = neck_strides;
  return s;
}

void DetectorConfig::validate() const {
  if (input_size <= 0) throw Error(ErrorCode::kInvalidConfig, "input_size must be positive");
  if (confidence_threshold < 0.0 || confidence_threshold > 1.0) {
    throw Error(ErrorCode::kInvalidConfig, "confidence_threshold must lie in [0,1]");
  }
  if (n_max < 0) throw Error(ErrorCode::kInvalidConfig, "n_max must be non-negative");
  for (int c : allowed_classes) {
    if (c < 0 || c >= static_cast<int>(kClassNames.size())) {
      throw Error(ErrorCode::kInvalidConfig, "allowed_classes holds an unknown class id");
    }
  }
  shapes().validate();
}

std::vector<Detection> filter_detections(std::vector<Detection> candidates,
                                         const DetectorConfig& config) {
  std::vector<Detection> kept;
  kept.reserve(candidates.size());
  for (auto& d : candidates) {
    if (!(d.confidence > config.confidence_threshold)) continue;
    if (std::find(config.allowed_classes.begin(), config.allowed_classes.end(), d.class_id) ==
        config.allowed_classes.end()) {
      continue;
    }
    kept.push_back(d);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Detection& a, const Detection& b) {
    return a.confidence > b.confidence;
  });
  if (kept.size() > static_cast<std::size_t>(config.n_max)) kept.resize(config.n_max);
  return kept;
}

namespace {

void check_frame(const Frame& frame) {
  if (frame.width <= 0 || frame.height <= 0) {
    std::ostringstream os;
    os << "frame " << frame.video_id << "#" << frame.index << " has non-positive size "
       << frame.width << "x" << frame.height;
    throw Error(ErrorCode::kInvalidInput, os.str());
  }
}

}  // namespace

SyntheticDetector::SyntheticDetector(DetectorConfig config, Execution exec)
    : config_(std::move(config)), exec_(exec) {
  config_.validate();
}

DetectionOutput SyntheticDetector::detect(const Frame& frame) const {
  check_frame(frame);
  const double size = config_.input_size;
  const double sx = size / frame.width;
  const double sy = size / frame.height;

  std::vector<Detection> candidates;
  std::vector<BoundingBox> scene_boxes;
  candidates.reserve(frame.annotated.size());
  for (const auto& a : frame.annotated) {
    const auto s = a.box.scaled(sx, sy);
    Detection d = a;
    d.box = BoundingBox::clamped(s.x1, s.y1, s.x2, s.y2, size, size);
    scene_boxes.push_back(d.box);
    candidates.push_back(d);
  }

  DetectionOutput out;
  out.input_width = config_.input_size;
  out.input_height = config_.input_size;
  out.detections = filter_detections(std::move(candidates), config_);
  auto features = synthesize_features(scene_boxes, frame.scene_seed, config_.shapes(), exec_);
  out.backbone = std::move(features.backbone);
  out.neck = std::move(features.neck);
  return out;
}

ExternalDetector::ExternalDetector(DetectorConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.external_dir.empty() || !std::filesystem::is_directory(config_.external_dir)) {
    throw Error(ErrorCode::kBackendUnavailable,
                "external detector dump directory not found: " + config_.external_dir.string());
  }
}

namespace {

FeatureMap read_dumped_map(const nlohmann::json& j, const std::filesystem::path& dir) {
  FeatureMap map(j.at("channels").get<int>(), j.at("height").get<int>(), j.at("width").get<int>(),
                 j.at("stride").get<int>());
  const auto file = dir / j.at("file").get<std::string>();
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingData, "missing feature dump " + file.string());
  std::vector<float> raw(map.values.size());
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(raw.size() * sizeof(float))) {
    throw Error(ErrorCode::kMissingData, "truncated feature dump " + file.string());
  }
  std::copy(raw.begin(), raw.end(), map.values.begin());
  map.validate();
  return map;
}

}  // namespace

DetectionOutput ExternalDetector::detect(const Frame& frame) const {
  check_frame(frame);
  const auto dir = config_.external_dir / frame.video_id;
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%05d.json", frame.index);
  std::ifstream in(dir / name);
  if (!in) {
    throw Error(ErrorCode::kMissingData, "no detector dump for " + (dir / name).string());
  }
  nlohmann::json j;
  try {
    in >> j;
    DetectionOutput out;
    out.input_width = config_.input_size;
    out.input_height = config_.input_size;
    std::vector<Detection> candidates;
    const double size = config_.input_size;
    for (const auto& d : j.at("detections")) {
      const auto b = d.at("box").get<std::vector<double>>();
      if (b.size() != 4) throw Error(ErrorCode::kInvalidInput, "box must have 4 coordinates");
      candidates.push_back({BoundingBox::clamped(b[0], b[1], b[2], b[3], size, size),
                            d.at("confidence").get<double>(), d.at("class_id").get<int>()});
    }
    out.detections = filter_detections(std::move(candidates), config_);
    out.backbone = read_dumped_map(j.at("backbone"), dir);
    for (const auto& n : j.at("neck")) out.neck.push_back(read_dumped_map(n, dir));
    if (out.neck.empty()) throw Error(ErrorCode::kInvalidInput, "dump lists no neck maps");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("malformed detector dump: ") + e.what());
  }
}

std::unique_ptr<Detector> make_detector(const DetectorConfig& config) {
  if (config.backend == DetectorBackend::kExternal) {
    return std::make_unique<ExternalDetector>(config);
  }
  return std::make_unique<SyntheticDetector>(config);
}

}  // namespace rare
