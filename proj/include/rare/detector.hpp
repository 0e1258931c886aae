#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rare/features.hpp"
#include "rare/geometry.hpp"

namespace rare {

/// Road-user classes kept from the detector, in id order 0..5.
inline constexpr std::array<std::string_view, 6> kClassNames = {
    "person", "bicycle", "car", "motorcycle", "bus", "truck"};

struct Detection {
  BoundingBox box;
  double confidence = 0.0;
  int class_id = 0;
};

struct DetectionOutput {
  std::vector<Detection> detections;  // descending confidence
  FeatureMap backbone;
  std::vector<FeatureMap> neck;
  int input_width = 0;
  int input_height = 0;
};

enum class DetectorBackend { kSynthetic, kExternal };

struct DetectorConfig {
  int input_size = 640;
  double confidence_threshold = 0.1;
  std::vector<int> allowed_classes = {0, 1, 2, 3, 4, 5};
  int n_max = 20;
  DetectorBackend backend = DetectorBackend::kSynthetic;
  std::filesystem::path external_dir;  // dump directory for the external backend
  int backbone_channels = 256;
  int backbone_stride = 32;
  int neck_channels = 256;
  std::vector<int> neck_strides = {8, 16, 32};

  FeatureShapeSpec shapes() const;
  void validate() const;
};

/// One video frame as seen by the detector.
///
/// `annotated` carries the ground-truth objects (frame pixel coordinates) that
/// the synthetic backend echoes; the external backend looks frames up by
/// (video_id, index) instead.
struct Frame {
  int width = 0;
  int height = 0;
  std::string video_id;
  int index = 1;  // 1-based
  std::uint64_t scene_seed = 0;
  std::vector<Detection> annotated;
  std::filesystem::path image_path;
};

class Detector {
 public:
  virtual ~Detector() = default;
  virtual DetectionOutput detect(const Frame& frame) const = 0;
  virtual const DetectorConfig& config() const = 0;
};

/// Ground-truth echo with fabricated features. Pure: output depends only on
/// the frame and the config.
class SyntheticDetector final : public Detector {
 public:
  explicit SyntheticDetector(DetectorConfig config, Execution exec = Execution::kParallel);
  DetectionOutput detect(const Frame& frame) const override;
  const DetectorConfig& config() const override { return config_; }

 private:
  DetectorConfig config_;
  Execution exec_;
};

/// Reads detections and feature maps dumped by an external pretrained
/// detector:
///   <external_dir>/<video_id>/frame_%05d.json
///     {"detections":[{"box":[x1,y1,x2,y2],"confidence":c,"class_id":k}],
///      "backbone":{"channels","height","width","stride","file"},
///      "neck":[{...same...}]}
/// where "file" names a raw little-endian float32 array next to the JSON.
/// Boxes are in detector-input coordinates.
class ExternalDetector final : public Detector {
 public:
  /// Throws kBackendUnavailable if the dump directory does not exist.
  explicit ExternalDetector(DetectorConfig config);
  DetectionOutput detect(const Frame& frame) const override;
  const DetectorConfig& config() const override { return config_; }

 private:
  DetectorConfig config_;
};

std::unique_ptr<Detector> make_detector(const DetectorConfig& config);

/// Applies the confidence threshold (strict), class filter, descending
/// confidence order and the n_max cap.
std::vector<Detection> filter_detections(std::vector<Detection> candidates,
                                         const DetectorConfig& config);

}  // namespace rare
