#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rare/detector.hpp"
#include "rare/geometry.hpp"

namespace rare {

inline constexpr int kDatasetSchemaVersion = 1;

enum class VideoLabel { kPositive, kNegative };
enum class Split { kTrain, kTest };

const char* to_string(Split split);

struct FrameAnnotation {
  std::vector<BoundingBox> boxes;
  std::vector<int> class_ids;        // defaults to car when absent on disk
  std::vector<double> confidences;   // defaults to 1 when absent on disk
  std::vector<int> accident_indices;  // indices into `boxes`
  bool accident_annotated = true;     // false: no accident-object labels for this frame
};

struct VideoAnnotation {
  std::string video_id;
  VideoLabel label = VideoLabel::kNegative;
  double fps = 20.0;
  int num_frames = 0;
  std::optional<int> accident_frame;  // 1-based onset, positives only
  int width = 0;
  int height = 0;
  std::uint64_t scene_seed = 0;
  std::vector<FrameAnnotation> frames;

  bool positive() const { return label == VideoLabel::kPositive; }
  /// Accident-object boxes of a 1-based frame.
  std::vector<BoundingBox> accident_boxes(int frame) const;
  /// Throws kSchemaValidation naming the video on any invariant violation.
  void validate() const;
};

nlohmann::json to_json(const VideoAnnotation& a);
/// Parses and validates. Boxes are clamped to the frame.
VideoAnnotation annotation_from_json(const nlohmann::json& j);

struct VideoRecord {
  VideoAnnotation annotation;
  std::filesystem::path frames_dir;

  std::filesystem::path frame_path(int index) const;
  /// Detector view of a 1-based frame. Pixel data stays on disk.
  Frame frame(int index) const;
};

struct Dataset {
  std::string name;  // "synthetic", "dad", "ccd", ...
  Split split = Split::kTrain;
  std::vector<VideoRecord> videos;

  int num_positive() const;
  int num_negative() const;
};

/// Reads root/<split>/{manifest.json, annotations/<id>.json, videos/<id>/}.
/// Malformed annotations raise kSchemaValidation, absent frame files
/// kMissingData. For manifests naming "dad" the published split sizes and
/// clip format are enforced.
Dataset load_dataset(const std::filesystem::path& root, Split split);

/// Writes one split in the on-disk layout (annotations, manifest and,
/// optionally, frame images).
void write_split(const std::filesystem::path& root, Split split, const std::string& name,
                 const std::vector<VideoAnnotation>& videos, bool write_frames);

struct SyntheticConfig {
  int num_positive = 24;
  int num_negative = 24;
  int test_positive = 8;
  int test_negative = 8;
  int frames_per_video = 32;
  double fps = 10.0;
  int width = 320;
  int height = 192;
  std::uint64_t seed = 7;
  bool write_frames = true;

  void validate() const;
};

/// Pure function of (config, split): rectangles moving at constant velocity.
/// Positive clips steer two vehicles onto a collision course; the onset is the
/// first frame where they overlap and both are labelled accident objects from
/// 2 s before onset. Negative clips keep every pair of boxes disjoint.
std::vector<VideoAnnotation> synthesize_videos(const SyntheticConfig& config, Split split);

/// Renders the texture/rectangles for frame `index` of a synthetic clip.
struct Image;
Image render_synthetic_frame(const VideoAnnotation& video, int index);

/// Generates both splits under `root`.
void generate_synthetic(const SyntheticConfig& config, const std::filesystem::path& root);

}  // namespace rare
