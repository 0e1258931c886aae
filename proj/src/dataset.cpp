#include "rare/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "rare/error.hpp"
#include "rare/image.hpp"
#include "rare/losses.hpp"

namespace rare {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[noreturn]] void schema_error(const std::string& video, const std::string& what) {
  throw Error(ErrorCode::kSchemaValidation, "annotation " + video + ": " + what);
}

}  // namespace

std::vector<BoundingBox> VideoAnnotation::accident_boxes(int frame) const {
  std::vector<BoundingBox> out;
  if (frame < 1 || frame > num_frames) return out;
  const auto& f = frames[frame - 1];
  for (int i : f.accident_indices) out.push_back(f.boxes[i]);
  return out;
}

void VideoAnnotation::validate() const {
  if (video_id.empty()) schema_error("<unnamed>", "video_id is empty");
  if (!(fps > 0.0)) schema_error(video_id, "fps must be positive");
  if (num_frames < 1) schema_error(video_id, "num_frames must be positive");
  if (width <= 0 || height <= 0) schema_error(video_id, "frame size must be positive");
  if (frames.size() != static_cast<std::size_t>(num_frames)) {
    schema_error(video_id, "frames list length differs from num_frames");
  }
  if (positive()) {
    if (!accident_frame) schema_error(video_id, "positive video without accident_frame");
    if (*accident_frame < 1 || *accident_frame > num_frames) {
      schema_error(video_id, "accident_frame outside [1, num_frames]");
    }
  } else if (accident_frame) {
    schema_error(video_id, "negative video with accident_frame");
  }
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& f = frames[t];
    if (f.class_ids.size() != f.boxes.size() || f.confidences.size() != f.boxes.size()) {
      schema_error(video_id, "frame " + std::to_string(t + 1) + ": per-box fields differ in length");
    }
    for (const auto& b : f.boxes) {
      if (!b.valid()) schema_error(video_id, "frame " + std::to_string(t + 1) + ": invalid box");
    }
    for (double c : f.confidences) {
      if (!(c >= 0.0 && c <= 1.0)) {
        schema_error(video_id, "frame " + std::to_string(t + 1) + ": confidence outside [0,1]");
      }
    }
    std::set<int> seen;
    for (int i : f.accident_indices) {
      if (i < 0 || i >= static_cast<int>(f.boxes.size()) || !seen.insert(i).second) {
        schema_error(video_id, "frame " + std::to_string(t + 1) + ": bad accident index");
      }
    }
    if (!positive() && !f.accident_indices.empty()) {
      schema_error(video_id, "negative video lists accident objects");
    }
  }
}

json to_json(const VideoAnnotation& a) {
  json frames = json::array();
  for (const auto& f : a.frames) {
    json boxes = json::array();
    for (const auto& b : f.boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
    frames.push_back({{"boxes", boxes},
                      {"class_ids", f.class_ids},
                      {"confidences", f.confidences},
                      {"accident_indices", f.accident_indices},
                      {"accident_annotated", f.accident_annotated}});
  }
  return {{"schema_version", kDatasetSchemaVersion},
          {"video_id", a.video_id},
          {"label", a.positive() ? "positive" : "negative"},
          {"fps", a.fps},
          {"num_frames", a.num_frames},
          {"accident_frame", a.accident_frame ? json(*a.accident_frame) : json(nullptr)},
          {"width", a.width},
          {"height", a.height},
          {"scene_seed", a.scene_seed},
          {"frames", frames}};
}

VideoAnnotation annotation_from_json(const json& j) {
  VideoAnnotation a;
  a.video_id = j.value("video_id", std::string("<unnamed>"));
  try {
    const auto label = j.at("label").get<std::string>();
    if (label == "positive") {
      a.label = VideoLabel::kPositive;
    } else if (label == "negative") {
      a.label = VideoLabel::kNegative;
    } else {
      schema_error(a.video_id, "label must be positive or negative");
    }
    a.fps = j.at("fps").get<double>();
    a.num_frames = j.at("num_frames").get<int>();
    if (j.contains("accident_frame") && !j.at("accident_frame").is_null()) {
      a.accident_frame = j.at("accident_frame").get<int>();
    }
    a.width = j.at("width").get<int>();
    a.height = j.at("height").get<int>();
    if (a.width <= 0 || a.height <= 0) schema_error(a.video_id, "frame size must be positive");
    a.scene_seed = j.contains("scene_seed") ? j.at("scene_seed").get<std::uint64_t>() : fnv1a(a.video_id);
    for (const auto& fj : j.at("frames")) {
      FrameAnnotation f;
      for (const auto& bj : fj.at("boxes")) {
        const auto c = bj.get<std::vector<double>>();
        if (c.size() != 4) schema_error(a.video_id, "box needs four coordinates");
        try {
          f.boxes.push_back(BoundingBox::clamped(c[0], c[1], c[2], c[3], a.width, a.height));
        } catch (const Error& e) {
          schema_error(a.video_id, e.what());
        }
      }
      f.class_ids = fj.contains("class_ids") ? fj.at("class_ids").get<std::vector<int>>()
                                             : std::vector<int>(f.boxes.size(), 2);
      f.confidences = fj.contains("confidences") ? fj.at("confidences").get<std::vector<double>>()
                                                 : std::vector<double>(f.boxes.size(), 1.0);
      f.accident_indices = fj.value("accident_indices", std::vector<int>{});
      f.accident_annotated = fj.value("accident_annotated", true);
      a.frames.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    schema_error(a.video_id, e.what());
  }
  a.validate();
  return a;
}

fs::path VideoRecord::frame_path(int index) const {
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%05d.png", index);
  return frames_dir / name;
}

Frame VideoRecord::frame(int index) const {
  const auto& a = annotation;
  if (index < 1 || index > a.num_frames) {
    throw Error(ErrorCode::kInvalidInput, "frame index out of range for " + a.video_id);
  }
  Frame f;
  f.width = a.width;
  f.height = a.height;
  f.video_id = a.video_id;
  f.index = index;
  f.scene_seed = mix64(a.scene_seed ^ static_cast<std::uint64_t>(index));
  f.image_path = frame_path(index);
  const auto& fa = a.frames[index - 1];
  for (std::size_t i = 0; i < fa.boxes.size(); ++i) {
    f.annotated.push_back({fa.boxes[i], fa.confidences[i], fa.class_ids[i]});
  }
  return f;
}

int Dataset::num_positive() const {
  return static_cast<int>(std::count_if(videos.begin(), videos.end(),
                                        [](const VideoRecord& v) { return v.annotation.positive(); }));
}

int Dataset::num_negative() const { return static_cast<int>(videos.size()) - num_positive(); }

namespace {

json read_json_file(const fs::path& path, ErrorCode missing) {
  std::ifstream in(path);
  if (!in) throw Error(missing, "missing file " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaValidation, "malformed JSON in " + path.string() + ": " + e.what());
  }
}

struct PublishedLayout {
  int train_positive, train_negative, test_positive, test_negative;
  int num_frames;
  double fps;
};

// Split sizes and clip format of the public benchmarks the loader knows about.
std::optional<PublishedLayout> published_layout(const std::string& name) {
  if (name == "dad") return PublishedLayout{455, 829, 165, 301, 100, 20.0};
  return std::nullopt;
}

std::vector<std::string> manifest_ids(const json& manifest, const fs::path& path) {
  try {
    return manifest.at("videos").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaValidation, "manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace

Dataset load_dataset(const fs::path& root, Split split) {
  const fs::path dir = root / to_string(split);
  const fs::path manifest_path = dir / "manifest.json";
  const json manifest = read_json_file(manifest_path, ErrorCode::kMissingData);

  Dataset ds;
  ds.split = split;
  ds.name = manifest.value("dataset", std::string("custom"));
  const auto ids = manifest_ids(manifest, manifest_path);

  const fs::path other = root / to_string(split == Split::kTrain ? Split::kTest : Split::kTrain) /
                         "manifest.json";
  if (fs::exists(other)) {
    const auto other_ids = manifest_ids(read_json_file(other, ErrorCode::kMissingData), other);
    const std::set<std::string> mine(ids.begin(), ids.end());
    for (const auto& id : other_ids) {
      if (mine.count(id)) {
        throw Error(ErrorCode::kSchemaValidation, "video " + id + " appears in both splits");
      }
    }
  }

  ds.videos.reserve(ids.size());
  for (const auto& id : ids) {
    VideoRecord rec;
    rec.annotation =
        annotation_from_json(read_json_file(dir / "annotations" / (id + ".json"), ErrorCode::kMissingData));
    if (rec.annotation.video_id != id) {
      schema_error(id, "video_id field does not match the manifest entry");
    }
    rec.frames_dir = dir / "videos" / id;
    if (!fs::is_directory(rec.frames_dir) || !fs::exists(rec.frame_path(1)) ||
        !fs::exists(rec.frame_path(rec.annotation.num_frames))) {
      throw Error(ErrorCode::kMissingData, "frames missing for video " + id);
    }
    ds.videos.push_back(std::move(rec));
  }

  if (manifest.contains("num_positive") && manifest.at("num_positive").get<int>() != ds.num_positive()) {
    throw Error(ErrorCode::kSchemaValidation, "manifest positive count disagrees with annotations");
  }
  if (manifest.contains("num_negative") && manifest.at("num_negative").get<int>() != ds.num_negative()) {
    throw Error(ErrorCode::kSchemaValidation, "manifest negative count disagrees with annotations");
  }
  if (const auto layout = published_layout(ds.name)) {
    const int pos = split == Split::kTrain ? layout->train_positive : layout->test_positive;
    const int neg = split == Split::kTrain ? layout->train_negative : layout->test_negative;
    if (ds.num_positive() != pos || ds.num_negative() != neg) {
      std::ostringstream os;
      os << ds.name << " " << to_string(split) << " split should hold " << pos << " positive and "
         << neg << " negative videos, found " << ds.num_positive() << " and " << ds.num_negative();
      throw Error(ErrorCode::kSchemaValidation, os.str());
    }
    for (const auto& v : ds.videos) {
      if (v.annotation.num_frames != layout->num_frames || v.annotation.fps != layout->fps) {
        schema_error(v.annotation.video_id, "clip format differs from the " + ds.name + " layout");
      }
    }
  }
  return ds;
}

void write_split(const fs::path& root, Split split, const std::string& name,
                 const std::vector<VideoAnnotation>& videos, bool write_frames) {
  const fs::path dir = root / to_string(split);
  fs::create_directories(dir / "annotations");
  fs::create_directories(dir / "videos");
  std::vector<std::string> ids;
  int positives = 0;
  for (const auto& v : videos) {
    v.validate();
    ids.push_back(v.video_id);
    positives += v.positive() ? 1 : 0;
    std::ofstream out(dir / "annotations" / (v.video_id + ".json"));
    if (!out) throw Error(ErrorCode::kIo, "cannot write annotation for " + v.video_id);
    out << to_json(v).dump(1) << '\n';
    const fs::path vdir = dir / "videos" / v.video_id;
    fs::create_directories(vdir);
    if (write_frames) {
      VideoRecord rec{v, vdir};
      for (int t = 1; t <= v.num_frames; ++t) write_png(rec.frame_path(t), render_synthetic_frame(v, t));
    }
  }
  const json manifest = {{"schema_version", kDatasetSchemaVersion},
                         {"dataset", name},
                         {"split", to_string(split)},
                         {"num_positive", positives},
                         {"num_negative", static_cast<int>(videos.size()) - positives},
                         {"videos", ids}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest in " + dir.string());
  out << manifest.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic clips

void SyntheticConfig::validate() const {
  if (num_positive < 1 || num_negative < 1 || test_positive < 0 || test_negative < 0 ||
      frames_per_video < 1 || !(fps > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "synthetic counts, frames and fps must be positive");
  }
  if (width < 64 || height < 64) {
    throw Error(ErrorCode::kGenerationError, "synthetic frames must be at least 64x64 to place objects");
  }
  if (frames_per_video < 8) {
    throw Error(ErrorCode::kGenerationError, "synthetic clips need at least 8 frames");
  }
}

namespace {

struct Track {
  double x1, y1, w, h;  // box at frame 1
  double vx, vy;        // pixels per frame
  int freeze_after = 0;  // positions stop changing after this frame (0 = never)
  int class_id;
  double confidence;
  bool accident = false;
};

BoundingBox track_box(const Track& tr, int t, double W, double H) {
  const int s = (tr.freeze_after > 0 ? std::min(t, tr.freeze_after) : t) - 1;
  const double x1 = tr.x1 + tr.vx * s, y1 = tr.y1 + tr.vy * s;
  const double cx1 = std::clamp(x1, 0.0, W), cy1 = std::clamp(y1, 0.0, H);
  const double cx2 = std::clamp(x1 + tr.w, 0.0, W), cy2 = std::clamp(y1 + tr.h, 0.0, H);
  return {cx1, cy1, cx2, cy2};
}

bool visible_throughout(const Track& tr, int frames, double W, double H) {
  for (int t = 1; t <= frames; ++t) {
    const auto b = track_box(tr, t, W, H);
    if (b.width() < 2.0 || b.height() < 2.0) return false;
  }
  return true;
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

int vehicle_class(Sampler& s) {
  static constexpr int kVehicles[] = {2, 2, 2, 3, 4, 5};
  return kVehicles[s.integer(0, 5)];
}

std::vector<Track> distractors(Sampler& s, double W, double H) {
  std::vector<Track> out;
  const int n = s.integer(1, 2);
  for (int k = 0; k < n; ++k) {
    Track tr{};
    tr.w = s.uniform(0.05, 0.08) * W;
    tr.h = s.uniform(0.08, 0.12) * H;
    tr.y1 = (0.04 + 0.17 * k) * H;
    tr.x1 = s.uniform(0.1, 0.8) * W;
    tr.vx = s.uniform(-0.004, 0.004) * W;
    tr.vy = 0.0;
    tr.class_id = s.integer(0, 1);
    tr.confidence = s.uniform(0.3, 1.0);
    out.push_back(tr);
  }
  return out;
}

// Two vehicles closing on a common point in one lane; they freeze on contact.
std::pair<Track, Track> collision_pair(Sampler& s, double W, double H, int onset) {
  Track a{}, b{};
  a.w = s.uniform(0.14, 0.2) * W;
  a.h = s.uniform(0.18, 0.26) * H;
  b.w = s.uniform(0.14, 0.2) * W;
  b.h = s.uniform(0.18, 0.26) * H;
  const double meet_x = s.uniform(0.4, 0.6) * W;
  const double lane_y = s.uniform(0.6, 0.72) * H;
  const double overlap = 1.0;
  const double steps = onset - 1;
  const double travel_a = s.uniform(0.1, 0.18) * W, travel_b = s.uniform(0.1, 0.18) * W;
  a.vx = travel_a / steps;
  b.vx = -travel_b / steps;
  const double dy_a = s.uniform(-0.04, 0.04) * H, dy_b = s.uniform(-0.04, 0.04) * H;
  a.vy = -dy_a / steps;
  b.vy = -dy_b / steps;
  // box positions at the onset frame, then rewound to frame 1
  const double ax1_onset = meet_x + overlap / 2 - a.w, bx1_onset = meet_x - overlap / 2;
  a.x1 = ax1_onset - a.vx * steps;
  b.x1 = bx1_onset - b.vx * steps;
  a.y1 = lane_y - a.h / 2 + dy_a;
  b.y1 = lane_y - b.h / 2 + dy_b;
  a.freeze_after = b.freeze_after = onset;
  a.class_id = vehicle_class(s);
  b.class_id = vehicle_class(s);
  a.confidence = s.uniform(0.3, 1.0);
  b.confidence = s.uniform(0.3, 1.0);
  a.accident = b.accident = true;
  return {a, b};
}

// Two vehicles that never touch: separate lanes, or one lane at equal speed.
std::pair<Track, Track> safe_pair(Sampler& s, double W, double H) {
  Track a{}, b{};
  a.w = s.uniform(0.14, 0.2) * W;
  b.w = s.uniform(0.14, 0.2) * W;
  a.class_id = vehicle_class(s);
  b.class_id = vehicle_class(s);
  a.confidence = s.uniform(0.3, 1.0);
  b.confidence = s.uniform(0.3, 1.0);
  if (s.coin()) {
    a.h = s.uniform(0.18, 0.24) * H;
    b.h = s.uniform(0.18, 0.24) * H;
    a.y1 = 0.40 * H;
    b.y1 = 0.40 * H + a.h + s.uniform(0.02, 0.06) * H;
    a.x1 = s.uniform(0.05, 0.3) * W;
    b.x1 = s.uniform(0.5, 0.75) * W;
    a.vx = s.uniform(0.003, 0.006) * W;
    b.vx = -s.uniform(0.003, 0.006) * W;
  } else {
    a.h = s.uniform(0.18, 0.26) * H;
    b.h = s.uniform(0.18, 0.26) * H;
    const double lane_y = s.uniform(0.6, 0.72) * H;
    a.y1 = lane_y - a.h / 2;
    b.y1 = lane_y - b.h / 2;
    a.x1 = s.uniform(0.02, 0.15) * W;
    b.x1 = a.x1 + a.w + s.uniform(0.1, 0.25) * W;
    a.vx = b.vx = s.uniform(-0.003, 0.006) * W;
  }
  a.vy = b.vy = 0.0;
  return {a, b};
}

VideoAnnotation assemble(const std::string& id, bool positive, const SyntheticConfig& cfg,
                         std::vector<Track> tracks, Sampler& s) {
  std::shuffle(tracks.begin(), tracks.end(), s.engine());
  const double W = cfg.width, H = cfg.height;
  VideoAnnotation v;
  v.video_id = id;
  v.label = positive ? VideoLabel::kPositive : VideoLabel::kNegative;
  v.fps = cfg.fps;
  v.num_frames = cfg.frames_per_video;
  v.width = cfg.width;
  v.height = cfg.height;
  v.scene_seed = s.engine()();

  std::vector<int> accident;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (tracks[i].accident) accident.push_back(static_cast<int>(i));
  }
  if (positive) {
    const auto& a = tracks[accident[0]];
    const auto& b = tracks[accident[1]];
    for (int t = 1; t <= v.num_frames; ++t) {
      if (iou(track_box(a, t, W, H), track_box(b, t, W, H)) > 0.0) {
        v.accident_frame = t;
        break;
      }
    }
    if (!v.accident_frame || *v.accident_frame < 2) {
      throw Error(ErrorCode::kGenerationError, "could not place a collision course in " + id);
    }
  }
  const int label_from =
      positive ? std::max(1, *v.accident_frame - static_cast<int>(std::lround(2.0 * cfg.fps))) : 0;

  for (int t = 1; t <= v.num_frames; ++t) {
    FrameAnnotation f;
    for (const auto& tr : tracks) {
      f.boxes.push_back(track_box(tr, t, W, H));
      f.class_ids.push_back(tr.class_id);
      const double jitter = 0.05 * std::sin(0.7 * t + tr.x1);
      f.confidences.push_back(std::clamp(tr.confidence + jitter, 0.11, 1.0));
    }
    if (positive && t >= label_from) f.accident_indices = accident;
    v.frames.push_back(std::move(f));
  }
  v.validate();
  return v;
}

bool pairwise_disjoint(const VideoAnnotation& v) {
  for (const auto& f : v.frames) {
    for (std::size_t i = 0; i < f.boxes.size(); ++i) {
      for (std::size_t j = i + 1; j < f.boxes.size(); ++j) {
        if (iou(f.boxes[i], f.boxes[j]) > 0.0) return false;
      }
    }
  }
  return true;
}

}  // namespace

std::vector<VideoAnnotation> synthesize_videos(const SyntheticConfig& cfg, Split split) {
  cfg.validate();
  const double W = cfg.width, H = cfg.height;
  const int positives = split == Split::kTrain ? cfg.num_positive : cfg.test_positive;
  const int negatives = split == Split::kTrain ? cfg.num_negative : cfg.test_negative;
  Sampler s(mix64(cfg.seed * 2 + (split == Split::kTrain ? 0 : 1)));
  const int T = cfg.frames_per_video;

  std::vector<VideoAnnotation> videos;
  const auto make_id = [&](bool pos, int i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "syn_%s_%s_%03d", to_string(split), pos ? "pos" : "neg", i);
    return std::string(buf);
  };
  constexpr int kAttempts = 64;
  // interleave so that fixed-order batches mix both labels
  for (int i = 0; i < std::max(positives, negatives); ++i) {
    for (const bool pos : {true, false}) {
      if (i >= (pos ? positives : negatives)) continue;
      const auto id = make_id(pos, i);
      bool placed = false;
      for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
        std::vector<Track> tracks = distractors(s, W, H);
        if (pos) {
          const int onset = s.integer(static_cast<int>(0.6 * T), static_cast<int>(0.85 * T));
          auto [a, b] = collision_pair(s, W, H, std::max(onset, 3));
          tracks.push_back(a);
          tracks.push_back(b);
        } else {
          auto [a, b] = safe_pair(s, W, H);
          tracks.push_back(a);
          tracks.push_back(b);
        }
        bool visible = true;
        for (const auto& tr : tracks) visible = visible && visible_throughout(tr, T, W, H);
        if (!visible) continue;
        try {
          auto v = assemble(id, pos, cfg, tracks, s);
          if (!pos && !pairwise_disjoint(v)) continue;
          videos.push_back(std::move(v));
          placed = true;
        } catch (const Error&) {
          // resample
        }
      }
      if (!placed) throw Error(ErrorCode::kGenerationError, "could not lay out video " + id);
    }
  }
  return videos;
}

Image render_synthetic_frame(const VideoAnnotation& video, int index) {
  Image img(video.width, video.height);
  const std::uint64_t seed = video.scene_seed;
  for (int y = 0; y < video.height; ++y) {
    const double road = static_cast<double>(y) / video.height;
    for (int x = 0; x < video.width; ++x) {
      const auto h = mix64(seed ^ (static_cast<std::uint64_t>(y) << 20) ^ static_cast<std::uint64_t>(x));
      const int n = static_cast<int>(h & 15) - 8;
      const int base = road < 0.38 ? 150 : 90;
      const auto v = static_cast<std::uint8_t>(std::clamp(base + n, 0, 255));
      img.set(x, y, {v, v, static_cast<std::uint8_t>(std::clamp(base + n + 10, 0, 255))});
    }
  }
  static constexpr Rgb kClassColors[] = {{200, 60, 160}, {60, 160, 200}, {220, 220, 40},
                                         {200, 100, 40}, {40, 120, 220}, {160, 160, 160}};
  const auto& f = video.frames.at(index - 1);
  for (std::size_t i = 0; i < f.boxes.size(); ++i) {
    const auto& b = f.boxes[i];
    const Rgb c = kClassColors[std::clamp(f.class_ids[i], 0, 5)];
    fill_rect(img, static_cast<int>(b.x1), static_cast<int>(b.y1), static_cast<int>(b.x2) - 1,
              static_cast<int>(b.y2) - 1, c);
    draw_rect(img, static_cast<int>(b.x1), static_cast<int>(b.y1), static_cast<int>(b.x2) - 1,
              static_cast<int>(b.y2) - 1, {20, 20, 20});
  }
  return img;
}

void generate_synthetic(const SyntheticConfig& config, const fs::path& root) {
  config.validate();
  write_split(root, Split::kTrain, "synthetic", synthesize_videos(config, Split::kTrain),
              config.write_frames);
  if (config.test_positive + config.test_negative > 0) {
    write_split(root, Split::kTest, "synthetic", synthesize_videos(config, Split::kTest),
                config.write_frames);
  }
}

}  // namespace rare
