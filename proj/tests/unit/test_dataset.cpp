#include <doctest.h>

#include <fstream>
#include <sstream>

#include "rare/dataset.hpp"
#include "rare/image.hpp"
#include "rare/losses.hpp"
#include "test_util.hpp"

using namespace rare;
using rare::testing::TempDir;
namespace fs = std::filesystem;

namespace {

SyntheticConfig small_config() {
  SyntheticConfig c;
  c.num_positive = 6;
  c.num_negative = 6;
  c.test_positive = 3;
  c.test_negative = 3;
  c.frames_per_video = 24;
  c.write_frames = false;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void touch(const fs::path& p) { std::ofstream(p) << ""; }

VideoAnnotation bare_video(const std::string& id, bool positive, int frames, double fps) {
  VideoAnnotation a;
  a.video_id = id;
  a.label = positive ? VideoLabel::kPositive : VideoLabel::kNegative;
  a.fps = fps;
  a.num_frames = frames;
  a.width = 640;
  a.height = 360;
  a.frames.resize(frames);
  if (positive) a.accident_frame = frames - 10;
  return a;
}

}  // namespace

TEST_CASE("generation is byte-identical for the same seed") {
  TempDir a("gen_a"), b("gen_b");
  auto cfg = small_config();
  generate_synthetic(cfg, a.path());
  generate_synthetic(cfg, b.path());
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a.path());
    CHECK(slurp(e.path()) == slurp(b.path() / rel));
    ++files;
  }
  CHECK(files == 2 * 12 / 2 + 2 * 6 / 2 + 2);  // annotations + manifests
}

TEST_CASE("positive onsets and disjoint negatives") {
  for (std::uint64_t seed : {1u, 7u, 99u}) {
    auto cfg = small_config();
    cfg.seed = seed;
    for (Split split : {Split::kTrain, Split::kTest}) {
      for (const auto& v : synthesize_videos(cfg, split)) {
        v.validate();
        if (v.positive()) {
          const int ta = *v.accident_frame;
          REQUIRE(ta >= 2);
          const auto& idx = v.frames[ta - 1].accident_indices;
          REQUIRE(idx.size() == 2);
          const auto& at = v.frames[ta - 1].boxes;
          const auto& before = v.frames[ta - 2].boxes;
          CHECK(iou(at[idx[0]], at[idx[1]]) > 0.0);
          CHECK(iou(before[idx[0]], before[idx[1]]) == 0.0);
        } else {
          for (const auto& f : v.frames) {
            CHECK(f.accident_indices.empty());
            for (std::size_t i = 0; i < f.boxes.size(); ++i) {
              for (std::size_t j = i + 1; j < f.boxes.size(); ++j) {
                CHECK(iou(f.boxes[i], f.boxes[j]) == 0.0);
              }
            }
          }
        }
      }
    }
  }
}

TEST_CASE("splits are disjoint and balanced as configured") {
  auto cfg = small_config();
  const auto train = synthesize_videos(cfg, Split::kTrain);
  const auto test = synthesize_videos(cfg, Split::kTest);
  CHECK(train.size() == 12);
  CHECK(test.size() == 6);
  for (const auto& a : train) {
    for (const auto& b : test) CHECK(a.video_id != b.video_id);
  }
}

TEST_CASE("written split loads back") {
  TempDir dir("load");
  auto cfg = small_config();
  cfg.write_frames = true;
  cfg.num_positive = cfg.num_negative = 2;
  cfg.test_positive = cfg.test_negative = 1;
  cfg.frames_per_video = 10;
  generate_synthetic(cfg, dir.path());
  const auto ds = load_dataset(dir.path(), Split::kTrain);
  CHECK(ds.name == "synthetic");
  CHECK(ds.num_positive() == 2);
  CHECK(ds.num_negative() == 2);
  const auto expected = synthesize_videos(cfg, Split::kTrain);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(to_json(ds.videos[i].annotation) == to_json(expected[i]));
  }
  const auto img = read_png(ds.videos[0].frame_path(3));
  CHECK(img.width == cfg.width);
  CHECK(img.height == cfg.height);
  const Frame f = ds.videos[0].frame(3);
  CHECK(f.width == cfg.width);
  CHECK(f.index == 3);
}

TEST_CASE("annotation round trip and validation") {
  auto v = synthesize_videos(small_config(), Split::kTrain).front();
  CHECK(to_json(annotation_from_json(to_json(v))) == to_json(v));

  auto j = to_json(v);
  j["accident_frame"] = v.num_frames + 1;
  j["label"] = "positive";
  CHECK_ERROR_CODE(annotation_from_json(j), ErrorCode::kSchemaValidation);
  j = to_json(v);
  j.erase("num_frames");
  CHECK_ERROR_CODE(annotation_from_json(j), ErrorCode::kSchemaValidation);
  try {
    annotation_from_json(j);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(v.video_id) != std::string::npos);
  }
}

TEST_CASE("missing frames and files") {
  TempDir dir("missing");
  auto cfg = small_config();
  cfg.num_positive = cfg.num_negative = 1;
  cfg.test_positive = cfg.test_negative = 1;
  cfg.frames_per_video = 8;
  generate_synthetic(cfg, dir.path());  // annotations only
  CHECK_ERROR_CODE(load_dataset(dir.path(), Split::kTrain), ErrorCode::kMissingData);
  CHECK_ERROR_CODE(load_dataset(dir.path() / "nowhere", Split::kTrain), ErrorCode::kMissingData);

  std::ofstream(dir.path() / "train" / "manifest.json") << "{ not json";
  CHECK_ERROR_CODE(load_dataset(dir.path(), Split::kTrain), ErrorCode::kSchemaValidation);
}

TEST_CASE("a video listed in both splits is rejected") {
  TempDir dir("overlap");
  const std::vector<VideoAnnotation> vids{bare_video("shared", false, 12, 10)};
  write_split(dir.path(), Split::kTrain, "custom", vids, false);
  write_split(dir.path(), Split::kTest, "custom", vids, false);
  for (const char* s : {"train", "test"}) {
    touch(dir.path() / s / "videos" / "shared" / "frame_00001.png");
    touch(dir.path() / s / "videos" / "shared" / "frame_00012.png");
  }
  CHECK_ERROR_CODE(load_dataset(dir.path(), Split::kTrain), ErrorCode::kSchemaValidation);
}

TEST_CASE("dad layout counts") {
  TempDir dir("dad");
  std::vector<VideoAnnotation> vids;
  for (int i = 0; i < 455; ++i) vids.push_back(bare_video("pos_" + std::to_string(i), true, 100, 20));
  for (int i = 0; i < 829; ++i) vids.push_back(bare_video("neg_" + std::to_string(i), false, 100, 20));
  write_split(dir.path(), Split::kTrain, "dad", vids, false);
  for (const auto& v : vids) {
    const auto vd = dir.path() / "train" / "videos" / v.video_id;
    touch(vd / "frame_00001.png");
    touch(vd / "frame_00100.png");
  }
  const auto ds = load_dataset(dir.path(), Split::kTrain);
  CHECK(ds.num_positive() == 455);
  CHECK(ds.num_negative() == 829);
  CHECK(ds.videos.front().annotation.num_frames == 100);
  CHECK(ds.videos.front().annotation.fps == 20.0);

  // one video short: the published split size no longer holds
  TempDir short_dir("dad_short");
  vids.pop_back();
  write_split(short_dir.path(), Split::kTrain, "dad", vids, false);
  for (const auto& v : vids) {
    const auto vd = short_dir.path() / "train" / "videos" / v.video_id;
    touch(vd / "frame_00001.png");
    touch(vd / "frame_00100.png");
  }
  CHECK_ERROR_CODE(load_dataset(short_dir.path(), Split::kTrain), ErrorCode::kSchemaValidation);
}

TEST_CASE("generator rejects frames too small for objects") {
  auto cfg = small_config();
  cfg.width = 40;
  cfg.height = 30;
  CHECK_ERROR_CODE(synthesize_videos(cfg, Split::kTrain), ErrorCode::kGenerationError);
  cfg = small_config();
  cfg.frames_per_video = 0;
  CHECK_ERROR_CODE(synthesize_videos(cfg, Split::kTrain), ErrorCode::kInvalidConfig);
}
