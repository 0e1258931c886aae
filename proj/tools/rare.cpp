// rare: train | evaluate | bench | demo | generate-data
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rare/checkpoint.hpp"
#include "rare/config.hpp"
#include "rare/dataset.hpp"
#include "rare/error.hpp"
#include "rare/image.hpp"
#include "rare/metrics.hpp"
#include "rare/model.hpp"
#include "rare/render.hpp"
#include "rare/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOutputSchemaVersion = 1;

json artifact(const rare::RunConfig& config, const std::string& kind) {
  return {{"schema_version", kOutputSchemaVersion}, {"kind", kind}, {"config", rare::to_json(config)}};
}

void emit(const fs::path& path, const json& doc) {
  rare::write_file_atomic(path, doc.dump(2) + "\n");
  std::cout << doc.dump() << "\n";
}

rare::Split split_of(const std::string& name) {
  if (name == "train") return rare::Split::kTrain;
  if (name == "test") return rare::Split::kTest;
  throw rare::Error(rare::ErrorCode::kInvalidConfig, "eval_split must be train or test");
}

fs::path checkpoint_path(const rare::RunConfig& config) {
  return config.checkpoint.empty() ? fs::path(config.output_dir) / "checkpoint.bin"
                                   : fs::path(config.checkpoint);
}

// Trained weights and their architecture; detector settings that do not
// change tensor shapes (backend, thresholds, dump dir) come from the run.
rare::Model load_model(const rare::RunConfig& config) {
  auto ckpt = rare::load_checkpoint(checkpoint_path(config));
  rare::DetectorConfig det = config.detector;
  const auto& trained = ckpt.model.detector_config();
  det.input_size = trained.input_size;
  det.backbone_channels = trained.backbone_channels;
  det.backbone_stride = trained.backbone_stride;
  det.neck_channels = trained.neck_channels;
  det.neck_strides = trained.neck_strides;
  rare::Model model(ckpt.model.config(), det);
  model.params = ckpt.model.params;
  return model;
}

int cmd_generate(const rare::RunConfig& config) {
  rare::generate_synthetic(config.synthetic, config.dataset_root);
  auto doc = artifact(config, "generate-data");
  doc["dataset_root"] = config.dataset_root;
  doc["train_videos"] = config.synthetic.num_positive + config.synthetic.num_negative;
  doc["test_videos"] = config.synthetic.test_positive + config.synthetic.test_negative;
  std::cout << doc.dump() << "\n";
  return 0;
}

int cmd_train(const rare::RunConfig& config) {
  const auto data = rare::load_dataset(config.dataset_root, rare::Split::kTrain);
  auto detector = rare::make_detector(config.detector);
  rare::Model model(config.model, config.detector);
  model.init(config.train.seed);

  const fs::path out = config.output_dir;
  std::vector<rare::EpochLog> history;
  rare::train(model, *detector, data, config, [&](const rare::EpochLog& log) {
    history.push_back(log);
    auto doc = artifact(config, "epoch");
    doc.update(rare::to_json(log));
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%03d.json", log.epoch);
    rare::write_file_atomic(out / "logs" / name, doc.dump(2) + "\n");
    rare::save_checkpoint(out / "checkpoint.bin", model, config, history);
    std::cerr << "epoch " << log.epoch << " loss " << log.loss.total << " ap " << log.train_ap
              << " rank " << log.attention_rank_rate << "\n";
  });

  auto doc = artifact(config, "train");
  doc["checkpoint"] = (out / "checkpoint.bin").string();
  doc["epochs"] = json::array();
  for (const auto& h : history) doc["epochs"].push_back(rare::to_json(h));
  emit(out / "train_summary.json", doc);
  return 0;
}

int cmd_evaluate(const rare::RunConfig& config) {
  const auto model = load_model(config);
  auto detector = rare::make_detector(model.detector_config());
  const auto data = rare::load_dataset(config.dataset_root, split_of(config.eval_split));
  const auto result = rare::evaluate(model, *detector, data, config.loss);

  auto doc = artifact(config, "metrics");
  doc.update(rare::to_json(result));
  doc["schema_version"] = kOutputSchemaVersion;
  doc["split"] = config.eval_split;
  doc["checkpoint"] = checkpoint_path(config).string();
  emit(fs::path(config.output_dir) / ("metrics_" + config.eval_split + ".json"), doc);
  return 0;
}

// Frames of the first video of the eval split; falls back to an in-memory
// synthetic clip when no dataset is on disk (the synthetic backend never
// reads pixels).
std::vector<rare::Frame> bench_frames(const rare::RunConfig& config) {
  rare::VideoRecord video;
  if (fs::exists(fs::path(config.dataset_root) / config.eval_split / "manifest.json")) {
    video = rare::load_dataset(config.dataset_root, split_of(config.eval_split)).videos.at(0);
  } else {
    video.annotation = rare::synthesize_videos(config.synthetic, rare::Split::kTest).at(0);
  }
  std::vector<rare::Frame> frames;
  for (int t = 1; t <= video.annotation.num_frames; ++t) frames.push_back(video.frame(t));
  return frames;
}

int cmd_bench(const rare::RunConfig& config) {
  rare::Model model(config.model, config.detector);
  if (fs::exists(checkpoint_path(config))) {
    model = load_model(config);
  } else {
    model.init(config.train.seed);
  }
  auto detector = rare::make_detector(model.detector_config());
  const auto frames = bench_frames(config);
  rare::InferenceSession session(model, *detector);
  const auto pipeline = [&](std::size_t i) {
    if (i == 0) session.reset();
    session.step(frames[i]);
  };
  auto report = rare::benchmark(pipeline, frames.size(), config.bench_warmup, config.bench_measured);
  report.hardware = rare::describe_hardware();
  report.config = rare::to_json(config).dump();

  auto doc = artifact(config, "latency");
  doc.update(rare::to_json(report));
  doc["schema_version"] = kOutputSchemaVersion;
  emit(fs::path(config.output_dir) / "latency.json", doc);
  return 0;
}

int cmd_demo(const rare::RunConfig& config) {
  const auto model = load_model(config);
  auto detector = rare::make_detector(model.detector_config());
  const auto data = rare::load_dataset(config.dataset_root, split_of(config.eval_split));

  const rare::VideoRecord* video = nullptr;
  for (const auto& v : data.videos) {
    const bool match = config.demo_video.empty() ? v.annotation.positive()
                                                 : v.annotation.video_id == config.demo_video;
    if (match) {
      video = &v;
      break;
    }
  }
  if (!video) {
    throw rare::Error(rare::ErrorCode::kMissingData,
                      config.demo_video.empty() ? "no positive video in split " + config.eval_split
                                                : "video " + config.demo_video + " not found");
  }

  const auto& a = video->annotation;
  const fs::path dir = fs::path(config.output_dir) / "demo" / a.video_id;
  fs::create_directories(dir);
  rare::InferenceSession session(model, *detector);
  std::vector<double> scores;
  json frames = json::array();
  for (int t = 1; t <= a.num_frames; ++t) {
    const auto frame = video->frame(t);
    const auto r = session.step(frame);
    scores.push_back(r.risk);
    auto image = rare::read_png(frame.image_path);
    rare::draw_attention_overlay(image, r.detections, r.attention, detector->config().input_size,
                                 detector->config().input_size);
    char name[32];
    std::snprintf(name, sizeof name, "overlay_%05d.png", t);
    rare::write_png(dir / name, image);
    frames.push_back({{"frame", t}, {"risk", r.risk}, {"attention", r.attention}});
  }
  const auto curve = rare::render_risk_curve(scores, a.accident_frame, config.demo_threshold);
  rare::write_png(dir / "risk_curve.png", curve);

  auto doc = artifact(config, "demo");
  doc["video_id"] = a.video_id;
  doc["accident_frame"] = a.accident_frame ? json(*a.accident_frame) : json(nullptr);
  doc["fire_frame"] = [&] {
    const auto f = rare::fire_time(scores, config.demo_threshold);
    return f ? json(*f) : json(nullptr);
  }();
  doc["frames"] = frames;
  emit(dir / "demo.json", doc);
  return 0;
}

int fail(const std::string& code, const std::string& message, int status) {
  const json err = {{"schema_version", kOutputSchemaVersion},
                    {"error", {{"code", code}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic accident anticipation: train, evaluate, benchmark, render"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  const std::vector<std::string> commands = {"train", "evaluate", "bench", "demo", "generate-data"};
  for (const auto& name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--set", overrides, "key=value override (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 64);
  }

  try {
    const auto config = rare::load_run_config(config_path, overrides);
    const auto command = app.get_subcommands().front()->get_name();
    if (command == "generate-data") return cmd_generate(config);
    if (command == "train") return cmd_train(config);
    if (command == "evaluate") return cmd_evaluate(config);
    if (command == "bench") return cmd_bench(config);
    return cmd_demo(config);
  } catch (const rare::Error& e) {
    return fail(rare::to_string(e.code()), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
