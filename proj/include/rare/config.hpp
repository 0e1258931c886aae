#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rare/dataset.hpp"
#include "rare/detector.hpp"
#include "rare/losses.hpp"
#include "rare/object_encoder.hpp"

namespace rare {

inline constexpr int kConfigSchemaVersion = 1;

struct ModelConfig {
  RoIConfig roi;
  int box_embed_dim = 32;
  int object_embed_dim = 256;
  int cbam_reduction = 16;
  int scene_hidden_dim = 256;
  int num_heads = 4;
  int fused_dim = 256;
  bool attention_residual = true;
  int queue_size = 10;
  int classifier_hidden_dim = 128;

  void validate() const;
};

struct LossConfig {
  double margin = 0.1;
  double gamma = 10.0;
  double alpha = 0.1;  // seconds added to the previous mean anticipation time
  double iou_threshold = 0.5;
  bool literal_eq5 = false;

  RankingForm ranking_form() const {
    return literal_eq5 ? RankingForm::kLiteral : RankingForm::kHinge;
  }
};

struct TrainConfig {
  double learning_rate = 5e-2;
  double momentum = 0.9;
  int batch_size = 4;
  int epochs = 30;
  std::uint64_t seed = 0;
  bool deterministic = true;
  double grad_clip = 0.25;  // global-norm clip, 0 disables
};

/// Every tunable of the system, addressed by flat keys (see README).
struct RunConfig {
  DetectorConfig detector;
  ModelConfig model;
  LossConfig loss;
  TrainConfig train;
  SyntheticConfig synthetic;
  std::string dataset_root = "data/synthetic";
  std::string output_dir = "runs/default";
  std::string checkpoint;  // evaluate/demo/bench input
  std::string eval_split = "test";
  int bench_warmup = 50;
  int bench_measured = 500;
  std::string demo_video;  // empty: first positive video of eval_split
  double demo_threshold = 0.5;

  void validate() const;
};

nlohmann::json to_json(const RunConfig& config);

/// Unknown keys raise kInvalidConfig.
RunConfig config_from_json(const nlohmann::json& j);

/// Applies "key=value"; the value is parsed as JSON when possible, else taken
/// as a string.
void apply_override(RunConfig& config, const std::string& assignment);

/// Defaults, then the file (if non-empty), then RARE_OUTPUT_DIR, then overrides.
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides);

}  // namespace rare
