#pragma once

#include <cstdint>
#include <vector>

#include "rare/anticipation.hpp"
#include "rare/config.hpp"
#include "rare/detector.hpp"
#include "rare/fusion.hpp"
#include "rare/object_encoder.hpp"
#include "rare/scene_encoder.hpp"

namespace rare {

struct ModelParams {
  EmbedParams embed;
  GruParams gru;
  MhaParams mha;
  ClassifierParams head;

  void visit(std::string_view prefix, const ParamVisitor& f);
};

/// Trainable part of the pipeline: everything after the frozen detector.
class Model {
 public:
  Model(const ModelConfig& model, const DetectorConfig& detector);

  /// Seeded initialization.
  void init(std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const DetectorConfig& detector_config() const { return detector_; }
  int roi_channels() const;
  std::vector<int> roi_scales() const;

  /// Zero-filled parameter struct with the model's shapes.
  ModelParams zeros() const;

  ModelParams params;

 private:
  ModelConfig config_;
  DetectorConfig detector_;
};

/// Detector output reduced to what the trainable model consumes.
struct FrameInputs {
  std::vector<Detection> detections;
  std::vector<RoIPatch> patches;  // one concatenated patch per detection
  Vec pooled_backbone;
  int input_width = 0;
  int input_height = 0;
};

FrameInputs prepare_frame(const DetectionOutput& out, const Model& model,
                          Execution exec = Execution::kParallel);

/// Per-frame activations kept for backpropagation through time.
struct FrameTape {
  FrameInputs inputs;
  GruCache gru;
  std::vector<EmbedCache> embeds;
  std::vector<ObjectEmbedding> objects;
  FusionCache fusion;
  ClassifierCache classifier;
  double risk = 0.0;
  Vec attention;
};

/// Recurrent state of one video stream.
struct StreamState {
  SceneState scene;
  FeatureQueue queue;

  explicit StreamState(const Model& model);
};

/// One frame of the scene -> objects -> fusion -> queue -> classifier chain.
/// Without keep_tape only the detections, risk and attention are retained.
FrameTape step_frame(const Model& model, StreamState& state, FrameInputs inputs,
                     bool keep_tape);

struct FrameResult {
  double risk = 0.0;
  std::vector<double> attention;
  std::vector<Detection> detections;
};

/// Streaming inference over one video.
class InferenceSession {
 public:
  InferenceSession(const Model& model, const Detector& detector,
                   Execution exec = Execution::kParallel);

  FrameResult step(const Frame& frame);
  void reset();

 private:
  const Model& model_;
  const Detector& detector_;
  Execution exec_;
  StreamState state_;
};

}  // namespace rare
