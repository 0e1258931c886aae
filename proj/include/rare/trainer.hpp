#pragma once

#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "rare/config.hpp"
#include "rare/dataset.hpp"
#include "rare/losses.hpp"
#include "rare/metrics.hpp"
#include "rare/model.hpp"

namespace rare {

/// Forward pass of one video with everything needed for its backward pass.
struct VideoTape {
  std::vector<FrameTape> frames;
  std::vector<std::vector<bool>> labels;  // attention labels per frame
  std::vector<double> risks;
  std::vector<Vec> attention;
  double adalea = 0.0;        // video_loss
  double ranking_sum = 0.0;   // summed over eligible frames
  int ranking_frames = 0;     // frames with >= 1 accident and >= 1 other box
};

VideoTape forward_video(const Model& model, const Detector& detector, const VideoRecord& video,
                        const LossConfig& loss, double attc_prev, bool keep_tape,
                        Execution exec = Execution::kParallel);

/// Backpropagates adalea_scale * video_loss + ranking_scale * sum of per-frame
/// ranking losses through time, accumulating into `grad`.
void backward_video(const Model& model, const VideoTape& tape, const VideoAnnotation& annotation,
                    const LossConfig& loss, double attc_prev, double adalea_scale,
                    double ranking_scale, ModelParams& grad);

struct BatchLoss {
  LossBreakdown breakdown;
  int ranking_videos = 0;
};

/// Batch objective: mean video_loss + gamma * mean over videos with eligible
/// frames of their mean frame ranking loss. Accumulates gradients when
/// `grad` is non-null.
BatchLoss batch_loss(const Model& model, const Detector& detector,
                     std::span<const VideoRecord* const> videos, const LossConfig& loss,
                     double attc_prev, ModelParams* grad, bool deterministic = true);

struct EvalResult {
  MetricsReport metrics;
  double attention_rank_rate = 0.0;  // accident box ranked first
  int ranked_frames = 0;             // frames that qualified for the rate
  double tta_at_half = 0.0;          // TTA at threshold 0.5
  std::vector<RiskTimeline> timelines;
};

/// Scores every video of the dataset (videos in parallel, frames serial).
EvalResult evaluate(const Model& model, const Detector& detector, const Dataset& dataset,
                    const LossConfig& loss);

nlohmann::json to_json(const EvalResult& result);

struct EpochLog {
  int epoch = 0;
  LossBreakdown loss;
  double attc = 0.0;  // anticipation time used for this epoch's weights
  double train_ap = 0.0;
  double train_mtta = 0.0;
  double attention_rank_rate = 0.0;
};

nlohmann::json to_json(const EpochLog& log);
/// Re-checks total = adalea + gamma * ranking; throws kSchemaValidation.
EpochLog epoch_log_from_json(const nlohmann::json& j);

/// Momentum SGD with optional global-norm clipping.
class SgdMomentum {
 public:
  SgdMomentum(const Model& model, double learning_rate, double momentum, double grad_clip);
  void step(ModelParams& params, ModelParams& grad);

 private:
  double lr_;
  double momentum_;
  double clip_;
  ModelParams velocity_;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Epochs of fixed-order batches; the AdaLEA anticipation time is refreshed
/// from the training-set TTA at 0.5 after every epoch.
std::vector<EpochLog> train(Model& model, const Detector& detector, const Dataset& train_set,
                            const RunConfig& config, const EpochCallback& on_epoch = {});

}  // namespace rare
