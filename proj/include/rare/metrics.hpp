#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rare/dataset.hpp"

namespace rare {

inline constexpr int kMetricsSchemaVersion = 1;
inline constexpr const char* kProtocolVersion = "video-level-v1";

struct RiskTimeline {
  std::string video_id;
  std::vector<double> scores;                     // one per frame, in [0,1]
  std::vector<std::vector<double>> attention;     // optional per-frame object scores
};

/// First 1-based frame with score >= threshold.
std::optional<int> fire_time(std::span<const double> scores, double threshold);

struct EvalVideo {
  std::span<const double> scores;
  bool positive = false;
  int onset = 0;  // 1-based, positives only
  double fps = 1.0;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double tta = 0.0;  // mean seconds before onset over true positives, 0 without any
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

/// Sweeps every distinct observed score as a threshold, ascending.
///
/// A positive video is a true positive when it first fires at or before its
/// onset; otherwise it is a false negative, and additionally a false positive
/// if it fires after the onset. A negative video that fires anywhere is a
/// false positive. Precision with no firings is 1.
/// Throws kUndefinedRecall if there is no positive video.
std::vector<PrPoint> pr_points(std::span<const EvalVideo> videos);

/// Interpolated AP: sum over recall steps of the max precision at recall >= R_i.
/// Throws kInvalidInput on an empty point list.
double average_precision(std::span<const PrPoint> points);

struct MttaResult {
  double seconds = 0.0;
  bool no_true_positive = false;  // warning flag: no threshold produced a TP
};

/// Mean tta over thresholds with at least one true positive.
MttaResult mtta(std::span<const PrPoint> points);

/// TTA at a single threshold, averaged over positive videos firing in time;
/// 0 when none does.
double tta_at(std::span<const EvalVideo> videos, double threshold);

struct MetricsReport {
  double ap = 0.0;
  double mtta = 0.0;
  bool mtta_warning = false;
  int num_videos = 0;
  std::vector<PrPoint> points;
};

MetricsReport compute_metrics(std::span<const EvalVideo> videos);
nlohmann::json to_json(const MetricsReport& report);

// ---------------------------------------------------------------------------
// Latency

struct LatencyReport {
  std::vector<double> per_frame_ms;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  double fps = 0.0;
  int warmup = 0;
  std::string hardware;
  std::string config;
};

/// Statistics over the given samples; fps = 1000 / mean_ms.
LatencyReport summarize_latency(std::vector<double> per_frame_ms, int warmup = 0);

/// Per-frame work under test. Called strictly serially.
using FramePipeline = std::function<void(std::size_t frame)>;

/// Runs warmup + measured frames (frame indices cycle over `num_frames`),
/// timing each measured call with a monotonic clock. A throwing pipeline
/// yields kBenchmarkAborted; the partial report is attached to `partial` when
/// given.
LatencyReport benchmark(const FramePipeline& pipeline, std::size_t num_frames, int warmup,
                        int measured, LatencyReport* partial = nullptr);

nlohmann::json to_json(const LatencyReport& report);

/// CPU model and thread count, for report headers.
std::string describe_hardware();

}  // namespace rare
