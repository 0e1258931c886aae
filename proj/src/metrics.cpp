#include "rare/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rare/error.hpp"
#include "rare/execution.hpp"

namespace rare {

std::optional<int> fire_time(std::span<const double> scores, double threshold) {
  for (std::size_t t = 0; t < scores.size(); ++t) {
    if (scores[t] >= threshold) return static_cast<int>(t) + 1;
  }
  return std::nullopt;
}

std::vector<PrPoint> pr_points(std::span<const EvalVideo> videos) {
  int positives = 0;
  std::vector<double> thresholds;
  for (const auto& v : videos) {
    positives += v.positive ? 1 : 0;
    thresholds.insert(thresholds.end(), v.scores.begin(), v.scores.end());
  }
  if (positives == 0) {
    throw Error(ErrorCode::kUndefinedRecall, "precision-recall needs at least one positive video");
  }
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const std::size_t q = thresholds.size();
  std::vector<int> tp(q, 0), fp(q, 0);
  std::vector<double> tta_sum(q, 0.0);

  // First-crossing time is non-decreasing in the threshold, so one forward
  // walk over the running maximum serves all thresholds of a video.
  std::vector<double> running_max;
  for (const auto& v : videos) {
    running_max.assign(v.scores.begin(), v.scores.end());
    for (std::size_t t = 1; t < running_max.size(); ++t) {
      running_max[t] = std::max(running_max[t], running_max[t - 1]);
    }
    std::size_t t = 0;
    for (std::size_t j = 0; j < q; ++j) {
      while (t < running_max.size() && running_max[t] < thresholds[j]) ++t;
      if (t == running_max.size()) break;  // no firing at this or any higher threshold
      const int fire = static_cast<int>(t) + 1;
      if (v.positive && fire <= v.onset) {
        ++tp[j];
        tta_sum[j] += static_cast<double>(v.onset - fire) / v.fps;
      } else {
        ++fp[j];
      }
    }
  }

  std::vector<PrPoint> points(q);
  for (std::size_t j = 0; j < q; ++j) {
    auto& p = points[j];
    p.threshold = thresholds[j];
    p.tp = tp[j];
    p.fp = fp[j];
    p.fn = positives - tp[j];
    p.precision = (tp[j] + fp[j]) == 0 ? 1.0 : static_cast<double>(tp[j]) / (tp[j] + fp[j]);
    p.recall = static_cast<double>(tp[j]) / positives;
    p.tta = tp[j] > 0 ? tta_sum[j] / tp[j] : 0.0;
  }
  return points;
}

double average_precision(std::span<const PrPoint> points) {
  if (points.empty()) throw Error(ErrorCode::kInvalidInput, "average_precision of an empty curve");
  std::vector<PrPoint> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const PrPoint& a, const PrPoint& b) { return a.recall < b.recall; });
  std::vector<double> interp(sorted.size());
  double best = 0.0;
  for (std::size_t i = sorted.size(); i-- > 0;) {
    best = std::max(best, sorted[i].precision);
    interp[i] = best;
  }
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    ap += (sorted[i].recall - prev_recall) * interp[i];
    prev_recall = sorted[i].recall;
  }
  return ap;
}

MttaResult mtta(std::span<const PrPoint> points) {
  if (points.empty()) throw Error(ErrorCode::kInvalidInput, "mtta of an empty curve");
  double sum = 0.0;
  int n = 0;
  for (const auto& p : points) {
    if (p.tp > 0) {
      sum += p.tta;
      ++n;
    }
  }
  if (n == 0) return {0.0, true};
  return {sum / n, false};
}

double tta_at(std::span<const EvalVideo> videos, double threshold) {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : videos) {
    if (!v.positive) continue;
    const auto fire = fire_time(v.scores, threshold);
    if (fire && *fire <= v.onset) {
      sum += static_cast<double>(v.onset - *fire) / v.fps;
      ++n;
    }
  }
  return n > 0 ? sum / n : 0.0;
}

MetricsReport compute_metrics(std::span<const EvalVideo> videos) {
  MetricsReport r;
  r.num_videos = static_cast<int>(videos.size());
  r.points = pr_points(videos);
  r.ap = average_precision(r.points);
  const auto m = mtta(r.points);
  r.mtta = m.seconds;
  r.mtta_warning = m.no_true_positive;
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : r.points) {
    points.push_back({{"threshold", p.threshold},
                      {"precision", p.precision},
                      {"recall", p.recall},
                      {"tta", p.tta},
                      {"tp", p.tp},
                      {"fp", p.fp},
                      {"fn", p.fn}});
  }
  return {{"schema_version", kMetricsSchemaVersion},
          {"protocol_version", kProtocolVersion},
          {"ap", r.ap},
          {"mtta", r.mtta},
          {"mtta_warning", r.mtta_warning},
          {"num_videos", r.num_videos},
          {"points", points}};
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

LatencyReport summarize_latency(std::vector<double> per_frame_ms, int warmup) {
  LatencyReport r;
  r.warmup = warmup;
  r.per_frame_ms = std::move(per_frame_ms);
  if (r.per_frame_ms.empty()) return r;
  std::vector<double> sorted = r.per_frame_ms;
  std::sort(sorted.begin(), sorted.end());
  r.mean_ms = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  r.median_ms = quantile(sorted, 0.5);
  r.p95_ms = quantile(sorted, 0.95);
  r.p99_ms = quantile(sorted, 0.99);
  r.fps = r.mean_ms > 0.0 ? 1000.0 / r.mean_ms : 0.0;
  return r;
}

LatencyReport benchmark(const FramePipeline& pipeline, std::size_t num_frames, int warmup,
                        int measured, LatencyReport* partial) {
  if (warmup < 0 || measured < 1 || num_frames == 0) {
    throw Error(ErrorCode::kInvalidInput, "benchmark needs warmup >= 0, measured >= 1 and frames");
  }
  using Clock = std::chrono::steady_clock;
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(measured));
  std::size_t frame = 0;
  try {
    for (int i = 0; i < warmup; ++i) pipeline(frame++ % num_frames);
    for (int i = 0; i < measured; ++i) {
      const auto start = Clock::now();
      pipeline(frame++ % num_frames);
      const auto stop = Clock::now();
      samples.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
  } catch (const std::exception& e) {
    if (partial) *partial = summarize_latency(samples, warmup);
    std::ostringstream os;
    os << "pipeline failed after " << samples.size() << " measured frames: " << e.what();
    throw Error(ErrorCode::kBenchmarkAborted, os.str());
  }
  auto report = summarize_latency(std::move(samples), warmup);
  report.hardware = describe_hardware();
  return report;
}

nlohmann::json to_json(const LatencyReport& r) {
  return {{"schema_version", kMetricsSchemaVersion},
          {"per_frame_ms", r.per_frame_ms},
          {"mean_ms", r.mean_ms},
          {"median_ms", r.median_ms},
          {"p95_ms", r.p95_ms},
          {"p99_ms", r.p99_ms},
          {"fps", r.fps},
          {"warmup", r.warmup},
          {"measured", r.per_frame_ms.size()},
          {"hardware", r.hardware},
          {"config", r.config}};
}

std::string describe_hardware() {
  std::string model = "unknown cpu";
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(colon + 2);
      break;
    }
  }
  std::ostringstream os;
  os << model << ", " << max_threads() << " OpenMP threads";
  return os.str();
}

}  // namespace rare
