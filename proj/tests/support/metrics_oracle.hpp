#pragma once

// Naive threshold enumeration for the video-level protocol: every distinct
// score is a threshold and every count is recomputed from scratch.

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

namespace rare::testing {

struct OracleVideo {
  std::vector<double> scores;
  bool positive = false;
  int onset = 0;  // 1-based, positives only
  double fps = 10.0;
};

struct OraclePoint {
  double threshold = 0.0;
  int tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, tta = 0.0;
};

inline std::vector<OraclePoint> oracle_points(const std::vector<OracleVideo>& videos) {
  std::set<double> thresholds;
  for (const auto& v : videos) thresholds.insert(v.scores.begin(), v.scores.end());
  std::vector<OraclePoint> out;
  for (double q : thresholds) {
    OraclePoint p;
    p.threshold = q;
    double lead_sum = 0.0;
    for (const auto& v : videos) {
      std::optional<int> fire;
      for (std::size_t t = 0; t < v.scores.size(); ++t) {
        if (v.scores[t] >= q) {
          fire = static_cast<int>(t) + 1;
          break;
        }
      }
      if (!v.positive) {
        if (fire) ++p.fp;
      } else if (fire && *fire <= v.onset) {
        ++p.tp;
        lead_sum += (v.onset - *fire) / v.fps;
      } else {
        ++p.fn;
        if (fire) ++p.fp;
      }
    }
    p.precision = p.tp + p.fp == 0 ? 1.0 : static_cast<double>(p.tp) / (p.tp + p.fp);
    p.recall = static_cast<double>(p.tp) / (p.tp + p.fn);
    p.tta = p.tp > 0 ? lead_sum / p.tp : 0.0;
    out.push_back(p);
  }
  return out;
}

/// sum (R_i - R_{i-1}) * max precision at recall >= R_i, R_0 = 0.
inline double oracle_ap(std::vector<OraclePoint> points) {
  std::stable_sort(points.begin(), points.end(),
                   [](const OraclePoint& a, const OraclePoint& b) { return a.recall < b.recall; });
  double ap = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = 0.0;
    for (std::size_t j = i; j < points.size(); ++j) best = std::max(best, points[j].precision);
    ap += (points[i].recall - prev) * best;
    prev = points[i].recall;
  }
  return ap;
}

inline double oracle_mtta(const std::vector<OraclePoint>& points) {
  double sum = 0.0;
  int n = 0;
  for (const auto& p : points) {
    if (p.tp > 0) {
      sum += p.tta;
      ++n;
    }
  }
  return n > 0 ? sum / n : 0.0;
}

}  // namespace rare::testing
