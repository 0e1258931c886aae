#include "rare/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rare/error.hpp"

namespace rare {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<bool> assign_attention_labels(std::span<const BoundingBox> detected,
                                          std::span<const BoundingBox> gt_accident,
                                          double threshold) {
  std::vector<bool> flags(detected.size(), false);
  for (std::size_t n = 0; n < detected.size(); ++n) {
    double best = 0.0;
    for (const auto& gt : gt_accident) best = std::max(best, iou(detected[n], gt));
    flags[n] = best > threshold;
  }
  return flags;
}

namespace {

struct HingeTerms {
  bool defined = false;
  double value = 0.0;  // max(S_na) + m - min(S_a)
  std::size_t hardest_negative = 0;
  std::size_t weakest_positive = 0;
};

HingeTerms hinge_terms(std::span<const double> scores, const std::vector<bool>& labels,
                       double margin) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidInput, "ranking_loss: scores and labels differ in length");
  }
  HingeTerms t;
  double max_neg = -std::numeric_limits<double>::infinity();
  double min_pos = std::numeric_limits<double>::infinity();
  bool any_pos = false, any_neg = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i]) {
      any_pos = true;
      if (scores[i] < min_pos) {
        min_pos = scores[i];
        t.weakest_positive = i;
      }
    } else {
      any_neg = true;
      if (scores[i] > max_neg) {
        max_neg = scores[i];
        t.hardest_negative = i;
      }
    }
  }
  if (any_pos && any_neg) {
    t.defined = true;
    t.value = max_neg + margin - min_pos;
  }
  return t;
}

}  // namespace

double ranking_loss(std::span<const double> scores, const std::vector<bool>& labels, double margin,
                    RankingForm form) {
  const auto t = hinge_terms(scores, labels, margin);
  if (!t.defined) return 0.0;
  return form == RankingForm::kHinge ? std::max(0.0, t.value) : std::min(0.0, t.value);
}

Vec ranking_loss_grad(std::span<const double> scores, const std::vector<bool>& labels,
                      double margin, RankingForm form) {
  const auto t = hinge_terms(scores, labels, margin);
  Vec g = Vec::Zero(static_cast<Eigen::Index>(scores.size()));
  if (!t.defined) return g;
  const bool active = form == RankingForm::kHinge ? t.value > 0.0 : t.value < 0.0;
  if (active) {
    g[static_cast<Eigen::Index>(t.hardest_negative)] += 1.0;
    g[static_cast<Eigen::Index>(t.weakest_positive)] -= 1.0;
  }
  return g;
}

double adalea_weight(int t, int onset, double fps, double attc_prev, double alpha) {
  const double lead = static_cast<double>(onset - t) / fps;
  return std::exp(-std::max(0.0, lead - (attc_prev + alpha)));
}

double bce(double probability, double target) {
  const double p = std::clamp(probability, kBceEpsilon, 1.0 - kBceEpsilon);
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

std::vector<double> frame_weights(const VideoAnnotation& a, double attc_prev, double alpha) {
  std::vector<double> w(a.num_frames, 1.0);
  if (!a.positive()) return w;
  if (!a.accident_frame) {
    throw Error(ErrorCode::kInvalidAnnotation, "positive video " + a.video_id + " lacks an onset frame");
  }
  for (int t = 1; t <= a.num_frames; ++t) {
    w[t - 1] = adalea_weight(t, *a.accident_frame, a.fps, attc_prev, alpha);
  }
  return w;
}

namespace {

void check_lengths(std::span<const double> risks, const VideoAnnotation& a) {
  if (risks.size() != static_cast<std::size_t>(a.num_frames)) {
    throw Error(ErrorCode::kInvalidInput, "risk timeline of " + a.video_id + " does not cover every frame");
  }
}

}  // namespace

double video_loss(std::span<const double> risks, const VideoAnnotation& a, double attc_prev,
                  double alpha) {
  check_lengths(risks, a);
  const auto w = frame_weights(a, attc_prev, alpha);
  const double target = a.positive() ? 1.0 : 0.0;
  double acc = 0.0;
  for (std::size_t t = 0; t < risks.size(); ++t) acc += w[t] * bce(risks[t], target);
  return risks.empty() ? 0.0 : acc / static_cast<double>(risks.size());
}

Vec video_loss_grad(std::span<const double> risks, const VideoAnnotation& a, double attc_prev,
                    double alpha) {
  check_lengths(risks, a);
  const auto w = frame_weights(a, attc_prev, alpha);
  const double target = a.positive() ? 1.0 : 0.0;
  Vec g = Vec::Zero(static_cast<Eigen::Index>(risks.size()));
  const double inv = risks.empty() ? 0.0 : 1.0 / static_cast<double>(risks.size());
  for (std::size_t t = 0; t < risks.size(); ++t) {
    const double p = risks[t];
    // the clamp is flat outside (eps, 1 - eps)
    if (p > kBceEpsilon && p < 1.0 - kBceEpsilon) {
      g[static_cast<Eigen::Index>(t)] = w[t] * (p - target) * inv;
    }
  }
  return g;
}

LossBreakdown total_loss(double adalea, double ranking, double gamma, double margin,
                         RankingForm form) {
  if (adalea < 0.0 || gamma < 0.0 || (form == RankingForm::kHinge && ranking < 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "loss components and gamma must be non-negative");
  }
  return {adalea + gamma * ranking, adalea, ranking, gamma, margin};
}

}  // namespace rare
