#pragma once

#include <span>
#include <vector>

#include "rare/dataset.hpp"
#include "rare/geometry.hpp"
#include "rare/nn.hpp"

namespace rare {

double iou(const BoundingBox& a, const BoundingBox& b);

/// flags[n] is true iff some ground-truth accident box overlaps detected[n]
/// with IoU strictly above `threshold`.
std::vector<bool> assign_attention_labels(std::span<const BoundingBox> detected,
                                          std::span<const BoundingBox> gt_accident,
                                          double threshold = 0.5);

enum class RankingForm {
  kHinge,    // max(0, max(S_na) + m - min(S_a))
  kLiteral,  // min(0, max(S_na) + m - min(S_a)), kept for comparison only
};

/// Margin ranking between accident (true) and non-accident (false) boxes.
/// Zero when either group is empty. Throws kInvalidInput on length mismatch.
double ranking_loss(std::span<const double> scores, const std::vector<bool>& labels,
                    double margin, RankingForm form = RankingForm::kHinge);

/// Subgradient of ranking_loss w.r.t. the scores (one entry per score).
Vec ranking_loss_grad(std::span<const double> scores, const std::vector<bool>& labels,
                      double margin, RankingForm form = RankingForm::kHinge);

/// exp(-max(0, (onset - t)/fps - (attc_prev + alpha))).
double adalea_weight(int t, int onset, double fps, double attc_prev, double alpha);

inline constexpr double kBceEpsilon = 1e-7;

/// Binary cross-entropy with the probability clamped to [eps, 1 - eps].
double bce(double probability, double target);

/// Per-frame weights: AdaLEA weights for positives, ones for negatives.
/// Throws kInvalidAnnotation for a positive video without onset.
std::vector<double> frame_weights(const VideoAnnotation& annotation, double attc_prev,
                                  double alpha);

/// Mean over frames of weight_t * BCE(p_t, label).
double video_loss(std::span<const double> risks, const VideoAnnotation& annotation,
                  double attc_prev, double alpha);

/// dL/dlogit for each frame of video_loss, where p_t = sigmoid(logit_t).
Vec video_loss_grad(std::span<const double> risks, const VideoAnnotation& annotation,
                    double attc_prev, double alpha);

struct LossBreakdown {
  double total = 0.0;
  double adalea = 0.0;
  double ranking = 0.0;
  double gamma = 0.0;
  double margin = 0.0;
};

/// total = adalea + gamma * ranking. Negative inputs are rejected, except a
/// negative ranking term under RankingForm::kLiteral.
LossBreakdown total_loss(double adalea, double ranking, double gamma, double margin = 0.1,
                         RankingForm form = RankingForm::kHinge);

}  // namespace rare
