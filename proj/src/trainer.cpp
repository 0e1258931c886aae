#include "rare/trainer.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rare/error.hpp"

namespace rare {

namespace {

// Ground-truth accident boxes of a frame in detector-input coordinates.
std::vector<BoundingBox> input_space_accident_boxes(const VideoAnnotation& a, int t, int input_w,
                                                    int input_h) {
  auto boxes = a.accident_boxes(t);
  const double sx = static_cast<double>(input_w) / a.width;
  const double sy = static_cast<double>(input_h) / a.height;
  for (auto& b : boxes) b = b.scaled(sx, sy);
  return boxes;
}

bool has_both(const std::vector<bool>& labels) {
  const auto pos = std::count(labels.begin(), labels.end(), true);
  return pos > 0 && pos < static_cast<long>(labels.size());
}

std::vector<std::span<double>> spans_of(ModelParams& p) {
  std::vector<std::span<double>> out;
  p.visit("", [&](std::string_view, std::span<double> v) { out.push_back(v); });
  return out;
}

void add_into(ModelParams& dst, ModelParams& src) {
  auto d = spans_of(dst);
  auto s = spans_of(src);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t k = 0; k < d[i].size(); ++k) d[i][k] += s[i][k];
  }
}

}  // namespace

VideoTape forward_video(const Model& model, const Detector& detector, const VideoRecord& video,
                        const LossConfig& loss, double attc_prev, bool keep_tape, Execution exec) {
  const auto& a = video.annotation;
  VideoTape tape;
  tape.risks.reserve(a.num_frames);
  tape.labels.reserve(a.num_frames);
  if (keep_tape) tape.frames.reserve(a.num_frames);
  StreamState state(model);
  for (int t = 1; t <= a.num_frames; ++t) {
    const auto out = detector.detect(video.frame(t));
    auto frame = step_frame(model, state, prepare_frame(out, model, exec), keep_tape);

    std::vector<bool> labels;
    if (a.frames[t - 1].accident_annotated) {
      std::vector<BoundingBox> detected;
      for (const auto& d : frame.inputs.detections) detected.push_back(d.box);
      const auto gt = input_space_accident_boxes(a, t, out.input_width, out.input_height);
      labels = assign_attention_labels(detected, gt, loss.iou_threshold);
    }
    if (has_both(labels)) {
      const std::span<const double> scores(frame.attention.data(), frame.attention.size());
      tape.ranking_sum += ranking_loss(scores, labels, loss.margin, loss.ranking_form());
      ++tape.ranking_frames;
    }
    tape.risks.push_back(frame.risk);
    tape.labels.push_back(std::move(labels));
    tape.attention.push_back(frame.attention);
    if (keep_tape) tape.frames.push_back(std::move(frame));
  }
  tape.adalea = video_loss(tape.risks, a, attc_prev, loss.alpha);
  return tape;
}

void backward_video(const Model& model, const VideoTape& tape, const VideoAnnotation& annotation,
                    const LossConfig& loss, double attc_prev, double adalea_scale,
                    double ranking_scale, ModelParams& grad) {
  const auto& p = model.params;
  const int frames = static_cast<int>(tape.frames.size());
  if (frames != annotation.num_frames) {
    throw Error(ErrorCode::kInvalidInput, "backward_video needs a tape recorded with keep_tape");
  }
  const int k = model.config().queue_size;
  const int dim = model.config().fused_dim;

  const Vec dlogit = video_loss_grad(tape.risks, annotation, attc_prev, loss.alpha) * adalea_scale;
  std::vector<Vec> dfused(frames, Vec::Zero(dim));
  for (int t = 0; t < frames; ++t) {
    if (dlogit[t] == 0.0) continue;
    const Vec dq = classify_backward(tape.frames[t].classifier, dlogit[t], p.head, grad.head);
    for (int slot = 0; slot < k && slot <= t; ++slot) dfused[t - slot] += dq.segment(slot * dim, dim);
  }

  Vec dh_carry = Vec::Zero(model.config().scene_hidden_dim);
  Mat dobjects;
  for (int t = frames - 1; t >= 0; --t) {
    const auto& f = tape.frames[t];
    Vec dscores;
    if (ranking_scale != 0.0 && has_both(tape.labels[t])) {
      const std::span<const double> scores(f.attention.data(), f.attention.size());
      dscores = ranking_loss_grad(scores, tape.labels[t], loss.margin, loss.ranking_form()) * ranking_scale;
    }
    Vec dh = fuse_backward(f.fusion, dfused[t], dscores, p.mha, grad.mha, &dobjects);
    for (std::size_t i = 0; i < f.embeds.size(); ++i) {
      embed_object_backward(f.embeds[i], dobjects.col(static_cast<Eigen::Index>(i)), p.embed, grad.embed);
    }
    dh += dh_carry;
    dh_carry = scene_step_backward(f.gru, dh, p.gru, grad.gru);
  }
}

BatchLoss batch_loss(const Model& model, const Detector& detector,
                     std::span<const VideoRecord* const> videos, const LossConfig& loss,
                     double attc_prev, ModelParams* grad, bool deterministic) {
  const int n = static_cast<int>(videos.size());
  if (n == 0) throw Error(ErrorCode::kInvalidInput, "empty batch");
  std::vector<VideoTape> tapes(n);
  const bool keep = grad != nullptr;

#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    tapes[i] = forward_video(model, detector, *videos[i], loss, attc_prev, keep, Execution::kSerial);
  }

  double adalea = 0.0;
  double ranking = 0.0;
  int ranking_videos = 0;
  for (const auto& t : tapes) {
    adalea += t.adalea;
    if (t.ranking_frames > 0) {
      ranking += t.ranking_sum / t.ranking_frames;
      ++ranking_videos;
    }
  }
  adalea /= n;
  if (ranking_videos > 0) ranking /= ranking_videos;

  BatchLoss result;
  result.breakdown = total_loss(adalea, ranking, loss.gamma, loss.margin, loss.ranking_form());
  result.ranking_videos = ranking_videos;
  if (!grad) return result;

  const auto ranking_scale = [&](const VideoTape& t) {
    return t.ranking_frames > 0 ? loss.gamma / (static_cast<double>(t.ranking_frames) * ranking_videos)
                                : 0.0;
  };
  if (deterministic) {
    // per-video buffers reduced in batch order
    std::vector<ModelParams> partial(n, model.zeros());
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
      backward_video(model, tapes[i], videos[i]->annotation, loss, attc_prev, 1.0 / n,
                     ranking_scale(tapes[i]), partial[i]);
    }
    for (auto& g : partial) add_into(*grad, g);
  } else {
#pragma omp parallel
    {
      ModelParams local = model.zeros();
#pragma omp for schedule(dynamic, 1)
      for (int i = 0; i < n; ++i) {
        backward_video(model, tapes[i], videos[i]->annotation, loss, attc_prev, 1.0 / n,
                       ranking_scale(tapes[i]), local);
      }
#pragma omp critical
      add_into(*grad, local);
    }
  }
  return result;
}

EvalResult evaluate(const Model& model, const Detector& detector, const Dataset& dataset,
                    const LossConfig& loss) {
  const int n = static_cast<int>(dataset.videos.size());
  std::vector<VideoTape> tapes(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    tapes[i] = forward_video(model, detector, dataset.videos[i], loss, 0.0, false, Execution::kSerial);
  }

  EvalResult r;
  std::vector<EvalVideo> eval(n);
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const auto& a = dataset.videos[i].annotation;
    eval[i].scores = tapes[i].risks;
    eval[i].positive = a.positive();
    eval[i].onset = a.accident_frame.value_or(0);
    eval[i].fps = a.fps;

    RiskTimeline tl;
    tl.video_id = a.video_id;
    tl.scores = tapes[i].risks;
    for (std::size_t t = 0; t < tapes[i].attention.size(); ++t) {
      const Vec& s = tapes[i].attention[t];
      tl.attention.emplace_back(s.data(), s.data() + s.size());
      const auto& labels = tapes[i].labels[t];
      if (a.positive() && has_both(labels)) {
        Eigen::Index best;
        s.maxCoeff(&best);
        hits += labels[static_cast<std::size_t>(best)] ? 1 : 0;
        ++r.ranked_frames;
      }
    }
    r.timelines.push_back(std::move(tl));
  }
  // timelines own the scores; point the eval views at them
  for (int i = 0; i < n; ++i) eval[i].scores = r.timelines[i].scores;
  r.metrics = compute_metrics(eval);
  r.tta_at_half = tta_at(eval, 0.5);
  r.attention_rank_rate = r.ranked_frames > 0 ? static_cast<double>(hits) / r.ranked_frames : 0.0;
  return r;
}

nlohmann::json to_json(const EvalResult& r) {
  auto j = to_json(r.metrics);
  j["attention_rank_rate"] = r.attention_rank_rate;
  j["ranked_frames"] = r.ranked_frames;
  j["tta_at_0_5"] = r.tta_at_half;
  return j;
}

nlohmann::json to_json(const EpochLog& log) {
  return {{"schema_version", kMetricsSchemaVersion},
          {"epoch", log.epoch},
          {"loss",
           {{"total", log.loss.total},
            {"adalea", log.loss.adalea},
            {"ranking", log.loss.ranking},
            {"gamma", log.loss.gamma},
            {"margin", log.loss.margin}}},
          {"attc", log.attc},
          {"train_ap", log.train_ap},
          {"train_mtta", log.train_mtta},
          {"attention_rank_rate", log.attention_rank_rate}};
}

EpochLog epoch_log_from_json(const nlohmann::json& j) {
  EpochLog log;
  try {
    log.epoch = j.at("epoch").get<int>();
    const auto& l = j.at("loss");
    log.loss.total = l.at("total").get<double>();
    log.loss.adalea = l.at("adalea").get<double>();
    log.loss.ranking = l.at("ranking").get<double>();
    log.loss.gamma = l.at("gamma").get<double>();
    log.loss.margin = l.at("margin").get<double>();
    log.attc = j.at("attc").get<double>();
    log.train_ap = j.at("train_ap").get<double>();
    log.train_mtta = j.at("train_mtta").get<double>();
    log.attention_rank_rate = j.at("attention_rank_rate").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaValidation, std::string("malformed epoch log: ") + e.what());
  }
  const double expected = log.loss.adalea + log.loss.gamma * log.loss.ranking;
  if (std::abs(log.loss.total - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
    throw Error(ErrorCode::kSchemaValidation, "epoch log total != adalea + gamma * ranking");
  }
  return log;
}

SgdMomentum::SgdMomentum(const Model& model, double learning_rate, double momentum, double grad_clip)
    : lr_(learning_rate), momentum_(momentum), clip_(grad_clip), velocity_(model.zeros()) {}

void SgdMomentum::step(ModelParams& params, ModelParams& grad) {
  auto p = spans_of(params);
  auto g = spans_of(grad);
  auto v = spans_of(velocity_);
  double scale = 1.0;
  if (clip_ > 0.0) {
    double sq = 0.0;
    for (const auto& s : g) {
      for (double x : s) sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (norm > clip_) scale = clip_ / norm;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t k = 0; k < p[i].size(); ++k) {
      v[i][k] = momentum_ * v[i][k] + scale * g[i][k];
      p[i][k] -= lr_ * v[i][k];
    }
  }
}

std::vector<EpochLog> train(Model& model, const Detector& detector, const Dataset& train_set,
                            const RunConfig& config, const EpochCallback& on_epoch) {
  const auto& tc = config.train;
  SgdMomentum opt(model, tc.learning_rate, tc.momentum, tc.grad_clip);
  std::vector<std::size_t> order(train_set.videos.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(tc.seed ^ 0x5eedULL);

  std::vector<EpochLog> history;
  double attc = 0.0;
  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double adalea = 0.0, ranking = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      std::vector<const VideoRecord*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + tc.batch_size); ++i) {
        batch.push_back(&train_set.videos[order[i]]);
      }
      ModelParams grad = model.zeros();
      const auto bl = batch_loss(model, detector, batch, config.loss, attc, &grad, tc.deterministic);
      opt.step(model.params, grad);
      adalea += bl.breakdown.adalea;
      ranking += bl.breakdown.ranking;
      ++batches;
    }
    EpochLog log;
    log.epoch = epoch;
    log.attc = attc;
    log.loss = total_loss(adalea / batches, ranking / batches, config.loss.gamma, config.loss.margin,
                          config.loss.ranking_form());
    const auto eval = evaluate(model, detector, train_set, config.loss);
    log.train_ap = eval.metrics.ap;
    log.train_mtta = eval.metrics.mtta;
    log.attention_rank_rate = eval.attention_rank_rate;
    attc = eval.tta_at_half;
    history.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return history;
}

}  // namespace rare
