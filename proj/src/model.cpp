#include "rare/model.hpp"

#include "rare/error.hpp"

namespace rare {

void ModelParams::visit(std::string_view prefix, const ParamVisitor& f) {
  const std::string p(prefix);
  embed.visit(p + "embed", f);
  gru.visit(p + "gru", f);
  mha.visit(p + "mha", f);
  head.visit(p + "head", f);
}

Model::Model(const ModelConfig& model, const DetectorConfig& detector)
    : config_(model), detector_(detector) {
  config_.validate();
  detector_.validate();
  params.embed = EmbedParams(roi_channels(), config_.cbam_reduction, config_.box_embed_dim,
                             config_.object_embed_dim);
  params.gru = GruParams(detector_.backbone_channels, config_.scene_hidden_dim);
  params.mha = MhaParams(config_.scene_hidden_dim, config_.object_embed_dim, config_.fused_dim,
                         config_.num_heads, config_.attention_residual);
  params.head = ClassifierParams(config_.queue_size * config_.fused_dim,
                                 config_.classifier_hidden_dim);
}

void Model::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  params.embed.init(rng);
  params.gru.init(rng);
  params.mha.init(rng);
  params.head.init(rng);
}

int Model::roi_channels() const {
  int c = 0;
  if (config_.roi.use_backbone) c += detector_.backbone_channels;
  if (config_.roi.use_neck) c += detector_.neck_channels * static_cast<int>(detector_.neck_strides.size());
  return c;
}

std::vector<int> Model::roi_scales() const {
  std::vector<int> s;
  if (config_.roi.use_backbone) s.push_back(detector_.backbone_stride);
  if (config_.roi.use_neck) s.insert(s.end(), detector_.neck_strides.begin(), detector_.neck_strides.end());
  return s;
}

ModelParams Model::zeros() const {
  ModelParams z = params;
  zero_params(z);
  return z;
}

FrameInputs prepare_frame(const DetectionOutput& out, const Model& model, Execution exec) {
  FrameInputs in;
  in.detections = out.detections;
  in.input_width = out.input_width;
  in.input_height = out.input_height;
  in.pooled_backbone = pool_backbone(out.backbone);
  if (!in.detections.empty()) {
    std::vector<BoundingBox> boxes;
    boxes.reserve(in.detections.size());
    for (const auto& d : in.detections) boxes.push_back(d.box);
    const auto per_scale = pool_objects(out, boxes, model.config().roi, exec);
    const auto scales = model.roi_scales();
    in.patches.reserve(boxes.size());
    for (const auto& patches : per_scale) in.patches.push_back(concat_patches(patches, scales));
  }
  return in;
}

StreamState::StreamState(const Model& model)
    : scene(SceneState::initial(model.config().scene_hidden_dim)),
      queue(model.config().queue_size, model.config().fused_dim) {}

FrameTape step_frame(const Model& model, StreamState& state, FrameInputs inputs, bool keep_tape) {
  const auto& p = model.params;
  FrameTape tape;
  state.scene = scene_step(state.scene, inputs.pooled_backbone, p.gru, keep_tape ? &tape.gru : nullptr);

  const std::size_t n = inputs.detections.size();
  tape.objects.reserve(n);
  if (keep_tape) tape.embeds.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    tape.objects.push_back(embed_object(inputs.patches[i], inputs.detections[i].box,
                                        inputs.input_width, inputs.input_height, p.embed,
                                        keep_tape ? &tape.embeds[i] : nullptr));
  }
  FusionCache* fc = keep_tape ? &tape.fusion : nullptr;
  FusionOutput fused = n > 0 ? fuse(state.scene, tape.objects, p.mha, fc)
                             : fuse_empty(state.scene, p.mha, fc);
  const auto risk = push_and_classify(state.queue, fused.fused, p.head, state.scene.frame_index,
                                      keep_tape ? &tape.classifier : nullptr);
  tape.risk = risk.value;
  tape.attention = std::move(fused.scores);
  if (keep_tape) {
    tape.inputs = std::move(inputs);
  } else {
    tape.inputs.detections = std::move(inputs.detections);
    tape.objects.clear();
  }
  return tape;
}

InferenceSession::InferenceSession(const Model& model, const Detector& detector, Execution exec)
    : model_(model), detector_(detector), exec_(exec), state_(model) {}

FrameResult InferenceSession::step(const Frame& frame) {
  const auto out = detector_.detect(frame);
  auto tape = step_frame(model_, state_, prepare_frame(out, model_, exec_), false);
  FrameResult r;
  r.risk = tape.risk;
  r.attention.assign(tape.attention.data(), tape.attention.data() + tape.attention.size());
  r.detections = std::move(tape.inputs.detections);
  return r;
}

void InferenceSession::reset() { state_ = StreamState(model_); }

}  // namespace rare
