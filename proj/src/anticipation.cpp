#include "rare/anticipation.hpp"

#include "rare/error.hpp"

namespace rare {

FeatureQueue::FeatureQueue(int capacity, int dim)
    : capacity_(capacity), dim_(dim), ring_(capacity, Vec::Zero(dim)) {
  if (capacity <= 0 || dim <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "queue capacity and dimension must be positive");
  }
}

void FeatureQueue::push(const Vec& fused) {
  if (fused.size() != dim_) {
    throw Error(ErrorCode::kInvalidShape, "fused feature does not match the queue dimension");
  }
  head_ = (head_ + 1) % capacity_;
  ring_[head_] = fused;
  fill_ = std::min(fill_ + 1, capacity_);
}

Vec FeatureQueue::entry(int slot) const {
  if (slot < 0 || slot >= capacity_) throw Error(ErrorCode::kInvalidInput, "queue slot out of range");
  if (slot >= fill_) return Vec::Zero(dim_);
  return ring_[(head_ - slot + capacity_) % capacity_];
}

Vec FeatureQueue::concatenated() const {
  Vec out = Vec::Zero(static_cast<Eigen::Index>(capacity_) * dim_);
  for (int s = 0; s < fill_; ++s) out.segment(static_cast<Eigen::Index>(s) * dim_, dim_) = entry(s);
  return out;
}

ClassifierParams::ClassifierParams(int input_dim, int hidden_dim)
    : fc1(input_dim, hidden_dim), fc2(hidden_dim, 1) {}

void ClassifierParams::visit(std::string_view prefix, const ParamVisitor& f) {
  const std::string p(prefix);
  fc1.visit(p + ".fc1", f);
  fc2.visit(p + ".fc2", f);
}

void ClassifierParams::init(std::mt19937_64& rng) {
  fc1.init(rng);
  fc2.init(rng);
}

double classify(const Vec& input, const ClassifierParams& params, ClassifierCache* cache) {
  if (input.size() != params.fc1.in_dim()) {
    throw Error(ErrorCode::kInvalidShape, "classifier input has the wrong dimension");
  }
  Vec hidden_pre = params.fc1.forward(input);
  const double logit = params.fc2.forward(relu(hidden_pre))[0];
  const double p = sigmoid(logit);
  if (cache) {
    cache->input = input;
    cache->hidden_pre = std::move(hidden_pre);
    cache->logit = logit;
    cache->probability = p;
  }
  return p;
}

Vec classify_backward(const ClassifierCache& cache, double dlogit, const ClassifierParams& params,
                      ClassifierParams& grad) {
  Vec dh = params.fc2.backward(relu(cache.hidden_pre), Vec::Constant(1, dlogit), grad.fc2);
  dh = dh.cwiseProduct((cache.hidden_pre.array() > 0.0).cast<double>().matrix());
  return params.fc1.backward(cache.input, dh, grad.fc1);
}

RiskScore push_and_classify(FeatureQueue& queue, const Vec& fused, const ClassifierParams& params,
                            long frame_index, ClassifierCache* cache) {
  queue.push(fused);
  return {classify(queue.concatenated(), params, cache), frame_index};
}

}  // namespace rare
