#pragma once

#include <random>
#include <vector>

#include "rare/nn.hpp"

namespace rare {

/// Fixed-capacity FIFO of fused features, newest first. Slots beyond
/// fill_count read as zero vectors.
class FeatureQueue {
 public:
  FeatureQueue(int capacity, int dim);

  void push(const Vec& fused);
  int capacity() const { return capacity_; }
  int dim() const { return dim_; }
  int fill_count() const { return fill_; }
  /// Slot 0 is the newest entry.
  Vec entry(int slot) const;
  /// All slots concatenated newest first, capacity * dim values.
  Vec concatenated() const;

 private:
  int capacity_;
  int dim_;
  int fill_ = 0;
  int head_ = 0;  // ring index of the newest entry
  std::vector<Vec> ring_;
};

struct RiskScore {
  double value = 0.0;
  long frame_index = 0;
};

struct ClassifierParams {
  Linear fc1;  // capacity*dim -> hidden
  Linear fc2;  // hidden -> 1

  ClassifierParams() = default;
  ClassifierParams(int input_dim, int hidden_dim);

  void visit(std::string_view prefix, const ParamVisitor& f);
  void init(std::mt19937_64& rng);
};

struct ClassifierCache {
  Vec input;
  Vec hidden_pre;
  double logit = 0.0;
  double probability = 0.0;
};

/// sigmoid(fc2(relu(fc1(x)))).
double classify(const Vec& input, const ClassifierParams& params, ClassifierCache* cache = nullptr);

/// Accumulates parameter gradients; returns dL/dinput given dL/dlogit.
Vec classify_backward(const ClassifierCache& cache, double dlogit, const ClassifierParams& params,
                      ClassifierParams& grad);

/// Pushes `fused` into the queue and classifies the full queue.
/// Throws kInvalidShape if `fused` does not match the queue dimension.
RiskScore push_and_classify(FeatureQueue& queue, const Vec& fused, const ClassifierParams& params,
                            long frame_index, ClassifierCache* cache = nullptr);

}  // namespace rare
