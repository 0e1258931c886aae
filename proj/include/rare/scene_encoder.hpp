#pragma once

#include <random>

#include "rare/features.hpp"
#include "rare/nn.hpp"

namespace rare {

struct SceneState {
  Vec hidden;
  long frame_index = 0;

  /// Zero hidden vector, frame_index 0.
  static SceneState initial(int dim) { return {Vec::Zero(dim), 0}; }
};

/// Global average pool over the spatial dimensions.
Vec pool_backbone(const FeatureMap& map);

/// Single-layer GRU cell.
struct GruParams {
  Mat wz, uz, wr, ur, wh, uh;
  Vec bz, br, bh;

  GruParams() = default;
  GruParams(int input_dim, int hidden_dim);

  int input_dim() const { return static_cast<int>(wz.cols()); }
  int hidden_dim() const { return static_cast<int>(wz.rows()); }
  void visit(std::string_view prefix, const ParamVisitor& f);
  void init(std::mt19937_64& rng);
};

struct GruCache {
  Vec x, h, z, r, candidate;
};

/// z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br),
/// c = tanh(Wh x + Uh (r*h) + bh), h' = (1-z)*h + z*c.
SceneState scene_step(const SceneState& state, const Vec& pooled, const GruParams& params,
                      GruCache* cache = nullptr);

/// Accumulates parameter gradients; returns dL/dh (previous hidden).
/// If `dx` is non-null it receives dL/dpooled.
Vec scene_step_backward(const GruCache& cache, const Vec& dh_next, const GruParams& params,
                        GruParams& grad, Vec* dx = nullptr);

}  // namespace rare
