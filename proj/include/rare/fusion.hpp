#pragma once

#include <random>
#include <span>

#include "rare/nn.hpp"
#include "rare/object_encoder.hpp"
#include "rare/scene_encoder.hpp"

namespace rare {

struct FusionOutput {
  Vec fused;
  Vec scores;  // one per object, sums to 1; empty when no objects
};

/// Scene-query multi-head attention over object embeddings.
struct MhaParams {
  Linear query;  // scene_dim -> fused_dim
  Linear key;    // object_dim -> fused_dim
  Linear value;  // object_dim -> fused_dim
  Linear out;    // fused_dim -> fused_dim
  Linear empty;  // scene_dim -> fused_dim, used when a frame has no objects
  int heads = 4;
  bool residual = true;

  MhaParams() = default;
  MhaParams(int scene_dim, int object_dim, int fused_dim, int heads, bool residual = true);

  int fused_dim() const { return query.out_dim(); }
  void visit(std::string_view prefix, const ParamVisitor& f);
  void init(std::mt19937_64& rng);
};

struct FusionCache {
  bool empty = false;
  Vec scene;
  Mat objects;  // object_dim x N
  Vec query;
  Mat keys, values;  // fused_dim x N
  Mat attention;     // heads x N
  Vec context;
};

/// One query from the scene state, keys/values from the objects. Per head
/// a = softmax(q_h . K_h / sqrt(d_h)); fused = Wo [ctx_1..ctx_H] + bo (+ q when
/// residual). scores = mean over heads of a.
/// Throws kEmptyObjectSet for N = 0 and kInvalidShape on dimension mismatch.
FusionOutput fuse(const SceneState& scene, std::span<const ObjectEmbedding> objects,
                  const MhaParams& params, FusionCache* cache = nullptr);

/// fused = affine projection of the scene state; scores empty.
FusionOutput fuse_empty(const SceneState& scene, const MhaParams& params,
                        FusionCache* cache = nullptr);

/// Handles both the attention and the empty path. Accumulates parameter
/// gradients and returns dL/dscene. `dobjects` (object_dim x N) is filled when
/// non-null. `dscores` may be empty.
Vec fuse_backward(const FusionCache& cache, const Vec& dfused, const Vec& dscores,
                  const MhaParams& params, MhaParams& grad, Mat* dobjects = nullptr);

}  // namespace rare
