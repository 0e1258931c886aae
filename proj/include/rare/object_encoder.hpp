#pragma once

#include <random>
#include <span>
#include <vector>

#include "rare/detector.hpp"
#include "rare/execution.hpp"
#include "rare/features.hpp"
#include "rare/geometry.hpp"
#include "rare/nn.hpp"

namespace rare {

// ---------------------------------------------------------------------------
// RoI Align

/// Bilinear RoI Align of one box on one map.
///
/// The box (detector-input pixels) is divided by the map stride without
/// rounding and split into out_size x out_size bins; every bin averages
/// sampling_ratio^2 regularly spaced bilinear samples. Samples outside
/// [-1, H] x [-1, W] read as 0, samples inside are clamped to the grid.
/// Returns channels x out_size x out_size values, row-major per channel.
/// Throws kDegenerateBox for a box with non-positive mapped width or height.
std::vector<double> roi_align(const FeatureMap& map, const BoundingBox& box, int out_size,
                              int sampling_ratio);

/// RoI Align of many boxes on one map. Output is boxes x channels x P x P.
std::vector<double> roi_align_boxes(const FeatureMap& map, std::span<const BoundingBox> boxes,
                                    int out_size, int sampling_ratio,
                                    Execution exec = Execution::kParallel);

/// Pooled object features: all scales concatenated along channels.
struct RoIPatch {
  int size = 7;
  Mat values;  // channels x (size*size)
  std::vector<int> source_scales;  // strides, in concatenation order

  int channels() const { return static_cast<int>(values.rows()); }
};

struct RoIConfig {
  int out_size = 7;
  int sampling_ratio = 2;
  bool use_backbone = true;
  bool use_neck = true;
};

/// Maps that RoI Align reads for the given toggles, backbone first.
std::vector<const FeatureMap*> roi_sources(const DetectionOutput& out, const RoIConfig& cfg);

/// Pools every box of `boxes` on every enabled scale. One single-scale patch
/// per (box, scale); result[box][scale].
std::vector<std::vector<RoIPatch>> pool_objects(const DetectionOutput& out,
                                                std::span<const BoundingBox> boxes,
                                                const RoIConfig& cfg,
                                                Execution exec = Execution::kParallel);

// ---------------------------------------------------------------------------
// CBAM

struct CbamParams {
  Linear mlp_in;   // C -> C/r
  Linear mlp_out;  // C/r -> C
  Vec conv_weight;  // 2 x k x k, input channels (mean, max)
  Vec conv_bias;    // 1
  int kernel = 7;

  CbamParams() = default;
  CbamParams(int channels, int reduction, int kernel = 7);

  int channels() const { return mlp_in.in_dim(); }
  void visit(std::string_view prefix, const ParamVisitor& f);
  void init(std::mt19937_64& rng);
};

struct CbamCache {
  int size = 0;
  Mat x;
  Vec avg, max;
  Eigen::VectorXi max_idx;
  Vec hidden_avg, hidden_max;  // pre-activation
  Vec channel_gate;
  Mat x1;
  Vec spatial_mean, spatial_max;
  Eigen::VectorXi spatial_max_idx;
  Vec spatial_gate;
};

/// Channel attention then spatial attention; `x` is channels x (size*size).
/// Throws kInvalidShape if the channel count disagrees with `params`.
Mat cbam(const Mat& x, int size, const CbamParams& params, CbamCache* cache = nullptr);

/// Accumulates parameter gradients; returns dL/dx.
Mat cbam_backward(const CbamCache& cache, const Mat& dy, const CbamParams& params,
                  CbamParams& grad);

// ---------------------------------------------------------------------------
// Object embedding

struct ObjectEmbedding {
  Vec values;
  std::array<double, 4> box_norm{};
};

struct EmbedParams {
  CbamParams cbam;
  Linear box;  // 4 -> box_embed_dim
  Linear fc1;  // channels + box_embed_dim -> object_dim
  Linear fc2;  // object_dim -> object_dim

  EmbedParams() = default;
  EmbedParams(int channels, int reduction, int box_embed_dim, int object_dim);

  int object_dim() const { return fc2.out_dim(); }
  void visit(std::string_view prefix, const ParamVisitor& f);
  void init(std::mt19937_64& rng);
};

struct EmbedCache {
  CbamCache cbam;
  Vec pooled;
  Vec box_norm;
  Vec box_embed;
  Vec joint;
  Vec hidden_pre;
};

/// Concatenates a box's per-scale patches along channels.
/// Throws kInvalidInput if the patch strides differ from `expected_scales`.
RoIPatch concat_patches(std::span<const RoIPatch> patches, std::span<const int> expected_scales);

/// CBAM on the concatenated patch, spatial mean, joined with the affine box
/// embedding of the normalized coordinates, then fc1 -> ReLU -> fc2.
ObjectEmbedding embed_object(const RoIPatch& patch, const BoundingBox& box, double frame_width,
                             double frame_height, const EmbedParams& params,
                             EmbedCache* cache = nullptr);

/// Accumulates parameter gradients. If `dpatch` is non-null it receives dL/dpatch.
void embed_object_backward(const EmbedCache& cache, const Vec& dembed, const EmbedParams& params,
                           EmbedParams& grad, Mat* dpatch = nullptr);

}  // namespace rare
