#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rare/execution.hpp"
#include "rare/geometry.hpp"

namespace rare {

/// Dense channels x height x width map, row-major per channel.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  int stride = 1;  // downsampling factor relative to the detector input
  std::vector<double> values;

  FeatureMap() = default;
  FeatureMap(int channels, int height, int width, int stride);

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  double at(int c, int y, int x) const {
    return values[static_cast<std::size_t>(c) * plane_size() + static_cast<std::size_t>(y) * width + x];
  }
  double& at(int c, int y, int x) {
    return values[static_cast<std::size_t>(c) * plane_size() + static_cast<std::size_t>(y) * width + x];
  }
  std::span<const double> plane(int c) const {
    return {values.data() + static_cast<std::size_t>(c) * plane_size(), plane_size()};
  }

  /// Throws kInvalidShape if the dimensions and value count disagree or a
  /// value is not finite.
  void validate() const;
};

/// Spatial size of a map at the given stride: ceil(extent / stride).
int scaled_extent(int extent, int stride);

struct FeatureShapeSpec {
  int input_width = 640;
  int input_height = 640;
  int backbone_channels = 256;
  int backbone_stride = 32;
  int neck_channels = 256;
  std::vector<int> neck_strides = {8, 16, 32};

  void validate() const;
};

struct DetectorFeatures {
  FeatureMap backbone;
  std::vector<FeatureMap> neck;  // strictly increasing stride
};

/// Deterministic stand-in for the detector's intermediate maps.
///
/// Each map is the anti-aliased coverage of every box, blurred with a [1 2 1]
/// kernel, scaled per channel by a fixed signature with a mild positional
/// modulation, on top of low-amplitude hashed noise keyed by `scene_seed`.
/// Boxes are in detector-input pixel coordinates.
DetectorFeatures synthesize_features(std::span<const BoundingBox> boxes, std::uint64_t scene_seed,
                                     const FeatureShapeSpec& shapes,
                                     Execution exec = Execution::kParallel);

/// Amplitude of the hashed background noise.
inline constexpr double kFeatureNoiseAmplitude = 0.05;

}  // namespace rare
