#include "rare/features.hpp"

#include <algorithm>
#include <cmath>

#include "kernels.hpp"
#include "rare/error.hpp"

namespace rare {

namespace {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

inline double channel_signature(int scale_key, int c) {
  return 0.5 + unit(mix64(0xC0FFEEULL + static_cast<std::uint64_t>(scale_key) * 1000003ULL +
                          static_cast<std::uint64_t>(c)));
}

// Value of one cell: hashed noise plus the box signal.
inline double feature_value(const FeatureMap& map, double mask, std::uint64_t plane_key, int c,
                            int y, int x, double signature) {
  const std::uint64_t h =
      mix64(plane_key + static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(map.width) +
            static_cast<std::uint64_t>(x));
  const double noise = kFeatureNoiseAmplitude * (2.0 * unit(h) - 1.0);
  double modulation = 0.0;
  switch (c % 3) {
    case 0: modulation = (x + 0.5) / map.width - 0.5; break;
    case 1: modulation = (y + 0.5) / map.height - 0.5; break;
    default: break;
  }
  return noise + mask * signature * (1.0 + 0.5 * modulation);
}

inline std::uint64_t plane_key(std::uint64_t seed, int scale_key, int c) {
  return mix64(mix64(seed ^ (static_cast<std::uint64_t>(scale_key + 1) * 0x5851f42d4c957f2dULL)) +
               static_cast<std::uint64_t>(c));
}

inline void fill_plane(FeatureMap& map, std::span<const double> mask, std::uint64_t seed,
                       int scale_key, int c) {
  const std::uint64_t key = plane_key(seed, scale_key, c);
  const double signature = channel_signature(scale_key, c);
  const std::size_t base = static_cast<std::size_t>(c) * map.plane_size();
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * map.width + x;
      map.values[base + i] = feature_value(map, mask[i], key, c, y, x, signature);
    }
  }
}

std::vector<double> coverage_1d(double lo, double hi, int cells, int stride) {
  std::vector<double> cov(cells, 0.0);
  for (int i = 0; i < cells; ++i) {
    const double a = std::max(lo, static_cast<double>(i) * stride);
    const double b = std::min(hi, static_cast<double>(i + 1) * stride);
    cov[i] = std::max(0.0, b - a) / stride;
  }
  return cov;
}

}  // namespace

namespace kernels {

std::vector<double> coverage_mask(std::span<const BoundingBox> boxes, int height, int width,
                                  int stride) {
  std::vector<double> raw(static_cast<std::size_t>(height) * width, 0.0);
  for (const auto& b : boxes) {
    const auto cx = coverage_1d(b.x1, b.x2, width, stride);
    const auto cy = coverage_1d(b.y1, b.y2, height, stride);
    for (int y = 0; y < height; ++y) {
      if (cy[y] == 0.0) continue;
      for (int x = 0; x < width; ++x) {
        raw[static_cast<std::size_t>(y) * width + x] += cy[y] * cx[x];
      }
    }
  }
  // separable [1 2 1] / 4, zero padded
  std::vector<double> tmp(raw.size(), 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      double v = 2.0 * raw[i];
      if (x > 0) v += raw[i - 1];
      if (x + 1 < width) v += raw[i + 1];
      tmp[i] = 0.25 * v;
    }
  }
  std::vector<double> out(raw.size(), 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      double v = 2.0 * tmp[i];
      if (y > 0) v += tmp[i - width];
      if (y + 1 < height) v += tmp[i + width];
      out[i] = 0.25 * v;
    }
  }
  return out;
}

namespace serial {
void fill_feature_map(FeatureMap& map, std::span<const double> mask, std::uint64_t seed,
                      int scale_key) {
  for (int c = 0; c < map.channels; ++c) fill_plane(map, mask, seed, scale_key, c);
}
}  // namespace serial

namespace omp {
void fill_feature_map(FeatureMap& map, std::span<const double> mask, std::uint64_t seed,
                      int scale_key) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < map.channels; ++c) fill_plane(map, mask, seed, scale_key, c);
}
}  // namespace omp

}  // namespace kernels

FeatureMap::FeatureMap(int channels, int height, int width, int stride)
    : channels(channels),
      height(height),
      width(width),
      stride(stride),
      values(static_cast<std::size_t>(channels) * height * width, 0.0) {}

void FeatureMap::validate() const {
  if (channels <= 0 || height <= 0 || width <= 0 || stride <= 0) {
    throw Error(ErrorCode::kInvalidShape, "feature map dimensions must be positive");
  }
  if (values.size() != static_cast<std::size_t>(channels) * height * width) {
    throw Error(ErrorCode::kInvalidShape, "feature map value count does not match its shape");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidShape, "feature map holds non-finite values");
  }
}

int scaled_extent(int extent, int stride) { return (extent + stride - 1) / stride; }

void FeatureShapeSpec::validate() const {
  if (input_width <= 0 || input_height <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "input size must be positive");
  }
  if (backbone_channels <= 0 || backbone_stride <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "backbone shape must be positive");
  }
  if (neck_channels <= 0 || neck_strides.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "neck shape must list at least one scale");
  }
  for (std::size_t i = 0; i < neck_strides.size(); ++i) {
    if (neck_strides[i] <= 0 || (i > 0 && neck_strides[i] <= neck_strides[i - 1])) {
      throw Error(ErrorCode::kInvalidConfig, "neck strides must be positive and strictly increasing");
    }
  }
}

namespace {

FeatureMap make_map(std::span<const BoundingBox> boxes, std::uint64_t seed, int channels,
                    int stride, int scale_key, const FeatureShapeSpec& shapes, Execution exec) {
  FeatureMap map(channels, scaled_extent(shapes.input_height, stride),
                 scaled_extent(shapes.input_width, stride), stride);
  const auto mask = kernels::coverage_mask(boxes, map.height, map.width, stride);
  if (exec == Execution::kParallel) {
    kernels::omp::fill_feature_map(map, mask, seed, scale_key);
  } else {
    kernels::serial::fill_feature_map(map, mask, seed, scale_key);
  }
  return map;
}

}  // namespace

DetectorFeatures synthesize_features(std::span<const BoundingBox> boxes, std::uint64_t scene_seed,
                                     const FeatureShapeSpec& shapes, Execution exec) {
  shapes.validate();
  DetectorFeatures out;
  out.backbone = make_map(boxes, scene_seed, shapes.backbone_channels, shapes.backbone_stride, 0,
                          shapes, exec);
  out.neck.reserve(shapes.neck_strides.size());
  for (std::size_t i = 0; i < shapes.neck_strides.size(); ++i) {
    out.neck.push_back(make_map(boxes, scene_seed, shapes.neck_channels, shapes.neck_strides[i],
                                static_cast<int>(i) + 1, shapes, exec));
  }
  return out;
}

}  // namespace rare
