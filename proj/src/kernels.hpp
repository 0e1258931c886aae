#pragma once

// Serial reference kernels and their OpenMP counterparts. Each output element
// is produced by the same inline routine in both versions, so results are
// bit-identical; only the loop distribution differs.

#include <cstdint>
#include <span>
#include <vector>

#include "rare/features.hpp"
#include "rare/geometry.hpp"

namespace rare::kernels {

/// Blurred coverage mask of all boxes on a height x width grid with the given stride.
std::vector<double> coverage_mask(std::span<const BoundingBox> boxes, int height, int width,
                                  int stride);

namespace serial {
void fill_feature_map(FeatureMap& map, std::span<const double> mask, std::uint64_t seed,
                      int scale_key);
void roi_align_boxes(const FeatureMap& map, std::span<const BoundingBox> boxes, int out_size,
                     int sampling_ratio, double* out);
}  // namespace serial

namespace omp {
void fill_feature_map(FeatureMap& map, std::span<const double> mask, std::uint64_t seed,
                      int scale_key);
void roi_align_boxes(const FeatureMap& map, std::span<const BoundingBox> boxes, int out_size,
                     int sampling_ratio, double* out);
}  // namespace omp

}  // namespace rare::kernels
