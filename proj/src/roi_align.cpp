#include <algorithm>
#include <cmath>
#include <sstream>

#include "kernels.hpp"
#include "rare/error.hpp"
#include "rare/object_encoder.hpp"

namespace rare {

namespace {

// Bilinear read with the usual RoI Align border rule.
inline double bilinear(std::span<const double> plane, int height, int width, double y, double x) {
  if (y < -1.0 || y > height || x < -1.0 || x > width) return 0.0;
  y = std::max(y, 0.0);
  x = std::max(x, 0.0);
  int y_low = static_cast<int>(y);
  int x_low = static_cast<int>(x);
  int y_high, x_high;
  if (y_low >= height - 1) {
    y_high = y_low = height - 1;
    y = y_low;
  } else {
    y_high = y_low + 1;
  }
  if (x_low >= width - 1) {
    x_high = x_low = width - 1;
    x = x_low;
  } else {
    x_high = x_low + 1;
  }
  const double ly = y - y_low, lx = x - x_low;
  const double hy = 1.0 - ly, hx = 1.0 - lx;
  const auto at = [&](int yy, int xx) { return plane[static_cast<std::size_t>(yy) * width + xx]; };
  return hy * hx * at(y_low, x_low) + hy * lx * at(y_low, x_high) + ly * hx * at(y_high, x_low) +
         ly * lx * at(y_high, x_high);
}

struct MappedBox {
  double x0, y0, bin_w, bin_h;
};

MappedBox map_box(const BoundingBox& box, int stride, int out_size) {
  const double s = static_cast<double>(stride);
  const double x1 = box.x1 / s, y1 = box.y1 / s, x2 = box.x2 / s, y2 = box.y2 / s;
  const double w = x2 - x1, h = y2 - y1;
  if (!(w > 0.0) || !(h > 0.0)) {
    std::ostringstream os;
    os << "degenerate RoI (" << box.x1 << ", " << box.y1 << ", " << box.x2 << ", " << box.y2
       << ") at stride " << stride;
    throw Error(ErrorCode::kDegenerateBox, os.str());
  }
  return {x1, y1, w / out_size, h / out_size};
}

// One channel of one box: out_size^2 bins.
inline void align_channel(const FeatureMap& map, int c, const MappedBox& m, int out_size,
                          int ratio, double* out) {
  const auto plane = map.plane(c);
  const double inv = 1.0 / (ratio * ratio);
  for (int py = 0; py < out_size; ++py) {
    for (int px = 0; px < out_size; ++px) {
      double acc = 0.0;
      for (int iy = 0; iy < ratio; ++iy) {
        const double y = m.y0 + py * m.bin_h + (iy + 0.5) * m.bin_h / ratio;
        for (int ix = 0; ix < ratio; ++ix) {
          const double x = m.x0 + px * m.bin_w + (ix + 0.5) * m.bin_w / ratio;
          acc += bilinear(plane, map.height, map.width, y, x);
        }
      }
      out[py * out_size + px] = acc * inv;
    }
  }
}

void check_args(const FeatureMap& map, int out_size, int sampling_ratio) {
  if (out_size < 1 || sampling_ratio < 1) {
    throw Error(ErrorCode::kInvalidInput, "roi_align needs out_size >= 1 and sampling_ratio >= 1");
  }
  if (map.channels <= 0 || map.height <= 0 || map.width <= 0 || map.stride <= 0 ||
      map.values.size() != static_cast<std::size_t>(map.channels) * map.plane_size()) {
    throw Error(ErrorCode::kInvalidShape, "roi_align on a malformed feature map");
  }
}

}  // namespace

namespace kernels {

namespace serial {
void roi_align_boxes(const FeatureMap& map, std::span<const BoundingBox> boxes, int out_size,
                     int sampling_ratio, double* out) {
  const std::size_t bins = static_cast<std::size_t>(out_size) * out_size;
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const auto m = map_box(boxes[b], map.stride, out_size);
    for (int c = 0; c < map.channels; ++c) {
      align_channel(map, c, m, out_size, sampling_ratio, out + (b * map.channels + c) * bins);
    }
  }
}
}  // namespace serial

namespace omp {
void roi_align_boxes(const FeatureMap& map, std::span<const BoundingBox> boxes, int out_size,
                     int sampling_ratio, double* out) {
  const std::size_t bins = static_cast<std::size_t>(out_size) * out_size;
  std::vector<MappedBox> mapped;
  mapped.reserve(boxes.size());
  for (const auto& b : boxes) mapped.push_back(map_box(b, map.stride, out_size));
  const long total = static_cast<long>(boxes.size()) * map.channels;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < total; ++i) {
    const std::size_t b = static_cast<std::size_t>(i / map.channels);
    const int c = static_cast<int>(i % map.channels);
    align_channel(map, c, mapped[b], out_size, sampling_ratio,
                  out + (b * map.channels + c) * bins);
  }
}
}  // namespace omp

}  // namespace kernels

std::vector<double> roi_align(const FeatureMap& map, const BoundingBox& box, int out_size,
                              int sampling_ratio) {
  return roi_align_boxes(map, std::span<const BoundingBox>(&box, 1), out_size, sampling_ratio,
                         Execution::kSerial);
}

std::vector<double> roi_align_boxes(const FeatureMap& map, std::span<const BoundingBox> boxes,
                                    int out_size, int sampling_ratio, Execution exec) {
  check_args(map, out_size, sampling_ratio);
  std::vector<double> out(boxes.size() * map.channels * out_size * out_size);
  if (exec == Execution::kParallel) {
    kernels::omp::roi_align_boxes(map, boxes, out_size, sampling_ratio, out.data());
  } else {
    kernels::serial::roi_align_boxes(map, boxes, out_size, sampling_ratio, out.data());
  }
  return out;
}

std::vector<const FeatureMap*> roi_sources(const DetectionOutput& out, const RoIConfig& cfg) {
  std::vector<const FeatureMap*> maps;
  if (cfg.use_backbone) maps.push_back(&out.backbone);
  if (cfg.use_neck) {
    for (const auto& m : out.neck) maps.push_back(&m);
  }
  return maps;
}

std::vector<std::vector<RoIPatch>> pool_objects(const DetectionOutput& out,
                                                std::span<const BoundingBox> boxes,
                                                const RoIConfig& cfg, Execution exec) {
  const auto maps = roi_sources(out, cfg);
  if (maps.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "RoI pooling needs backbone or neck features");
  }
  const int bins = cfg.out_size * cfg.out_size;
  std::vector<std::vector<RoIPatch>> result(boxes.size());
  for (const FeatureMap* map : maps) {
    const auto pooled = roi_align_boxes(*map, boxes, cfg.out_size, cfg.sampling_ratio, exec);
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      RoIPatch patch;
      patch.size = cfg.out_size;
      patch.source_scales = {map->stride};
      // pooled is channel-major per box, i.e. a row-major channels x bins block
      patch.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                    Eigen::RowMajor>>(
          pooled.data() + b * map->channels * bins, map->channels, bins);
      result[b].push_back(std::move(patch));
    }
  }
  return result;
}

}  // namespace rare
