#pragma once

#include <array>

namespace rare {

/// Axis-aligned box in pixel coordinates of the frame it belongs to.
///
/// A plain aggregate so that raw (possibly degenerate) coordinates can still
/// be handed to operations that report their own errors, e.g. roi_align.
/// Use `checked` or `clamped` to obtain a box that satisfies x1 < x2, y1 < y2.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const;

  /// Throws kInvalidInput unless the coordinates are finite with positive extent.
  static BoundingBox checked(double x1, double y1, double x2, double y2);

  /// Clamps to [0,W]x[0,H], then validates. Boxes falling entirely outside
  /// the frame become degenerate and throw kInvalidInput.
  static BoundingBox clamped(double x1, double y1, double x2, double y2,
                             double frame_width, double frame_height);

  BoundingBox scaled(double sx, double sy) const {
    return {x1 * sx, y1 * sy, x2 * sx, y2 * sy};
  }

  std::array<double, 4> as_array() const { return {x1, y1, x2, y2}; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

}  // namespace rare
