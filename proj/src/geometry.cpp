#include "rare/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rare/error.hpp"

namespace rare {

bool BoundingBox::valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
         x1 < x2 && y1 < y2;
}

BoundingBox BoundingBox::checked(double x1, double y1, double x2, double y2) {
  BoundingBox b{x1, y1, x2, y2};
  if (!b.valid()) {
    std::ostringstream os;
    os << "invalid box (" << x1 << ", " << y1 << ", " << x2 << ", " << y2 << ")";
    throw Error(ErrorCode::kInvalidInput, os.str());
  }
  return b;
}

BoundingBox BoundingBox::clamped(double x1, double y1, double x2, double y2, double frame_width,
                                 double frame_height) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) || !std::isfinite(y2)) {
    throw Error(ErrorCode::kInvalidInput, "box coordinates must be finite");
  }
  return checked(std::clamp(x1, 0.0, frame_width), std::clamp(y1, 0.0, frame_height),
                 std::clamp(x2, 0.0, frame_width), std::clamp(y2, 0.0, frame_height));
}

}  // namespace rare
