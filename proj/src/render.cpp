#include "rare/render.hpp"

#include <algorithm>
#include <cmath>

#include "rare/error.hpp"

namespace rare {

void draw_attention_overlay(Image& image, std::span<const Detection> detections,
                            std::span<const double> attention, int input_width, int input_height) {
  if (!detections.empty() && attention.size() != detections.size()) {
    throw Error(ErrorCode::kInvalidInput, "one attention score per detection expected");
  }
  const double sx = static_cast<double>(image.width) / input_width;
  const double sy = static_cast<double>(image.height) / input_height;

  std::vector<std::size_t> order(detections.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return attention[a] > attention[b]; });

  // ranked boxes last so they stay visible on overlap
  for (std::size_t r = order.size(); r-- > 0;) {
    const auto& b = detections[order[r]].box;
    const Rgb color = r == 0 ? kTopAttentionColor : r == 1 ? kSecondAttentionColor : kBoxColor;
    draw_rect(image, static_cast<int>(std::lround(b.x1 * sx)), static_cast<int>(std::lround(b.y1 * sy)),
              static_cast<int>(std::lround(b.x2 * sx)), static_cast<int>(std::lround(b.y2 * sy)),
              color, r < 2 ? 2 : 1);
  }
}

Image render_risk_curve(std::span<const double> scores, std::optional<int> onset, double threshold,
                        int width, int height) {
  if (width < 32 || height < 32) throw Error(ErrorCode::kInvalidInput, "risk curve too small");
  Image img(width, height, {255, 255, 255});
  const int margin = 10;
  const int plot_w = width - 2 * margin;
  const int plot_h = height - 2 * margin;
  const auto px = [&](double frame) {
    const double span = scores.size() > 1 ? static_cast<double>(scores.size() - 1) : 1.0;
    return margin + static_cast<int>(std::lround((frame - 1.0) / span * plot_w));
  };
  const auto py = [&](double v) {
    return margin + static_cast<int>(std::lround((1.0 - std::clamp(v, 0.0, 1.0)) * plot_h));
  };

  draw_rect(img, margin, margin, margin + plot_w, margin + plot_h, {160, 160, 160});
  draw_line(img, margin, py(threshold), margin + plot_w, py(threshold), {0, 0, 0}, 4);
  if (onset && !scores.empty()) {
    draw_line(img, px(*onset), margin, px(*onset), margin + plot_h, {220, 0, 0}, 4);
  }
  const Rgb blue{0, 60, 220};
  for (std::size_t i = 1; i < scores.size(); ++i) {
    draw_line(img, px(static_cast<double>(i)), py(scores[i - 1]), px(static_cast<double>(i + 1)),
              py(scores[i]), blue);
  }
  if (scores.size() == 1) fill_rect(img, px(1) - 1, py(scores[0]) - 1, px(1) + 1, py(scores[0]) + 1, blue);
  return img;
}

}  // namespace rare
