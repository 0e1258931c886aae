#pragma once

#include <optional>
#include <span>

#include "rare/detector.hpp"
#include "rare/image.hpp"

namespace rare {

inline constexpr Rgb kBoxColor{0, 200, 0};
inline constexpr Rgb kTopAttentionColor{230, 0, 0};
inline constexpr Rgb kSecondAttentionColor{255, 140, 0};

/// Draws detections (detector-input coordinates, rescaled to the image):
/// green boxes, the highest attention score in red, the second in orange.
void draw_attention_overlay(Image& image, std::span<const Detection> detections,
                            std::span<const double> attention, int input_width, int input_height);

/// Risk curve in blue over frames, red dotted vertical line at the onset and
/// black dotted horizontal line at the threshold.
Image render_risk_curve(std::span<const double> scores, std::optional<int> onset, double threshold,
                        int width = 640, int height = 240);

}  // namespace rare
