#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace rare {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // RGB, row-major

  Image() = default;
  Image(int width, int height, Rgb fill = {});

  void set(int x, int y, Rgb c);
  Rgb get(int x, int y) const;
};

void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

void draw_rect(Image& image, int x1, int y1, int x2, int y2, Rgb color, int thickness = 1);
void fill_rect(Image& image, int x1, int y1, int x2, int y2, Rgb color);
/// Bresenham line; `dash` > 0 draws dash-on/dash-off segments.
void draw_line(Image& image, int x1, int y1, int x2, int y2, Rgb color, int dash = 0);

}  // namespace rare
