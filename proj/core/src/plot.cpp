#include "wmlab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "wmlab/image_io.hpp"

namespace wmlab {
namespace {

struct Color {
  double r, g, b;
};

const Color kSeriesColors[] = {
    {0.12, 0.35, 0.75}, {0.85, 0.30, 0.10}, {0.15, 0.60, 0.25},
    {0.55, 0.20, 0.65}, {0.80, 0.60, 0.05}, {0.10, 0.60, 0.65},
};

// 5x7 bitmap glyphs for numeric labels.
const char* glyph(char c) {
  switch (c) {
    case '0': return "01110100011001110101110011000101110";
    case '1': return "00100011000010000100001000010001110";
    case '2': return "01110100010000100110010001000011111";
    case '3': return "01110100010000101110000011000101110";
    case '4': return "00010001100101010010111110001000010";
    case '5': return "11111100001111000001000011000101110";
    case '6': return "01110100011000011110100011000101110";
    case '7': return "11111000010001000100010001000010000";
    case '8': return "01110100011000101110100011000101110";
    case '9': return "01110100011000101111000011000101110";
    case '.': return "00000000000000000000000000110001100";
    case '-': return "00000000000000011111000000000000000";
    case '+': return "00000001000010011111001000010000000";
    case 'e': return "00000000000111010001111111000001111";
    case 'i': return "00100000000110000100001000010001110";
    case 'n': return "00000000001011011001100011000110001";
    case 'f': return "00110010010100011110010000100001000";
    default: return nullptr;
  }
}

void put_pixel(ImageGrid& img, int y, int x, const Color& c) {
  if (y < 0 || x < 0 || y >= img.height || x >= img.width) return;
  img.at(y, x, 0) = c.r;
  img.at(y, x, 1) = c.g;
  img.at(y, x, 2) = c.b;
}

void draw_text(ImageGrid& img, int y, int x, const std::string& text,
               const Color& c) {
  for (const char ch : text) {
    const char* bits = glyph(ch);
    if (bits) {
      for (int gy = 0; gy < 7; ++gy)
        for (int gx = 0; gx < 5; ++gx)
          if (bits[gy * 5 + gx] == '1') put_pixel(img, y + gy, x + gx, c);
    }
    x += 6;
  }
}

void draw_line(ImageGrid& img, double y0, double x0, double y1, double x1,
               const Color& c) {
  const int steps = static_cast<int>(
      std::ceil(std::max(std::abs(y1 - y0), std::abs(x1 - x0)))) + 1;
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    put_pixel(img, static_cast<int>(std::lround(y0 + (y1 - y0) * t)),
              static_cast<int>(std::lround(x0 + (x1 - x0) * t)), c);
  }
}

std::string format_tick(double v) {
  char buf[32];
  if (v != 0.0 && (std::abs(v) >= 1e4 || std::abs(v) < 1e-3))
    std::snprintf(buf, sizeof(buf), "%.1e", v);
  else
    std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Frame {
  int top = 16, left = 54, bottom = 28, right = 12;
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  int width = 0, height = 0;

  double px(double x) const {
    return left + (x - x_min) / (x_max - x_min) * (width - left - right);
  }
  double py(double y) const {
    return height - bottom -
           (y - y_min) / (y_max - y_min) * (height - top - bottom);
  }
};

void draw_axes(ImageGrid& img, const Frame& f) {
  const Color axis{0.25, 0.25, 0.25};
  const Color grid{0.88, 0.88, 0.88};
  const Color text{0.1, 0.1, 0.1};
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x_min + (f.x_max - f.x_min) * i / 4.0;
    const double yv = f.y_min + (f.y_max - f.y_min) * i / 4.0;
    draw_line(img, f.py(yv), f.left, f.py(yv), f.width - f.right, grid);
    draw_line(img, f.top, f.px(xv), f.height - f.bottom, f.px(xv), grid);
    draw_text(img, static_cast<int>(f.py(yv)) - 3, 4, format_tick(yv), text);
    draw_text(img, f.height - f.bottom + 6,
              static_cast<int>(f.px(xv)) - 10, format_tick(xv), text);
  }
  draw_line(img, f.top, f.left, f.height - f.bottom, f.left, axis);
  draw_line(img, f.height - f.bottom, f.left, f.height - f.bottom,
            f.width - f.right, axis);
}

Frame fit_frame(const std::vector<PlotSeries>& series, int width, int height) {
  Frame f;
  f.width = width;
  f.height = height;
  bool first = true;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double x = s.x[i], y = s.y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (first) {
        f.x_min = f.x_max = x;
        f.y_min = f.y_max = y;
        first = false;
      } else {
        f.x_min = std::min(f.x_min, x);
        f.x_max = std::max(f.x_max, x);
        f.y_min = std::min(f.y_min, y);
        f.y_max = std::max(f.y_max, y);
      }
    }
  if (first) {
    f.x_min = 0;
    f.x_max = 1;
    f.y_min = 0;
    f.y_max = 1;
  }
  if (f.x_max == f.x_min) f.x_max = f.x_min + 1.0;
  if (f.y_max == f.y_min) f.y_max = f.y_min + 1.0;
  const double pad = 0.04 * (f.y_max - f.y_min);
  f.y_min -= pad;
  f.y_max += pad;
  return f;
}

}  // namespace

ImageGrid render_line_chart(const std::vector<PlotSeries>& series, int width,
                            int height) {
  ImageGrid img(height, width, 3, 1.0);
  Frame f = fit_frame(series, width, height);
  draw_axes(img, f);
  for (std::size_t s = 0; s < series.size(); ++s) {
    const Color& c = kSeriesColors[s % std::size(kSeriesColors)];
    const auto& sr = series[s];
    for (std::size_t i = 0; i + 1 < sr.x.size(); ++i) {
      if (!std::isfinite(sr.y[i]) || !std::isfinite(sr.y[i + 1])) continue;
      draw_line(img, f.py(sr.y[i]), f.px(sr.x[i]), f.py(sr.y[i + 1]),
                f.px(sr.x[i + 1]), c);
    }
    for (std::size_t i = 0; i < sr.x.size(); ++i) {
      if (!std::isfinite(sr.y[i])) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          put_pixel(img, static_cast<int>(f.py(sr.y[i])) + dy,
                    static_cast<int>(f.px(sr.x[i])) + dx, c);
    }
    // Legend swatch (labels are in the emitting CSV; charts show colors).
    const int ly = 4 + static_cast<int>(s) * 8;
    for (int dx = 0; dx < 14; ++dx)
      put_pixel(img, ly, width - 60 + dx, c);
  }
  return img;
}

ImageGrid render_bar_chart(const std::vector<std::string>& groups,
                           const std::vector<PlotSeries>& series, int width,
                           int height) {
  ImageGrid img(height, width, 3, 1.0);
  Frame f;
  f.width = width;
  f.height = height;
  f.x_min = 0;
  f.x_max = static_cast<double>(groups.size());
  f.y_min = 0;
  f.y_max = 1e-9;
  for (const auto& s : series)
    for (const double v : s.y)
      if (std::isfinite(v)) f.y_max = std::max(f.y_max, v);
  f.y_max *= 1.05;
  draw_axes(img, f);

  const double group_w = (f.px(1) - f.px(0));
  const double bar_w =
      group_w / (static_cast<double>(series.size()) + 1.0);
  for (std::size_t s = 0; s < series.size(); ++s) {
    const Color& c = kSeriesColors[s % std::size(kSeriesColors)];
    for (std::size_t g = 0; g < series[s].y.size() && g < groups.size(); ++g) {
      const double v = series[s].y[g];
      if (!std::isfinite(v)) continue;
      const double x0 = f.px(static_cast<double>(g)) + bar_w * (s + 0.5);
      for (int x = static_cast<int>(x0); x < static_cast<int>(x0 + bar_w) - 1;
           ++x)
        for (int y = static_cast<int>(f.py(v)); y < f.height - f.bottom; ++y)
          put_pixel(img, y, x, c);
    }
  }
  return img;
}

void save_chart(const ImageGrid& chart, const std::string& path) {
  write_image(chart, path);
}

}  // namespace wmlab
