#include "exemplar/plot.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace exemplar::plot {

namespace {

// 5x7 glyphs, one row per byte (low 5 bits used).
struct Glyph {
  char ch;
  std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
    {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
    {'%', {0x19, 0x1A, 0x02, 0x04, 0x08, 0x0B, 0x13}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
};

const Glyph* find_glyph(char c) {
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  for (const auto& g : kFont)
    if (g.ch == c) return &g;
  return nullptr;
}

constexpr Color kColors[] = {
    {0.20, 0.47, 0.72}, {0.89, 0.47, 0.13}, {0.30, 0.69, 0.29}, {0.84, 0.15, 0.16},
    {0.58, 0.40, 0.74}, {0.55, 0.34, 0.29}, {0.89, 0.47, 0.76}, {0.50, 0.50, 0.50},
};

}  // namespace

Color palette(int i) {
  const int n = static_cast<int>(sizeof(kColors) / sizeof(kColors[0]));
  return kColors[((i % n) + n) % n];
}

Canvas::Canvas(int height, int width, Color background) : img_(height, width, 3) {
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      img_.at(y, x, 0) = background.r;
      img_.at(y, x, 1) = background.g;
      img_.at(y, x, 2) = background.b;
    }
}

void Canvas::set_pixel(int x, int y, Color c) {
  if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
  img_.at(y, x, 0) = c.r;
  img_.at(y, x, 1) = c.g;
  img_.at(y, x, 2) = c.b;
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Color c) {
  for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
    for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set_pixel(x, y, c);
}

void Canvas::line(int x0, int y0, int x1, int y1, Color c) {
  // Bresenham
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  int x = x0, y = y0;
  while (true) {
    set_pixel(x, y, c);
    if (x == x1 && y == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
}

void Canvas::filled_circle(int cx, int cy, int r, Color c) {
  for (int y = cy - r; y <= cy + r; ++y)
    for (int x = cx - r; x <= cx + r; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) set_pixel(x, y, c);
}

void Canvas::pie_slice(int cx, int cy, int r, double a0, double a1, Color c) {
  const double two_pi = 2.0 * std::numbers::pi;
  for (int y = cy - r; y <= cy + r; ++y)
    for (int x = cx - r; x <= cx + r; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy > static_cast<double>(r) * r) continue;
      double ang = std::atan2(dx, -dy);  // clockwise from 12 o'clock
      if (ang < 0) ang += two_pi;
      if (ang >= a0 && ang < a1) set_pixel(x, y, c);
    }
}

void Canvas::text(int x, int y, const std::string& s, Color c, int scale) {
  int cx = x;
  for (char ch : s) {
    if (const Glyph* g = find_glyph(ch)) {
      for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
          if (g->rows[row] & (1 << (4 - col)))
            fill_rect(cx + col * scale, y + row * scale, cx + col * scale + scale - 1,
                      y + row * scale + scale - 1, c);
    }
    cx += 6 * scale;
  }
}

namespace {

struct Range {
  double lo = 0, hi = 1;
  double span() const { return hi - lo; }
};

Range nice_range(double lo, double hi) {
  if (!(hi > lo)) {
    hi = lo + 1;
    lo -= 1;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::string format_num(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(3);
  os << v;
  return os.str();
}

constexpr int kW = 640, kH = 420, kMarginL = 64, kMarginR = 20, kMarginT = 36, kMarginB = 44;

struct Axes {
  Range xr, yr;
  int px(double x) const {
    return kMarginL +
           static_cast<int>((x - xr.lo) / xr.span() * (kW - kMarginL - kMarginR));
  }
  int py(double y) const {
    return kH - kMarginB -
           static_cast<int>((y - yr.lo) / yr.span() * (kH - kMarginT - kMarginB));
  }
};

void draw_frame(Canvas& canvas, const Axes& ax, const std::string& title,
                const std::string& x_label, const std::string& y_label) {
  const Color black{0, 0, 0};
  canvas.line(kMarginL, kMarginT, kMarginL, kH - kMarginB, black);
  canvas.line(kMarginL, kH - kMarginB, kW - kMarginR, kH - kMarginB, black);
  canvas.text(kMarginL, 12, title, black);
  canvas.text(kW / 2 - 3 * static_cast<int>(x_label.size()), kH - 14, x_label, black);
  canvas.text(4, kMarginT - 14, y_label, black);
  for (int t = 0; t <= 4; ++t) {
    const double xv = ax.xr.lo + ax.xr.span() * t / 4;
    const double yv = ax.yr.lo + ax.yr.span() * t / 4;
    canvas.line(ax.px(xv), kH - kMarginB, ax.px(xv), kH - kMarginB + 4, black);
    canvas.text(ax.px(xv) - 10, kH - kMarginB + 8, format_num(xv), black);
    canvas.line(kMarginL - 4, ax.py(yv), kMarginL, ax.py(yv), black);
    canvas.text(4, ax.py(yv) - 3, format_num(yv), black);
  }
}

Axes fit_axes(const std::vector<Series>& series) {
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      xlo = std::min(xlo, s.xs[i]);
      xhi = std::max(xhi, s.xs[i]);
      ylo = std::min(ylo, s.ys[i]);
      yhi = std::max(yhi, s.ys[i]);
    }
  if (xlo > xhi) {
    xlo = 0;
    xhi = 1;
    ylo = 0;
    yhi = 1;
  }
  return {nice_range(xlo, xhi), nice_range(ylo, yhi)};
}

void draw_legend(Canvas& canvas, const std::vector<Series>& series) {
  int y = kMarginT + 4;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const Color c = palette(static_cast<int>(s));
    canvas.fill_rect(kW - kMarginR - 120, y, kW - kMarginR - 110, y + 7, c);
    canvas.text(kW - kMarginR - 105, y, series[s].name, {0, 0, 0});
    y += 12;
  }
}

}  // namespace

Image line_chart(const std::vector<Series>& series, const std::string& title,
                 const std::string& x_label, const std::string& y_label) {
  Canvas canvas(kH, kW);
  const Axes ax = fit_axes(series);
  draw_frame(canvas, ax, title, x_label, y_label);
  for (std::size_t s = 0; s < series.size(); ++s) {
    const Color c = palette(static_cast<int>(s));
    for (std::size_t i = 1; i < series[s].xs.size(); ++i)
      canvas.line(ax.px(series[s].xs[i - 1]), ax.py(series[s].ys[i - 1]),
                  ax.px(series[s].xs[i]), ax.py(series[s].ys[i]), c);
  }
  draw_legend(canvas, series);
  return canvas.image();
}

Image scatter_chart(const std::vector<Series>& series, const std::string& title,
                    const std::string& x_label, const std::string& y_label) {
  Canvas canvas(kH, kW);
  const Axes ax = fit_axes(series);
  draw_frame(canvas, ax, title, x_label, y_label);
  for (std::size_t s = 0; s < series.size(); ++s) {
    const Color c = palette(static_cast<int>(s));
    for (std::size_t i = 0; i < series[s].xs.size(); ++i)
      canvas.filled_circle(ax.px(series[s].xs[i]), ax.py(series[s].ys[i]), 3, c);
  }
  draw_legend(canvas, series);
  return canvas.image();
}

Image bar_chart(const std::vector<std::string>& names, const std::vector<double>& values,
                const std::vector<double>& errors, const std::string& title) {
  Canvas canvas(kH, kW);
  double hi = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    hi = std::max(hi, values[i] + (i < errors.size() ? errors[i] : 0.0));
  Axes ax{{-0.5, static_cast<double>(values.size()) - 0.5}, nice_range(0.0, hi)};
  draw_frame(canvas, ax, title, "", "");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Color c = palette(static_cast<int>(i));
    const int x0 = ax.px(static_cast<double>(i) - 0.3);
    const int x1 = ax.px(static_cast<double>(i) + 0.3);
    canvas.fill_rect(x0, ax.py(values[i]), x1, ax.py(0.0), c);
    if (i < errors.size() && errors[i] > 0) {
      const int xc = (x0 + x1) / 2;
      canvas.line(xc, ax.py(values[i] - errors[i]), xc, ax.py(values[i] + errors[i]), {0, 0, 0});
    }
    canvas.text((x0 + x1) / 2 - 3 * static_cast<int>(names[i].size()), kH - kMarginB + 18,
                names[i], {0, 0, 0});
  }
  return canvas.image();
}

Image pie_chart(const std::vector<std::string>& labels, const std::vector<double>& fractions,
                const std::string& title) {
  Canvas canvas(420, 420);
  canvas.text(20, 12, title, {0, 0, 0});
  const int cx = 180, cy = 220, r = 140;
  double angle = 0.0;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double next = angle + fractions[i] * two_pi;
    canvas.pie_slice(cx, cy, r, angle, next, palette(static_cast<int>(i)));
    angle = next;
  }
  int y = 60;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    canvas.fill_rect(340, y, 350, y + 7, palette(static_cast<int>(i)));
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(3);
    os << labels[i] << " " << fractions[i] * 100 << "%";
    canvas.text(354, y, os.str(), {0, 0, 0});
    y += 14;
  }
  return canvas.image();
}

}  // namespace exemplar::plot
