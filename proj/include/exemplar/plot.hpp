#pragma once

#include <string>
#include <vector>

#include "exemplar/image.hpp"

namespace exemplar::plot {

struct Color {
  double r = 0, g = 0, b = 0;
};

// Fixed qualitative palette; index wraps.
Color palette(int i);

// Minimal software canvas: enough geometry and 5x7 text for the report
// figures (training curves, pies, scatters, bars).
class Canvas {
 public:
  Canvas(int height, int width, Color background = {1, 1, 1});

  int height() const { return img_.height; }
  int width() const { return img_.width; }
  const Image& image() const { return img_; }

  void set_pixel(int x, int y, Color c);
  void fill_rect(int x0, int y0, int x1, int y1, Color c);
  void line(int x0, int y0, int x1, int y1, Color c);
  void filled_circle(int cx, int cy, int r, Color c);
  // angles in radians, measured clockwise from 12 o'clock
  void pie_slice(int cx, int cy, int r, double a0, double a1, Color c);
  // scale 1 draws 5x7 glyphs; supports A-Z, a-z (folded), 0-9 and basic punctuation
  void text(int x, int y, const std::string& s, Color c, int scale = 1);

 private:
  Image img_;
};

struct Series {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

Image line_chart(const std::vector<Series>& series, const std::string& title,
                 const std::string& x_label, const std::string& y_label);
Image scatter_chart(const std::vector<Series>& series, const std::string& title,
                    const std::string& x_label, const std::string& y_label);
Image bar_chart(const std::vector<std::string>& names, const std::vector<double>& values,
                const std::vector<double>& errors, const std::string& title);
// labels/fractions aligned; fractions should sum to ~1
Image pie_chart(const std::vector<std::string>& labels, const std::vector<double>& fractions,
                const std::string& title);

}  // namespace exemplar::plot
