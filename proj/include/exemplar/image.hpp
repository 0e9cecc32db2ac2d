#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace exemplar {

// H x W x C raster with values in [0, 1], interleaved channel-last storage.
// C is 1 (gray) or 3 (RGB).
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> pixels;  // size height*width*channels
  std::string source_id;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        pixels(static_cast<std::size_t>(h) * w * c, fill) {}

  double& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  // Enforces the domain invariants (min size, channel count, value range).
  void validate() const;
};

// 8-bit image file I/O. Format is chosen by extension: .png, .ppm (P6), .pgm (P5).
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& img);

Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);
Image read_pnm(const std::string& path);
void write_pnm(const std::string& path, const Image& img);

}  // namespace exemplar
