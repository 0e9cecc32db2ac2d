#include "exemplar/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace exemplar {

namespace {

std::uint8_t to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void Image::validate() const {
  if (height < 8 || width < 8)
    throw std::invalid_argument("Image: height and width must be >= 8, got " +
                                std::to_string(height) + "x" + std::to_string(width));
  if (channels != 1 && channels != 3)
    throw std::invalid_argument("Image: channels must be 1 or 3, got " +
                                std::to_string(channels));
  if (pixels.size() != static_cast<std::size_t>(height) * width * channels)
    throw std::invalid_argument("Image: pixel buffer size does not match shape");
  for (double v : pixels)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("Image: pixel value outside [0,1]");
}

Image read_image(const std::string& path) {
  if (ends_with(path, ".png")) return read_png(path);
  if (ends_with(path, ".ppm") || ends_with(path, ".pgm")) return read_pnm(path);
  throw std::runtime_error("read_image: unsupported file type: " + path);
}

void write_image(const std::string& path, const Image& img) {
  if (ends_with(path, ".png")) return write_png(path, img);
  if (ends_with(path, ".ppm") || ends_with(path, ".pgm")) return write_pnm(path, img);
  throw std::runtime_error("write_image: unsupported file type: " + path);
}

Image read_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("read_png: cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("read_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("read_png: failed to decode " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("read_png: unsupported channel count in " + path);
  }

  std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * channels);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  Image img(static_cast<int>(h), static_cast<int>(w), channels);
  img.source_id = path;
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0;
  return img;
}

void write_png(const std::string& path, const Image& img) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("write_png: cannot open " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("write_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("write_png: failed to encode " + path);
  }
  png_init_io(png, fp);
  const int color = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, img.width, img.height, 8, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        row[static_cast<std::size_t>(x) * img.channels + c] = to_byte(img.at(y, x, c));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

Image read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pnm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6" && magic != "P5")
    throw std::runtime_error("read_pnm: not a binary PPM/PGM file: " + path);
  const int channels = magic == "P6" ? 3 : 1;

  auto next_int = [&in, &path]() {
    // Skips whitespace and '#' comment lines between header fields.
    int c;
    while ((c = in.peek()) != EOF) {
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    int v;
    if (!(in >> v)) throw std::runtime_error("read_pnm: malformed header in " + path);
    return v;
  };

  const int w = next_int();
  const int h = next_int();
  const int maxval = next_int();
  if (maxval != 255) throw std::runtime_error("read_pnm: only 8-bit files supported: " + path);
  in.get();  // single whitespace after header

  std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw std::runtime_error("read_pnm: truncated pixel data in " + path);

  Image img(h, w, channels);
  img.source_id = path;
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0;
  return img;
}

void write_pnm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pnm: cannot open " + path);
  out << (img.channels == 3 ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> raw(img.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = to_byte(img.pixels[i]);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

}  // namespace exemplar
