#include "exemplar/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>

#include "exemplar/rng.hpp"

namespace fs = std::filesystem;

namespace exemplar::data {

int LabeledImageSet::num_classes() const {
  int m = -1;
  for (int l : labels) m = std::max(m, l);
  return m + 1;
}

void LabeledImageSet::validate() const {
  if (images.size() != labels.size())
    throw std::invalid_argument("LabeledImageSet: image/label count mismatch");
  for (int l : labels)
    if (l < 0) throw std::invalid_argument("LabeledImageSet: negative label");
  if (!class_names.empty()) {
    for (int l : labels)
      if (l >= static_cast<int>(class_names.size()))
        throw std::invalid_argument("LabeledImageSet: label exceeds class count");
  }
}

namespace {

bool is_image_file(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

LabeledImageSet load_directory_per_class(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("load_dataset: missing path: " + path);
  std::vector<std::string> class_dirs;
  for (const auto& e : fs::directory_iterator(path))
    if (e.is_directory()) class_dirs.push_back(e.path().filename().string());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) throw std::runtime_error("load_dataset: no classes found in " + path);

  LabeledImageSet set;
  set.class_names = class_dirs;
  for (int label = 0; label < static_cast<int>(class_dirs.size()); ++label) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(fs::path(path) / class_dirs[label]))
      if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw std::runtime_error("load_dataset: empty class directory: " + class_dirs[label]);
    for (const auto& f : files) {
      set.images.push_back(read_image(f));
      set.labels.push_back(label);
    }
  }
  return set;
}

LabeledImageSet load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: missing path: " + path);
  const fs::path root = fs::path(path).parent_path();

  LabeledImageSet set;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("load_dataset: manifest line " + std::to_string(line_no) +
                               " has no tab separator");
    const std::string rel = line.substr(0, tab);
    int label;
    try {
      label = std::stoi(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw std::runtime_error("load_dataset: manifest line " + std::to_string(line_no) +
                               " has a malformed label");
    }
    if (label < 0)
      throw std::runtime_error("load_dataset: manifest line " + std::to_string(line_no) +
                               " has a negative label");
    const fs::path file = root / rel;
    if (!fs::exists(file))
      throw std::runtime_error("load_dataset: manifest references missing file: " + rel);
    set.images.push_back(read_image(file.string()));
    set.labels.push_back(label);
  }
  if (set.images.empty()) throw std::runtime_error("load_dataset: manifest is empty: " + path);
  return set;
}

// Texture families used for the synthetic classes. Each family is a scalar
// field pattern(y, x) in [0,1] modulating a class-specific base color.
double pattern_value(int family, double y, double x, double freq, double phase_y, double phase_x) {
  const double pi = std::numbers::pi;
  switch (family % 8) {
    case 0: return 0.5 + 0.5 * std::sin(2 * pi * freq * (x + phase_x));             // vertical stripes
    case 1: return 0.5 + 0.5 * std::sin(2 * pi * freq * (y + phase_y));             // horizontal stripes
    case 2: return 0.5 + 0.5 * std::sin(2 * pi * freq * (x + y + phase_x));         // diagonal stripes
    case 3:
      return (std::sin(2 * pi * freq * (x + phase_x)) * std::sin(2 * pi * freq * (y + phase_y)) > 0)
                 ? 1.0 : 0.0;                                                       // checkerboard
    case 4: {
      const double r = std::hypot(x - 0.5 - phase_x * 0.2, y - 0.5 - phase_y * 0.2);
      return 0.5 + 0.5 * std::sin(2 * pi * freq * 2 * r);                           // rings
    }
    case 5: {
      const double dx = x - 0.5 - phase_x * 0.3, dy = y - 0.5 - phase_y * 0.3;
      return std::exp(-(dx * dx + dy * dy) * 8.0 * freq);                           // soft blob
    }
    case 6: return std::clamp(x * std::cos(phase_x * pi) + y * std::sin(phase_x * pi), 0.0, 1.0);  // gradient
    default: {
      const double gx = std::sin(2 * pi * freq * x + 7 * phase_x);
      const double gy = std::cos(2 * pi * freq * y + 5 * phase_y);
      return 0.5 + 0.25 * gx + 0.25 * gy;                                           // plaid
    }
  }
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  h = h - std::floor(h);
  const double i = std::floor(h * 6.0);
  const double f = h * 6.0 - i;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - f * s);
  const double t = v * (1.0 - (1.0 - f) * s);
  switch (static_cast<int>(i) % 6) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

}  // namespace

LabeledImageSet load_dataset(const std::string& path, DatasetFormat format) {
  switch (format) {
    case DatasetFormat::DirectoryPerClass: return load_directory_per_class(path);
    case DatasetFormat::ManifestFile: return load_manifest(path);
  }
  throw std::invalid_argument("load_dataset: unknown format");
}

LabeledImageSet make_synthetic_dataset(int n_classes, int per_class, int size,
                                       std::uint64_t seed) {
  if (n_classes < 1 || per_class < 1 || size < 1)
    throw std::invalid_argument("make_synthetic_dataset: all counts must be >= 1");

  LabeledImageSet set;
  set.images.reserve(static_cast<std::size_t>(n_classes) * per_class);
  const Rng root(seed);
  for (int c = 0; c < n_classes; ++c) {
    set.class_names.push_back("class_" + std::to_string(c));
    // Golden-angle hue walk keeps base colors spread out for any class count.
    const double hue = std::fmod(0.61803398874989485 * c + 0.13, 1.0);
    const int family = c;
    const double freq = 2.0 + (c % 5);
    for (int i = 0; i < per_class; ++i) {
      Rng rng = root.split((static_cast<std::uint64_t>(c) << 32) | static_cast<std::uint64_t>(i));
      const double phase_y = rng.uniform();
      const double phase_x = rng.uniform();
      const double sat = 0.55 + 0.2 * rng.uniform();
      const double val = 0.6 + 0.25 * rng.uniform();
      double r, g, b;
      hsv_to_rgb(hue, sat, val, r, g, b);

      Image img(size, size, 3);
      img.source_id = "synthetic/c" + std::to_string(c) + "/i" + std::to_string(i);
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const double fy = (y + 0.5) / size, fx = (x + 0.5) / size;
          const double m = pattern_value(family, fy, fx, freq, phase_y, phase_x);
          const double noise = 0.06 * (rng.uniform() - 0.5);
          img.at(y, x, 0) = std::clamp(r * (0.35 + 0.65 * m) + noise, 0.0, 1.0);
          img.at(y, x, 1) = std::clamp(g * (0.35 + 0.65 * m) + noise, 0.0, 1.0);
          img.at(y, x, 2) = std::clamp(b * (0.35 + 0.65 * m) + noise, 0.0, 1.0);
        }
      }
      set.images.push_back(std::move(img));
      set.labels.push_back(c);
    }
  }
  return set;
}

SyntheticLandmarkSet make_synthetic_landmarks(int n_images, int size, std::uint64_t seed) {
  if (n_images < 1 || size < 16)
    throw std::invalid_argument("make_synthetic_landmarks: need n_images >= 1 and size >= 16");

  // Canonical landmark layout in unit coordinates: eyes, nose, mouth corners.
  const double canon[5][2] = {
      {0.33, 0.35}, {0.67, 0.35}, {0.50, 0.55}, {0.38, 0.75}, {0.62, 0.75}};

  SyntheticLandmarkSet out;
  const Rng root(seed);
  for (int i = 0; i < n_images; ++i) {
    Rng rng = root.split(static_cast<std::uint64_t>(i));
    const double shift_x = rng.uniform(-0.08, 0.08);
    const double shift_y = rng.uniform(-0.08, 0.08);
    const double scale = rng.uniform(0.85, 1.15);

    std::vector<double> coords(10);
    for (int l = 0; l < 5; ++l) {
      coords[2 * l + 0] = ((canon[l][0] - 0.5) * scale + 0.5 + shift_x) * size;
      coords[2 * l + 1] = ((canon[l][1] - 0.5) * scale + 0.5 + shift_y) * size;
    }

    Image img(size, size, 3);
    img.source_id = "landmarks/i" + std::to_string(i);
    const double bg = 0.15 + 0.1 * rng.uniform();
    for (double& p : img.pixels) p = bg;
    // Face disc.
    const double cx = (0.5 + shift_x) * size, cy = (0.5 + shift_y) * size;
    const double face_r = 0.42 * scale * size;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) < face_r) {
          img.at(y, x, 0) = 0.8;
          img.at(y, x, 1) = 0.65;
          img.at(y, x, 2) = 0.5;
        }
    // Markers: dark dots with a distinct color per landmark.
    const double marker_colors[5][3] = {
        {0.1, 0.1, 0.6}, {0.1, 0.1, 0.6}, {0.6, 0.1, 0.1}, {0.1, 0.5, 0.1}, {0.1, 0.5, 0.1}};
    const double mr = std::max(1.5, 0.04 * size);
    for (int l = 0; l < 5; ++l) {
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          if (std::hypot(x + 0.5 - coords[2 * l], y + 0.5 - coords[2 * l + 1]) < mr)
            for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = marker_colors[l][ch];
    }
    out.images.push_back(std::move(img));
    out.inter_ocular.push_back(
        std::hypot(coords[2] - coords[0], coords[3] - coords[1]));
    out.coords.push_back(std::move(coords));
  }
  return out;
}

}  // namespace exemplar::data
