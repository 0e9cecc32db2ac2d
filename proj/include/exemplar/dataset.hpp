#pragma once

#include <string>
#include <vector>

#include "exemplar/image.hpp"

namespace exemplar::data {

struct LabeledImageSet {
  std::vector<Image> images;
  std::vector<int> labels;               // aligned with images, 0-based class ids
  std::vector<std::string> class_names;  // optional; empty when unknown

  std::size_t size() const { return images.size(); }
  int num_classes() const;

  // |images| == |labels|, labels non-negative and < num_classes.
  void validate() const;
};

enum class DatasetFormat { DirectoryPerClass, ManifestFile };

// Loads a dataset from disk.
//
// DirectoryPerClass: every subdirectory of `path` is one class (sorted by
// name); images inside are ordered lexicographically by filename.
// ManifestFile: `path` is a UTF-8 text file of "relative_path<TAB>label"
// lines (LF endings) resolved against the manifest's directory.
LabeledImageSet load_dataset(const std::string& path, DatasetFormat format);

// Seeded synthetic corpus: each class is a distinct parametric texture family
// (stripes, checkers, rings, ...) on a class-specific base color, so classes
// are linearly separable in simple feature spaces. Same arguments produce
// bit-identical pixels.
LabeledImageSet make_synthetic_dataset(int n_classes, int per_class, int size,
                                       std::uint64_t seed);

// Synthetic landmark corpus: face-like images with five markers (two "eyes",
// a "nose", two "mouth corners"). Returns the images plus per-image landmark
// coordinates (5x2, pixel units) and inter-ocular distances.
struct SyntheticLandmarkSet {
  std::vector<Image> images;
  std::vector<std::vector<double>> coords;  // per image: x1,y1,...,x5,y5
  std::vector<double> inter_ocular;
};

SyntheticLandmarkSet make_synthetic_landmarks(int n_images, int size, std::uint64_t seed);

}  // namespace exemplar::data
