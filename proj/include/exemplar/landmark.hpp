#pragma once

#include <string>
#include <vector>

#include "exemplar/nn/layers.hpp"
#include "exemplar/rng.hpp"

namespace exemplar::eval {

struct LandmarkSet {
  nn::Mat coords;           // L x 2, pixel units
  double inter_ocular = 0;  // pixels, > 0
};

// Mean Euclidean landmark distance normalized by the ground-truth
// inter-ocular distance.
double landmark_error(const LandmarkSet& pred, const LandmarkSet& gt);

// Ground-truth file: one line per image, "path x1 y1 ... x5 y5 iod",
// whitespace-separated.
struct LandmarkRecord {
  std::string path;
  LandmarkSet landmarks;
};
std::vector<LandmarkRecord> load_landmark_file(const std::string& path, int n_landmarks = 5);

// Two-layer head mapping a spatial feature map to L landmark coordinates:
// 1x1 convolution (c -> reduced), leaky rectifier, batch normalization,
// flatten, fully connected to 2L outputs.
class LandmarkHead {
 public:
  LandmarkHead(int in_channels, int map_h, int map_w, int n_landmarks = 5, int reduced = 128,
               std::uint64_t init_seed = 0);

  // B x (L*2) coordinates; row-major (x1, y1, x2, y2, ...).
  nn::Mat forward(const nn::Tensor& feature_map, bool training);
  // Accumulates parameter gradients; returns the feature-map gradient.
  nn::Tensor backward(const nn::Mat& grad_coords);

  std::size_t param_count() const { return net_.param_count(); }
  nn::Vec params() const { return net_.params(); }
  void set_params(const nn::Vec& p) { net_.set_params(p); }
  nn::Vec grads() const { return net_.grads(); }
  void zero_grads() { net_.zero_grads(); }

  int n_landmarks() const { return n_landmarks_; }

 private:
  int in_c_, map_h_, map_w_, n_landmarks_;
  nn::Sequential net_;
};

// Coordinates for one image as an L x 2 LandmarkSet.
LandmarkSet coords_to_landmarks(const nn::Mat& flat_coords, int row, double inter_ocular);

}  // namespace exemplar::eval
