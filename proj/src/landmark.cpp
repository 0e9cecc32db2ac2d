#include "exemplar/landmark.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace exemplar::eval {

double landmark_error(const LandmarkSet& pred, const LandmarkSet& gt) {
  if (pred.coords.rows() != gt.coords.rows())
    throw std::invalid_argument("landmark_error: landmark count mismatch");
  if (!(gt.inter_ocular > 0.0))
    throw std::invalid_argument("landmark_error: inter-ocular distance must be positive");
  double total = 0.0;
  for (Eigen::Index l = 0; l < pred.coords.rows(); ++l)
    total += (pred.coords.row(l) - gt.coords.row(l)).norm() / gt.inter_ocular;
  return total / static_cast<double>(pred.coords.rows());
}

std::vector<LandmarkRecord> load_landmark_file(const std::string& path, int n_landmarks) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_landmark_file: cannot open " + path);
  std::vector<LandmarkRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    LandmarkRecord rec;
    rec.landmarks.coords = nn::Mat(n_landmarks, 2);
    ss >> rec.path;
    for (int l = 0; l < n_landmarks; ++l)
      ss >> rec.landmarks.coords(l, 0) >> rec.landmarks.coords(l, 1);
    ss >> rec.landmarks.inter_ocular;
    if (!ss)
      throw std::runtime_error("load_landmark_file: malformed line " + std::to_string(line_no) +
                               " in " + path);
    records.push_back(std::move(rec));
  }
  return records;
}

LandmarkHead::LandmarkHead(int in_channels, int map_h, int map_w, int n_landmarks, int reduced,
                           std::uint64_t init_seed)
    : in_c_(in_channels), map_h_(map_h), map_w_(map_w), n_landmarks_(n_landmarks) {
  net_.add(std::make_unique<nn::Conv2d>(in_channels, reduced, 1));
  net_.add(std::make_unique<nn::LeakyReLU>(0.2));
  net_.add(std::make_unique<nn::BatchNorm2d>(reduced));
  net_.add(std::make_unique<nn::Linear>(reduced * map_h * map_w, 2 * n_landmarks));
  Rng rng(init_seed);
  net_.init_params(rng);
}

nn::Mat LandmarkHead::forward(const nn::Tensor& feature_map, bool training) {
  if (feature_map.c != in_c_)
    throw std::invalid_argument("LandmarkHead: expected " + std::to_string(in_c_) +
                                " channels, got " + std::to_string(feature_map.c));
  const nn::Tensor out = net_.forward(feature_map, training);
  return Eigen::Map<const nn::Mat>(out.data.data(), out.c, out.n).transpose();
}

nn::Tensor LandmarkHead::backward(const nn::Mat& grad_coords) {
  nn::Tensor g(static_cast<int>(grad_coords.rows()), static_cast<int>(grad_coords.cols()), 1, 1);
  Eigen::Map<nn::Mat>(g.data.data(), grad_coords.cols(), grad_coords.rows()) =
      grad_coords.transpose();
  return net_.backward(g);
}

LandmarkSet coords_to_landmarks(const nn::Mat& flat_coords, int row, double inter_ocular) {
  const int L = static_cast<int>(flat_coords.cols()) / 2;
  LandmarkSet set;
  set.coords = nn::Mat(L, 2);
  for (int l = 0; l < L; ++l) {
    set.coords(l, 0) = flat_coords(row, 2 * l);
    set.coords(l, 1) = flat_coords(row, 2 * l + 1);
  }
  set.inter_ocular = inter_ocular;
  return set;
}

}  // namespace exemplar::eval
