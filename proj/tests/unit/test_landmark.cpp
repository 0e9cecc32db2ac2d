#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "exemplar/landmark.hpp"

namespace fs = std::filesystem;
using namespace exemplar;
using namespace exemplar::eval;

namespace {

LandmarkSet make_set(std::initializer_list<double> flat, double iod) {
  LandmarkSet s;
  const auto v = std::vector<double>(flat);
  s.coords = nn::Mat(static_cast<Eigen::Index>(v.size() / 2), 2);
  for (Eigen::Index l = 0; l < s.coords.rows(); ++l) {
    s.coords(l, 0) = v[static_cast<std::size_t>(2 * l)];
    s.coords(l, 1) = v[static_cast<std::size_t>(2 * l + 1)];
  }
  s.inter_ocular = iod;
  return s;
}

}  // namespace

TEST_SUITE("landmark") {

TEST_CASE("identical landmarks give zero error") {
  const auto gt = make_set({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 2.5);
  CHECK(landmark_error(gt, gt) == 0.0);
}

TEST_CASE("uniform offset by the inter-ocular distance gives exactly 1") {
  const auto gt = make_set({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 2.0);
  auto pred = gt;
  pred.coords.col(0).array() += 2.0;  // offset by iod along x
  CHECK(landmark_error(pred, gt) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("error is invariant under joint positive scaling") {
  const auto gt = make_set({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 2.0);
  auto pred = make_set({1.5, 2, 3, 4.7, 5, 6.1, 7, 8, 9.3, 10}, 2.0);
  const double base = landmark_error(pred, gt);
  for (double s : {0.5, 2.0, 10.0}) {
    LandmarkSet gs = gt, ps = pred;
    gs.coords *= s;
    ps.coords *= s;
    gs.inter_ocular *= s;
    ps.inter_ocular *= s;
    CHECK(std::abs(landmark_error(ps, gs) - base) <= 1e-12);
  }
}

TEST_CASE("error is invariant under a shared landmark permutation") {
  const auto gt = make_set({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 2.0);
  const auto pred = make_set({2, 2, 3, 5, 5, 5, 8, 8, 9, 11}, 2.0);
  const double base = landmark_error(pred, gt);
  const int perm[5] = {3, 0, 4, 1, 2};
  LandmarkSet gp = gt, pp = pred;
  for (int l = 0; l < 5; ++l) {
    gp.coords.row(l) = gt.coords.row(perm[l]);
    pp.coords.row(l) = pred.coords.row(perm[l]);
  }
  CHECK(landmark_error(pp, gp) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("non-positive inter-ocular distance is rejected") {
  const auto gt = make_set({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0.0);
  CHECK_THROWS(landmark_error(gt, gt));
}

TEST_CASE("landmark count mismatch is rejected") {
  const auto a = make_set({1, 2, 3, 4}, 1.0);
  const auto b = make_set({1, 2, 3, 4, 5, 6}, 1.0);
  CHECK_THROWS(landmark_error(a, b));
}

TEST_CASE("head output shape is L x 2 per sample") {
  LandmarkHead head(6, 4, 4, 5, 16, 1);
  nn::Tensor maps(3, 6, 4, 4, 0.1);
  const nn::Mat coords = head.forward(maps, true);
  CHECK(coords.rows() == 3);
  CHECK(coords.cols() == 10);
  const auto set = coords_to_landmarks(coords, 1, 2.0);
  CHECK(set.coords.rows() == 5);
  CHECK(set.coords.cols() == 2);
}

TEST_CASE("zero feature map with zero final layer yields the bias") {
  LandmarkHead head(4, 3, 3, 5, 8, 2);
  // zero the fully connected block (last layer params: weight then bias)
  nn::Vec p = head.params();
  const std::size_t fc_params = static_cast<std::size_t>(8 * 3 * 3) * 10 + 10;
  for (std::size_t i = p.size() - fc_params; i < static_cast<std::size_t>(p.size()); ++i)
    p[static_cast<Eigen::Index>(i)] = 0.0;
  // put a recognizable bias on the last 10 entries
  for (int l = 0; l < 10; ++l) p[p.size() - 10 + l] = 0.25 * (l + 1);
  head.set_params(p);
  nn::Tensor zero_map(2, 4, 3, 3, 0.0);
  const nn::Mat coords = head.forward(zero_map, true);
  for (int r = 0; r < 2; ++r)
    for (int l = 0; l < 10; ++l) CHECK(coords(r, l) == doctest::Approx(0.25 * (l + 1)));
}

TEST_CASE("head gradients match central finite differences") {
  LandmarkHead head(3, 2, 2, 2, 4, 3);
  Rng rng(5);
  nn::Tensor maps(2, 3, 2, 2);
  for (double& v : maps.data) v = rng.normal();
  nn::Mat cotangent(2, 4);
  for (int i = 0; i < cotangent.size(); ++i) cotangent.data()[i] = rng.normal();

  head.zero_grads();
  head.forward(maps, true);
  head.backward(cotangent);
  const nn::Vec analytic = head.grads();

  const nn::Vec theta = head.params();
  const double h = 1e-5;
  auto eval = [&](const nn::Vec& p) {
    head.set_params(p);
    return (head.forward(maps, true).cwiseProduct(cotangent)).sum();
  };
  for (Eigen::Index i = 0; i < theta.size(); i += std::max<Eigen::Index>(1, theta.size() / 80)) {
    nn::Vec p = theta;
    p[i] = theta[i] + h;
    const double fp = eval(p);
    p[i] = theta[i] - h;
    const double fm = eval(p);
    const double fd = (fp - fm) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
    CHECK(std::abs(fd - analytic[i]) / denom < 1e-4);
  }
}

TEST_CASE("landmark ground-truth file parsing") {
  const fs::path path = fs::temp_directory_path() / "exemplar_test_landmarks.txt";
  std::ofstream(path) << "img/a.png 1 2 3 4 5 6 7 8 9 10 2.5\n"
                      << "img/b.png 0.5 0.5 1.5 0.5 1 1 0.7 1.5 1.3 1.5 1.0\n";
  const auto records = load_landmark_file(path.string());
  REQUIRE(records.size() == 2);
  CHECK(records[0].path == "img/a.png");
  CHECK(records[0].landmarks.coords(0, 0) == 1.0);
  CHECK(records[0].landmarks.inter_ocular == 2.5);
  CHECK(records[1].landmarks.coords(4, 1) == 1.5);

  std::ofstream(path) << "img/bad.png 1 2 3\n";
  CHECK_THROWS(load_landmark_file(path.string()));
}

}  // TEST_SUITE
