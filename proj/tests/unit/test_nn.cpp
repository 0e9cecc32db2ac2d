#include <doctest.h>

#include <memory>

#include "exemplar/nn/layers.hpp"
#include "exemplar/nn/optim.hpp"

using namespace exemplar;
using namespace exemplar::nn;

namespace {

Tensor random_tensor(int n, int c, int h, int w, Rng& rng) {
  Tensor t(n, c, h, w);
  for (double& v : t.data) v = rng.normal();
  return t;
}

// Scalar probe g(params) = <cotangent, net(x)>; central finite differences
// against the analytic parameter gradient.
void check_param_gradients(Sequential& net, const Tensor& input, double tol = 1e-4) {
  Rng rng(99);
  Tensor out = net.forward(input, /*training=*/true);
  Tensor cotangent(out.n, out.c, out.h, out.w);
  for (double& v : cotangent.data) v = rng.normal();

  net.zero_grads();
  net.forward(input, true);
  net.backward(cotangent);
  const Vec analytic = net.grads();

  const Vec theta = net.params();
  const double h = 1e-5;
  auto eval = [&](const Vec& p) {
    net.set_params(p);
    const Tensor o = net.forward(input, true);
    double s = 0.0;
    for (std::size_t i = 0; i < o.data.size(); ++i) s += o.data[i] * cotangent.data[i];
    return s;
  };
  // Check a spread of coordinates rather than every parameter.
  const Eigen::Index stride = std::max<Eigen::Index>(1, theta.size() / 60);
  for (Eigen::Index i = 0; i < theta.size(); i += stride) {
    Vec p = theta;
    p[i] = theta[i] + h;
    const double fp = eval(p);
    p[i] = theta[i] - h;
    const double fm = eval(p);
    const double fd = (fp - fm) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-4});
    CHECK(std::abs(fd - analytic[i]) / denom < tol);
  }
  net.set_params(theta);
}

// Input gradient against finite differences.
void check_input_gradients(Sequential& net, const Tensor& input, double tol = 1e-4) {
  Rng rng(7);
  Tensor out = net.forward(input, true);
  Tensor cotangent(out.n, out.c, out.h, out.w);
  for (double& v : cotangent.data) v = rng.normal();

  net.zero_grads();
  net.forward(input, true);
  const Tensor grad_in = net.backward(cotangent);

  const double h = 1e-5;
  auto eval = [&](const Tensor& x) {
    const Tensor o = net.forward(x, true);
    double s = 0.0;
    for (std::size_t i = 0; i < o.data.size(); ++i) s += o.data[i] * cotangent.data[i];
    return s;
  };
  const std::size_t stride = std::max<std::size_t>(1, input.data.size() / 40);
  for (std::size_t i = 0; i < input.data.size(); i += stride) {
    Tensor x = input;
    x.data[i] += h;
    const double fp = eval(x);
    x.data[i] = input.data[i] - h;
    const double fm = eval(x);
    const double fd = (fp - fm) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(grad_in.data[i]), 1e-4});
    CHECK(std::abs(fd - grad_in.data[i]) / denom < tol);
  }
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("conv2d forward matches a direct convolution") {
  Conv2d conv(1, 1, 3, 1);
  Rng rng(1);
  conv.init_params(rng);
  Vec p(conv.param_count());
  // kernel = identity at center, bias 0.5
  p.setZero();
  p[4] = 1.0;
  p[p.size() - 1] = 0.5;
  conv.copy_params_from(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));

  Tensor in = random_tensor(1, 1, 5, 5, rng);
  const Tensor out = conv.forward(in, true);
  REQUIRE(out.h == 5);
  REQUIRE(out.w == 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x)
      CHECK(out.at(0, 0, y, x) == doctest::Approx(in.at(0, 0, y, x) + 0.5));
}

TEST_CASE("conv2d stride-2 halves odd and even sizes as ceil(n/2)") {
  Conv2d conv(2, 3, 3, 2);
  CHECK(conv.out_size(8) == 4);
  CHECK(conv.out_size(9) == 5);
  CHECK(conv.out_size(7) == 4);
}

TEST_CASE("conv2d gradients match finite differences") {
  Sequential net;
  net.add(std::make_unique<Conv2d>(2, 3, 3, 2));
  Rng rng(5);
  net.init_params(rng);
  const Tensor in = random_tensor(2, 2, 6, 6, rng);
  check_param_gradients(net, in);
  check_input_gradients(net, in);
}

TEST_CASE("batchnorm normalizes per channel in training mode") {
  BatchNorm2d bn(3);
  Rng rng(2);
  Tensor in = random_tensor(4, 3, 5, 5, rng);
  const Tensor out = bn.forward(in, true);
  for (int c = 0; c < 3; ++c) {
    double mean = 0, var = 0;
    const double count = 4 * 5 * 5;
    for (int s = 0; s < 4; ++s)
      for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) mean += out.at(s, c, y, x);
    mean /= count;
    for (int s = 0; s < 4; ++s)
      for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) var += (out.at(s, c, y, x) - mean) * (out.at(s, c, y, x) - mean);
    var /= count;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("batchnorm gradients match finite differences") {
  Sequential net;
  net.add(std::make_unique<Conv2d>(1, 2, 3, 1));
  net.add(std::make_unique<BatchNorm2d>(2));
  net.add(std::make_unique<LeakyReLU>(0.2));
  Rng rng(3);
  net.init_params(rng);
  const Tensor in = random_tensor(3, 1, 6, 6, rng);
  check_param_gradients(net, in);
  check_input_gradients(net, in);
}

TEST_CASE("linear and gap gradients match finite differences") {
  Sequential net;
  net.add(std::make_unique<GlobalAvgPool>());
  net.add(std::make_unique<Linear>(4, 3));
  Rng rng(4);
  net.init_params(rng);
  const Tensor in = random_tensor(3, 4, 5, 5, rng);
  check_param_gradients(net, in);
  check_input_gradients(net, in);
}

TEST_CASE("upsample2x repeats pixels and sums gradients") {
  Upsample2x up;
  Tensor in(1, 1, 2, 2);
  in.at(0, 0, 0, 0) = 1;
  in.at(0, 0, 0, 1) = 2;
  in.at(0, 0, 1, 0) = 3;
  in.at(0, 0, 1, 1) = 4;
  const Tensor out = up.forward(in, true);
  CHECK(out.h == 4);
  CHECK(out.at(0, 0, 0, 0) == 1);
  CHECK(out.at(0, 0, 1, 1) == 1);
  CHECK(out.at(0, 0, 3, 3) == 4);
  Tensor g(1, 1, 4, 4, 1.0);
  const Tensor gin = up.backward(g);
  CHECK(gin.at(0, 0, 0, 0) == 4.0);
}

TEST_CASE("sigmoid and upsample gradients match finite differences") {
  Sequential net;
  net.add(std::make_unique<Conv2d>(1, 2, 3, 1));
  net.add(std::make_unique<Upsample2x>());
  net.add(std::make_unique<Conv2d>(2, 1, 1, 1));
  net.add(std::make_unique<Sigmoid>());
  Rng rng(6);
  net.init_params(rng);
  const Tensor in = random_tensor(1, 1, 4, 4, rng);
  check_param_gradients(net, in);
  check_input_gradients(net, in);
}

TEST_CASE("sequential param round-trip is exact") {
  Sequential net;
  net.add(std::make_unique<Conv2d>(3, 4, 3, 2));
  net.add(std::make_unique<BatchNorm2d>(4));
  net.add(std::make_unique<Linear>(4 * 3 * 3, 7));
  Rng rng(8);
  net.init_params(rng);
  const Vec p = net.params();
  net.set_params(p);
  CHECK(net.params() == p);
  CHECK(net.param_count() == static_cast<std::size_t>(p.size()));
}

TEST_CASE("sgd momentum follows the classical update") {
  SgdMomentum opt(0.1, 0.9, 0.0);
  Vec p(1), g(1);
  p[0] = 1.0;
  g[0] = 1.0;
  opt.step(p, g);  // v=1, p=1-0.1
  CHECK(p[0] == doctest::Approx(0.9));
  opt.step(p, g);  // v=1.9, p=0.9-0.19
  CHECK(p[0] == doctest::Approx(0.71));
}

TEST_CASE("adam first step moves by lr along the sign") {
  Adam opt(0.01);
  Vec p(2), g(2);
  p << 1.0, -2.0;
  g << 0.3, -0.7;
  opt.step(p, g);
  CHECK(p[0] == doctest::Approx(1.0 - 0.01).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-4));
}

TEST_CASE("cosine schedule endpoints") {
  CHECK(cosine_lr(0.1, 0, 100) == doctest::Approx(0.1));
  CHECK(cosine_lr(0.1, 50, 100) == doctest::Approx(0.05));
  CHECK(cosine_lr(0.1, 100, 100) == doctest::Approx(0.0));
}

}  // TEST_SUITE
