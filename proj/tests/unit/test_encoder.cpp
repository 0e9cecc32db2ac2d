#include <doctest.h>

#include "exemplar/encoder.hpp"

using namespace exemplar;
using namespace exemplar::contrast;

namespace {

BackboneSpec tiny_spec() {
  BackboneSpec spec;
  spec.in_channels = 3;
  spec.input_size = 16;
  spec.channels = {8, 16};
  spec.embed_dim = 8;
  spec.proj_hidden = 8;
  return spec;
}

nn::Tensor random_images(int n, const BackboneSpec& spec, Rng& rng) {
  nn::Tensor t(n, spec.in_channels, spec.input_size, spec.input_size);
  for (double& v : t.data) v = rng.uniform();
  return t;
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("momentum update endpoints are exact") {
  Rng rng(1);
  Vec q(100), k(100);
  for (int i = 0; i < 100; ++i) {
    q[i] = rng.normal(0, 3);
    k[i] = rng.normal(0, 3);
  }
  CHECK(momentum_update({q, k, 1.0}).key_params == k);  // fixed point
  CHECK(momentum_update({q, k, 0.0}).key_params == q);  // copy
  EncoderPair mid{q, k, 0.5};
  Vec kq(1), qq(1);
  kq << 0.0;
  qq << 1.0;
  CHECK(momentum_update({qq, kq, 0.5}).key_params[0] == doctest::Approx(0.5));
}

TEST_CASE("momentum update is contained in the endpoint interval") {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec q(4), k(4);
    for (int i = 0; i < 4; ++i) {
      q[i] = rng.normal(0, 10);
      k[i] = rng.normal(0, 10);
    }
    const double m = rng.uniform();
    const auto out = momentum_update({q, k, m});
    for (int i = 0; i < 4; ++i) {
      CHECK(out.key_params[i] >= std::min(q[i], k[i]));
      CHECK(out.key_params[i] <= std::max(q[i], k[i]));
    }
    CHECK(out.query_params == q);  // untouched
  }
}

TEST_CASE("momentum update rejects shape mismatches") {
  CHECK_THROWS(momentum_update({Vec::Zero(3), Vec::Zero(4), 0.5}));
}

TEST_CASE("encode produces shaped, deterministic, unit-norm rows") {
  const auto spec = tiny_spec();
  Encoder enc(spec, 42);
  Rng rng(3);
  const nn::Tensor batch = random_images(3, spec, rng);

  const auto out = encode(enc, batch, /*normalize=*/true);
  CHECK(out.normalized);
  CHECK(out.vectors.rows() == 3);
  CHECK(out.vectors.cols() == spec.embed_dim);
  for (int i = 0; i < 3; ++i)
    CHECK(out.vectors.row(i).norm() == doctest::Approx(1.0).epsilon(1e-6));

  const auto again = encode(enc, batch, true);
  CHECK(out.vectors == again.vectors);
}

TEST_CASE("batch of one and duplicated inputs") {
  const auto spec = tiny_spec();
  Encoder enc(spec, 7);
  Rng rng(4);
  const nn::Tensor one = random_images(1, spec, rng);
  const auto e1 = encode(enc, one, true);
  CHECK(e1.vectors.rows() == 1);

  // duplicate the same image twice in one batch -> identical rows
  nn::Tensor two(2, spec.in_channels, spec.input_size, spec.input_size);
  std::copy(one.data.begin(), one.data.end(), two.data.begin());
  std::copy(one.data.begin(), one.data.end(),
            two.data.begin() + static_cast<std::ptrdiff_t>(one.data.size()));
  const auto e2 = encode(enc, two, true);
  CHECK((e2.vectors.row(0) - e2.vectors.row(1)).norm() == 0.0);
}

TEST_CASE("same init seed gives identical parameters") {
  const auto spec = tiny_spec();
  Encoder a(spec, 5), b(spec, 5), c(spec, 6);
  CHECK(a.params() == b.params());
  CHECK(a.params() != c.params());
}

TEST_CASE("set_params round-trips and shapes are stable") {
  const auto spec = tiny_spec();
  Encoder enc(spec, 1);
  const Vec p = enc.params();
  enc.set_params(p);
  CHECK(enc.params() == p);
  CHECK_THROWS(enc.set_params(Vec::Zero(p.size() + 1)));
}

TEST_CASE("encoder rejects wrong image shapes") {
  const auto spec = tiny_spec();
  Encoder enc(spec, 1);
  nn::Tensor wrong(1, spec.in_channels, spec.input_size + 2, spec.input_size + 2, 0.1);
  CHECK_THROWS(enc.features(wrong, false));
}

TEST_CASE("classifier head emits n_classes logits") {
  auto spec = tiny_spec();
  spec.n_classes = 7;
  Encoder enc(spec, 2);
  Rng rng(5);
  const auto logits = enc.head_out(random_images(2, spec, rng), /*training=*/true);
  CHECK(logits.rows() == 2);
  CHECK(logits.cols() == 7);
}

TEST_CASE("block maps expose one activation per block") {
  const auto spec = tiny_spec();
  Encoder enc(spec, 3);
  Rng rng(6);
  const auto maps = enc.block_maps(random_images(1, spec, rng), false);
  REQUIRE(maps.size() == spec.channels.size());
  CHECK(maps[0].c == spec.channels[0]);
  CHECK(maps[1].c == spec.channels[1]);
  CHECK(maps[0].h == spec.input_size / 2);
  CHECK(maps[1].h == spec.input_size / 4);
}

TEST_CASE("normalize_rows backward matches finite differences") {
  Rng rng(7);
  nn::Mat z(2, 5), grad_q(2, 5);
  for (int i = 0; i < z.size(); ++i) {
    z.data()[i] = rng.normal();
    grad_q.data()[i] = rng.normal();
  }
  const nn::Mat analytic = normalize_rows_backward(z, grad_q);
  const double h = 1e-6;
  for (int i = 0; i < z.size(); ++i) {
    nn::Mat zp = z, zm = z;
    zp.data()[i] += h;
    zm.data()[i] -= h;
    const double fp = (normalize_rows(zp).cwiseProduct(grad_q)).sum();
    const double fm = (normalize_rows(zm).cwiseProduct(grad_q)).sum();
    const double fd = (fp - fm) / (2 * h);
    CHECK(fd == doctest::Approx(analytic.data()[i]).epsilon(1e-4));
  }
}

}  // TEST_SUITE
