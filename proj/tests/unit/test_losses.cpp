#include <doctest.h>

#include <cmath>

#include "exemplar/losses.hpp"

using namespace exemplar;
using namespace exemplar::contrast;

namespace {

MemoryQueue queue_from_rows(const std::vector<Vec>& rows, const std::vector<int>& labels) {
  MemoryQueue q(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    q.keys.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    q.labels[i] = labels[i];
  }
  q.filled = static_cast<int>(rows.size());
  return q;
}

Vec unit_random(int d, Rng& rng) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  return l2_normalize(v);
}

// Brute-force filter-then-softmax oracle, written independently of the
// implementation path (plain loops, no logsumexp).
double oracle_loss(const Vec& q, const Vec& k_pos, const MemoryQueue& queue,
                   std::optional<int> y, double tau) {
  const double pos = std::exp(q.dot(k_pos) / tau);
  double denom = pos;
  for (int j = 0; j < queue.filled; ++j) {
    if (y && queue.labels[static_cast<std::size_t>(j)] == *y) continue;
    denom += std::exp(queue.keys.row(j).dot(q.transpose()) / tau);
  }
  return -std::log(pos / denom);
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("l2_normalize basics") {
  Vec v(2);
  v << 3, 4;
  const Vec u = l2_normalize(v);
  CHECK(u[0] == doctest::Approx(0.6));
  CHECK(u[1] == doctest::Approx(0.8));
  CHECK(l2_normalize(u).isApprox(u, 1e-12));
  Vec zero = Vec::Zero(2);
  CHECK_THROWS_WITH(l2_normalize(zero), "cannot normalize zero vector");
}

TEST_CASE("one equal negative gives ln 2 at any temperature") {
  Rng rng(1);
  for (double tau : {0.07, 0.1, 0.2, 1.0, 3.0}) {
    const Vec q = unit_random(8, rng);
    const Vec k_pos = unit_random(8, rng);
    // negative with the same similarity as the positive: use k_pos itself
    const auto queue = queue_from_rows({k_pos}, {1});
    const auto res = infonce_loss(q, k_pos, queue, tau);
    CHECK(res.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("frozen two-vector example") {
  Vec q(2), k_pos(2), neg(2);
  q << 1, 0;
  k_pos << 1, 0;
  neg << 0, 1;
  const auto queue = queue_from_rows({neg}, {1});
  const auto res = infonce_loss(q, k_pos, queue, 1.0);
  // oracle: -log(e / (e + 1)) = log(1 + e^-1) = 0.31326168751822286
  CHECK(res.value == doctest::Approx(0.31326168751822286).epsilon(1e-12));
}

TEST_CASE("empty queue gives zero loss and zero gradient") {
  Rng rng(2);
  const Vec q = unit_random(4, rng);
  const Vec k = unit_random(4, rng);
  MemoryQueue queue(16, 4);
  const auto res = infonce_loss(q, k, queue, 0.1);
  CHECK(res.value == 0.0);
  CHECK(res.grad_q.norm() == 0.0);
}

TEST_CASE("exemplar frozen mixed-label example") {
  Vec q(2), k_pos(2), same(2), other(2);
  q << 1, 0;
  k_pos << 1, 0;
  same << 0, 1;
  other << -1, 0;
  const auto queue = queue_from_rows({same, other}, {5, 9});
  const auto res = exemplar_loss(q, k_pos, queue, /*y_i=*/5, 1.0);
  // oracle: -log(e / (e + e^-1)) = log(1 + e^-2) = 0.12692801104297263
  CHECK(res.value == doctest::Approx(0.12692801104297263).epsilon(1e-12));
}

TEST_CASE("all same-label queue nullifies the loss exactly") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 6;
    std::vector<Vec> rows;
    std::vector<int> labels;
    for (int j = 0; j < 10; ++j) {
      rows.push_back(unit_random(d, rng));
      labels.push_back(3);
    }
    const auto queue = queue_from_rows(rows, labels);
    const auto res = exemplar_loss(unit_random(d, rng), unit_random(d, rng), queue, 3, 0.2);
    CHECK(res.value == 0.0);
    CHECK(res.grad_q.norm() == 0.0);
  }
}

TEST_CASE("vacuous filter reduces exemplar to infonce exactly") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 16;
    std::vector<Vec> rows;
    std::vector<int> labels;
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 20));
    for (int j = 0; j < n; ++j) {
      rows.push_back(unit_random(d, rng));
      labels.push_back(static_cast<int>(rng.uniform_int(1, 50)));
    }
    const auto queue = queue_from_rows(rows, labels);
    const Vec q = unit_random(d, rng);
    const Vec k = unit_random(d, rng);
    const double tau = rng.uniform(0.05, 1.0);
    const auto a = exemplar_loss(q, k, queue, /*y_i=*/0, tau);  // label 0 never present
    const auto b = infonce_loss(q, k, queue, tau);
    CHECK(std::abs(a.value - b.value) <= 1e-9);
    CHECK((a.grad_q - b.grad_q).norm() <= 1e-9);
  }
}

TEST_CASE("losses agree with the brute-force oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 8;
    std::vector<Vec> rows;
    std::vector<int> labels;
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 12));
    for (int j = 0; j < n; ++j) {
      rows.push_back(unit_random(d, rng));
      labels.push_back(static_cast<int>(rng.uniform_int(0, 3)));
    }
    const auto queue = queue_from_rows(rows, labels);
    const Vec q = unit_random(d, rng);
    const Vec k = unit_random(d, rng);
    const double tau = rng.uniform(0.05, 0.5);
    const int y = static_cast<int>(rng.uniform_int(0, 3));
    CHECK(infonce_loss(q, k, queue, tau).value ==
          doctest::Approx(oracle_loss(q, k, queue, std::nullopt, tau)).epsilon(1e-10));
    CHECK(exemplar_loss(q, k, queue, y, tau).value ==
          doctest::Approx(oracle_loss(q, k, queue, y, tau)).epsilon(1e-10));
  }
}

TEST_CASE("losses are invariant under queue permutations") {
  Rng rng(6);
  const int d = 8, n = 9;
  std::vector<Vec> rows;
  std::vector<int> labels;
  for (int j = 0; j < n; ++j) {
    rows.push_back(unit_random(d, rng));
    labels.push_back(static_cast<int>(rng.uniform_int(0, 2)));
  }
  const Vec q = unit_random(d, rng);
  const Vec k = unit_random(d, rng);
  const auto base = exemplar_loss(q, k, queue_from_rows(rows, labels), 1, 0.2);
  for (int p = 0; p < 20; ++p) {
    // Fisher-Yates shuffle of rows and labels together
    auto rows_p = rows;
    auto labels_p = labels;
    for (int i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, i - 1));
      std::swap(rows_p[static_cast<std::size_t>(i) - 1], rows_p[j]);
      std::swap(labels_p[static_cast<std::size_t>(i) - 1], labels_p[j]);
    }
    const auto perm = exemplar_loss(q, k, queue_from_rows(rows_p, labels_p), 1, 0.2);
    CHECK(std::abs(perm.value - base.value) <= 1e-9);
  }
}

TEST_CASE("raising one negative similarity strictly raises the loss") {
  Rng rng(7);
  const int d = 8;
  const Vec q = unit_random(d, rng);
  const Vec k = unit_random(d, rng);
  std::vector<Vec> rows;
  for (int j = 0; j < 5; ++j) rows.push_back(unit_random(d, rng));
  const std::vector<int> labels(5, 1);
  auto queue = queue_from_rows(rows, labels);
  const double base = infonce_loss(q, k, queue, 0.3).value;
  // Move negative 2 toward q (higher similarity), renormalized.
  queue.keys.row(2) = l2_normalize((queue.keys.row(2).transpose() + 0.5 * q)).transpose();
  REQUIRE(queue.keys.row(2).dot(q.transpose()) > rows[2].dot(q));
  CHECK(infonce_loss(q, k, queue, 0.3).value > base);
}

TEST_CASE("loss positivity") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 4;
    std::vector<Vec> rows{unit_random(d, rng), unit_random(d, rng)};
    const auto queue = queue_from_rows(rows, {0, 1});
    CHECK(infonce_loss(unit_random(d, rng), unit_random(d, rng), queue, 0.2).value >= 0.0);
    CHECK(exemplar_loss(unit_random(d, rng), unit_random(d, rng), queue, 0, 0.2).value >= 0.0);
  }
}

TEST_CASE("analytic q-gradients match central finite differences") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 6;
    std::vector<Vec> rows;
    std::vector<int> labels;
    for (int j = 0; j < 7; ++j) {
      rows.push_back(unit_random(d, rng));
      labels.push_back(static_cast<int>(rng.uniform_int(0, 2)));
    }
    const auto queue = queue_from_rows(rows, labels);
    const Vec q = unit_random(d, rng);
    const Vec k = unit_random(d, rng);
    const double tau = 0.2;
    const int y = 1;
    const auto res = exemplar_loss(q, k, queue, y, tau);
    const double h = 1e-5;
    for (int i = 0; i < d; ++i) {
      Vec qp = q, qm = q;
      qp[i] += h;
      qm[i] -= h;
      const double fd = (exemplar_loss(qp, k, queue, y, tau).value -
                         exemplar_loss(qm, k, queue, y, tau).value) /
                        (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(res.grad_q[i]), 1e-10});
      CHECK(std::abs(fd - res.grad_q[i]) / denom < 1e-4);
    }
  }
}

TEST_CASE("tau must be positive") {
  Rng rng(10);
  const auto queue = queue_from_rows({unit_random(4, rng)}, {0});
  CHECK_THROWS(infonce_loss(unit_random(4, rng), unit_random(4, rng), queue, 0.0));
  CHECK_THROWS(exemplar_loss(unit_random(4, rng), unit_random(4, rng), queue, 0, -0.1));
}

TEST_CASE("cross entropy on uniform logits is ln n") {
  for (int n : {2, 5, 10}) {
    Mat logits = Mat::Zero(3, n);
    const double loss = cross_entropy_loss(logits, {0, n - 1, n / 2});
    CHECK(loss == doctest::Approx(std::log(static_cast<double>(n))).epsilon(1e-12));
  }
}

TEST_CASE("cross entropy frozen example and limit") {
  Mat logits(1, 2);
  logits << 1, 0;
  CHECK(cross_entropy_loss(logits, {0}) ==
        doctest::Approx(0.31326168751822286).epsilon(1e-12));
  Mat sharp(1, 2);
  sharp << 50, 0;
  CHECK(cross_entropy_loss(sharp, {0}) < 1e-20);
}

TEST_CASE("cross entropy rejects out-of-range labels") {
  Mat logits = Mat::Zero(2, 3);
  CHECK_THROWS(cross_entropy_loss(logits, {0, 3}));
  CHECK_THROWS(cross_entropy_loss(logits, {-1, 0}));
}

TEST_CASE("cross entropy gradient matches finite differences") {
  Rng rng(11);
  Mat logits(3, 4);
  for (int i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal();
  const std::vector<int> labels{1, 3, 0};
  Mat grad;
  cross_entropy_loss_grad(logits, labels, grad);
  const double h = 1e-6;
  for (int i = 0; i < logits.size(); ++i) {
    Mat lp = logits, lm = logits;
    lp.data()[i] += h;
    lm.data()[i] -= h;
    const double fd = (cross_entropy_loss(lp, labels) - cross_entropy_loss(lm, labels)) / (2 * h);
    CHECK(fd == doctest::Approx(grad.data()[i]).epsilon(1e-5));
  }
}

}  // TEST_SUITE
