#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "exemplar/diagnose.hpp"
#include "exemplar/rng.hpp"

namespace fs = std::filesystem;
using namespace exemplar;
using namespace exemplar::diagnose;

namespace {

Detection det(const std::string& img, int cat, double score, double x0, double y0, double x1,
              double y1) {
  return {{x0, y0, x1, y1}, score, cat, img};
}

GroundTruthBox gt(const std::string& img, int cat, double x0, double y0, double x1, double y1) {
  return {{x0, y0, x1, y1}, cat, img};
}

// Independent re-statement of the matching and taxonomy rules with plain
// loops, used as the randomized-agreement oracle.
struct OracleOutcome {
  std::vector<MatchKind> kinds;
  std::vector<FPCategory> fp_categories;  // aligned; undefined for TPs
};

OracleOutcome oracle_scene(const std::vector<Detection>& dets,
                           const std::vector<GroundTruthBox>& gts, const SimilarityMap& sim,
                           double weak, double correct) {
  const std::size_t n = dets.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // stable descending score
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (dets[order[j]].score > dets[order[i]].score) std::swap(order[i], order[j]);
  // keep ties in input order
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = 0; j + 1 < n - i; ++j)
      if (dets[order[j]].score == dets[order[j + 1]].score && order[j] > order[j + 1])
        std::swap(order[j], order[j + 1]);

  std::vector<bool> taken(gts.size(), false);
  OracleOutcome out;
  out.kinds.resize(n);
  out.fp_categories.resize(n, FPCategory::BG);
  for (std::size_t oi : order) {
    const auto& d = dets[oi];
    double best_free = 0;
    int best_free_idx = -1;
    double best_taken = 0;
    int best_taken_idx = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].image_id != d.image_id || gts[g].category != d.category) continue;
      const double v = iou(d.box, gts[g].box);
      if (v < correct) continue;
      if (!taken[g] && v > best_free) {
        best_free = v;
        best_free_idx = static_cast<int>(g);
      }
      if (taken[g] && v > best_taken) {
        best_taken = v;
        best_taken_idx = static_cast<int>(g);
      }
    }
    if (best_free_idx >= 0) {
      taken[static_cast<std::size_t>(best_free_idx)] = true;
      out.kinds[oi] = MatchKind::TP;
      continue;
    }
    out.kinds[oi] = best_taken_idx >= 0 ? MatchKind::Duplicate : MatchKind::FP;
    // taxonomy
    double same = 0, similar = 0, other = 0;
    for (const auto& g : gts) {
      if (g.image_id != d.image_id) continue;
      const double v = iou(d.box, g.box);
      if (g.category == d.category) same = std::max(same, v);
      else if (sim.similar(g.category, d.category)) similar = std::max(similar, v);
      else other = std::max(other, v);
    }
    if (same >= weak) out.fp_categories[oi] = FPCategory::Loc;
    else if (similar >= weak) out.fp_categories[oi] = FPCategory::Sim;
    else if (other >= weak) out.fp_categories[oi] = FPCategory::Oth;
    else out.fp_categories[oi] = FPCategory::BG;
  }
  return out;
}

}  // namespace

TEST_SUITE("diagnose") {

TEST_CASE("iou identities") {
  const Box a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, {20, 20, 30, 30}) == 0.0);
  // overlap 5x10=50, union 100+100-50=150
  CHECK(iou(a, {5, 0, 15, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("iou brute-force pixel enumeration oracle") {
  // integer-aligned boxes: count unit cells in intersection and union
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto rand_box = [&rng]() {
      const int x0 = static_cast<int>(rng.uniform_int(0, 8));
      const int y0 = static_cast<int>(rng.uniform_int(0, 8));
      const int w = static_cast<int>(rng.uniform_int(1, 8));
      const int h = static_cast<int>(rng.uniform_int(1, 8));
      return Box{static_cast<double>(x0), static_cast<double>(y0),
                 static_cast<double>(x0 + w), static_cast<double>(y0 + h)};
    };
    const Box a = rand_box(), b = rand_box();
    int inter = 0, uni = 0;
    for (int x = 0; x < 20; ++x)
      for (int y = 0; y < 20; ++y) {
        const bool in_a = x >= a.x_min && x < a.x_max && y >= a.y_min && y < a.y_max;
        const bool in_b = x >= b.x_min && x < b.x_max && y >= b.y_min && y < b.y_max;
        inter += in_a && in_b;
        uni += in_a || in_b;
      }
    CHECK(iou(a, b) == doctest::Approx(static_cast<double>(inter) / uni).epsilon(1e-12));
  }
}

TEST_CASE("iou symmetry and translation invariance") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Box a{rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(5.1, 10), rng.uniform(5.1, 10)};
    const Box b{rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(5.1, 10), rng.uniform(5.1, 10)};
    CHECK(iou(a, b) == iou(b, a));
    const double dx = rng.uniform(-3, 3), dy = rng.uniform(-3, 3);
    const Box at{a.x_min + dx, a.y_min + dy, a.x_max + dx, a.y_max + dy};
    const Box bt{b.x_min + dx, b.y_min + dy, b.x_max + dx, b.y_max + dy};
    CHECK(iou(at, bt) == doctest::Approx(iou(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("degenerate boxes are rejected") {
  CHECK_THROWS(iou({0, 0, 0, 10}, {0, 0, 10, 10}));
  CHECK_THROWS(iou({0, 0, 10, 10}, {5, 5, 5, 5}));
}

TEST_CASE("exact match is a TP; the lower-scoring twin is a duplicate") {
  const std::vector<GroundTruthBox> gts{gt("im", 1, 0, 0, 10, 10)};
  const std::vector<Detection> dets{det("im", 1, 0.9, 0, 0, 10, 10),
                                    det("im", 1, 0.5, 0, 0, 10, 10)};
  const auto res = match_detections(dets, gts, 0.5);
  CHECK(res[0].kind == MatchKind::TP);
  CHECK(res[0].matched_gt == 0);
  CHECK(res[1].kind == MatchKind::Duplicate);
}

TEST_CASE("category and image id gate the matching") {
  const std::vector<GroundTruthBox> gts{gt("im", 1, 0, 0, 10, 10)};
  const auto wrong_cat = match_detections({det("im", 2, 0.9, 0, 0, 10, 10)}, gts, 0.5);
  CHECK(wrong_cat[0].kind == MatchKind::FP);
  const auto wrong_img = match_detections({det("other", 1, 0.9, 0, 0, 10, 10)}, gts, 0.5);
  CHECK(wrong_img[0].kind == MatchKind::FP);
}

TEST_CASE("categorize_fp rule table") {
  SimilarityMap sim;
  sim.add_group({1, 2});
  const std::vector<GroundTruthBox> gts{gt("im", 1, 0, 0, 10, 10)};

  // same class, IoU 1/3 in [0.1, 0.5) -> Loc
  CHECK(categorize_fp(det("im", 1, 0.9, 5, 0, 15, 10), gts, sim, 0.1, 0.5) == FPCategory::Loc);
  // similar class only -> Sim (same box, category 2 similar to 1)
  CHECK(categorize_fp(det("im", 2, 0.9, 5, 0, 15, 10), gts, sim, 0.1, 0.5) == FPCategory::Sim);
  // dissimilar class -> Oth
  CHECK(categorize_fp(det("im", 7, 0.9, 5, 0, 15, 10), gts, sim, 0.1, 0.5) == FPCategory::Oth);
  // tiny IoU with everything -> BG. overlap 1x10 / union 199 ~ 0.05
  CHECK(categorize_fp(det("im", 1, 0.9, 9, 0, 109, 10), gts, sim, 0.1, 0.5) == FPCategory::BG);
}

TEST_CASE("taxonomy precedence on constructed ties") {
  SimilarityMap sim;
  sim.add_group({1, 2});
  // Both a same-class and a similar-class gt overlap weakly: Loc wins.
  const std::vector<GroundTruthBox> gts{gt("im", 1, 0, 0, 10, 10), gt("im", 2, 0, 0, 10, 10)};
  CHECK(categorize_fp(det("im", 1, 0.9, 5, 0, 15, 10), gts, sim, 0.1, 0.5) == FPCategory::Loc);
  // Similar and dissimilar gt both overlap: Sim wins over Oth.
  const std::vector<GroundTruthBox> gts2{gt("im", 2, 0, 0, 10, 10), gt("im", 9, 0, 0, 10, 10)};
  CHECK(categorize_fp(det("im", 1, 0.9, 5, 0, 15, 10), gts2, sim, 0.1, 0.5) == FPCategory::Sim);
}

TEST_CASE("similarity map is symmetric and reflexive") {
  SimilarityMap sim;
  sim.add_group({3, 5, 7});
  CHECK(sim.similar(3, 5));
  CHECK(sim.similar(5, 3));
  CHECK(sim.similar(7, 7));
  CHECK(sim.similar(4, 4));  // self-similar even outside groups
  CHECK_FALSE(sim.similar(3, 4));
}

TEST_CASE("hand-built scene gives the (0.5, 0.25, 0, 0.25) distribution") {
  SimilarityMap sim;
  sim.add_group({1, 2});
  std::vector<GroundTruthBox> gts;
  std::vector<Detection> dets;
  // Category 1 has N=8 ground truths; detections in the top 8 of category 1:
  for (int i = 0; i < 8; ++i)
    gts.push_back(gt("im", 1, i * 100.0, 0, i * 100.0 + 10, 10));
  // 3 TPs on the first three gts
  for (int i = 0; i < 3; ++i)
    dets.push_back(det("im", 1, 0.95 - i * 0.01, i * 100.0, 0, i * 100.0 + 10, 10));
  // 2 Loc FPs: same-class IoU 1/3 on gts 3 and 4
  dets.push_back(det("im", 1, 0.80, 305, 0, 315, 10));
  dets.push_back(det("im", 1, 0.79, 405, 0, 415, 10));
  // 1 Sim FP: overlaps a category-2 gt
  gts.push_back(gt("im", 2, 900, 0, 910, 10));
  dets.push_back(det("im", 1, 0.78, 905, 0, 915, 10));
  // 1 BG FP: overlaps nothing
  dets.push_back(det("im", 1, 0.77, 2000, 0, 2010, 10));
  // 7 detections total, all inside the top N=8: 3 TP + 4 FP.
  const auto dist = top_fp_distribution(dets, gts, sim, {0.1, 0.5});
  REQUIRE(dist.count(1) == 1);
  const auto& d = dist.at(1);
  CHECK(d.fp_count == 4);
  CHECK(d.fractions[0] == doctest::Approx(0.5));   // Loc
  CHECK(d.fractions[1] == doctest::Approx(0.25));  // Sim
  CHECK(d.fractions[2] == 0.0);                    // Oth
  CHECK(d.fractions[3] == doctest::Approx(0.25));  // BG
}

TEST_CASE("no FPs in the top N flags an empty distribution") {
  const std::vector<GroundTruthBox> gts{gt("im", 1, 0, 0, 10, 10)};
  const std::vector<Detection> dets{det("im", 1, 0.9, 0, 0, 10, 10)};
  const auto dist = top_fp_distribution(dets, gts, SimilarityMap{}, {0.1, 0.5});
  REQUIRE(dist.count(1) == 1);
  CHECK(dist.at(1).empty());
}

TEST_CASE("all-BG scene gives (0,0,0,1)") {
  const std::vector<GroundTruthBox> gts{gt("im", 1, 0, 0, 10, 10), gt("im", 1, 100, 0, 110, 10)};
  const std::vector<Detection> dets{det("im", 1, 0.9, 500, 0, 510, 10),
                                    det("im", 1, 0.8, 600, 0, 610, 10)};
  const auto dist = top_fp_distribution(dets, gts, SimilarityMap{}, {0.1, 0.5});
  const auto& d = dist.at(1);
  CHECK(d.fractions[3] == 1.0);
  CHECK(d.fractions[0] + d.fractions[1] + d.fractions[2] == 0.0);
}

TEST_CASE("randomized scenes agree with the oracle and fractions sum to 1") {
  Rng rng(7);
  SimilarityMap sim;
  sim.add_group({0, 1});
  sim.add_group({2, 3});
  int checked_fps = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<GroundTruthBox> gts;
    std::vector<Detection> dets;
    const int n_gt = static_cast<int>(rng.uniform_int(0, 3));
    const int n_det = 1 + static_cast<int>(rng.uniform_int(0, 5));
    const auto rand_box = [&rng]() {
      const double x0 = rng.uniform(0, 20), y0 = rng.uniform(0, 20);
      return Box{x0, y0, x0 + rng.uniform(2, 12), y0 + rng.uniform(2, 12)};
    };
    for (int g = 0; g < n_gt; ++g)
      gts.push_back({rand_box(), static_cast<int>(rng.uniform_int(0, 4)), "im"});
    for (int d = 0; d < n_det; ++d)
      dets.push_back({rand_box(), rng.uniform(0, 1), static_cast<int>(rng.uniform_int(0, 4)), "im"});

    const auto expected = oracle_scene(dets, gts, sim, 0.1, 0.5);
    const auto matches = match_detections(dets, gts, 0.5);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      CHECK(matches[i].kind == expected.kinds[i]);
      if (matches[i].kind != MatchKind::TP) {
        CHECK(categorize_fp(dets[i], gts, sim, 0.1, 0.5) == expected.fp_categories[i]);
        ++checked_fps;
      }
    }
    const auto dist = top_fp_distribution(dets, gts, sim, {0.1, 0.5});
    for (const auto& [cat, d] : dist) {
      if (d.empty()) continue;
      CHECK(d.fractions[0] + d.fractions[1] + d.fractions[2] + d.fractions[3] ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(checked_fps > 500);  // the scenes actually exercised the taxonomy
}

TEST_CASE("csv round trip and similarity file parsing") {
  const fs::path dir = fs::temp_directory_path() / "exemplar_test_diag";
  fs::create_directories(dir);
  std::ofstream(dir / "dets.csv") << "image_id,category,score,x_min,y_min,x_max,y_max\n"
                                  << "a,1,0.9,0,0,10,10\n"
                                  << "b,2,0.5,1,2,3,4\n";
  std::ofstream(dir / "gts.csv") << "image_id,category,x_min,y_min,x_max,y_max\n"
                                 << "a,1,0,0,10,10\n";
  std::ofstream(dir / "sim.txt") << "# vehicles\n1 2\n\n3 4 5\n";
  const auto dets = load_detections_csv((dir / "dets.csv").string());
  REQUIRE(dets.size() == 2);
  CHECK(dets[1].image_id == "b");
  CHECK(dets[1].score == 0.5);
  const auto gts2 = load_ground_truth_csv((dir / "gts.csv").string());
  REQUIRE(gts2.size() == 1);
  const auto sim = SimilarityMap::load((dir / "sim.txt").string());
  CHECK(sim.similar(1, 2));
  CHECK(sim.similar(4, 5));
  CHECK_FALSE(sim.similar(1, 3));

  const auto dist = top_fp_distribution(dets, gts2, sim, {0.1, 0.5});
  const std::string csv = distributions_to_csv(dist);
  CHECK(csv.rfind("category,fp_count,loc,sim,oth,bg\n", 0) == 0);
}

}  // TEST_SUITE
