#include "exemplar/diagnose.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace exemplar::diagnose {

void Box::validate() const {
  if (!(x_max > x_min) || !(y_max > y_min))
    throw std::invalid_argument("Box: degenerate box (x_max <= x_min or y_max <= y_min)");
}

void SimilarityMap::add_group(const std::vector<int>& categories) {
  groups_.emplace_back(categories.begin(), categories.end());
}

bool SimilarityMap::similar(int a, int b) const {
  if (a == b) return true;
  for (const auto& g : groups_)
    if (g.count(a) && g.count(b)) return true;
  return false;
}

SimilarityMap SimilarityMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("SimilarityMap::load: cannot open " + path);
  SimilarityMap map;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<int> group;
    int cat;
    while (ss >> cat) group.push_back(cat);
    if (!group.empty()) map.add_group(group);
  }
  return map;
}

std::string SimilarityMap::serialize() const {
  std::string out;
  for (const auto& g : groups_) {
    std::string line;
    for (int c : g) {
      if (!line.empty()) line += " ";
      line += std::to_string(c);
    }
    out += line + "\n";
  }
  return out;
}

std::string fp_category_name(FPCategory c) {
  switch (c) {
    case FPCategory::Loc: return "Loc";
    case FPCategory::Sim: return "Sim";
    case FPCategory::Oth: return "Oth";
    case FPCategory::BG: return "BG";
  }
  return "?";
}

double iou(const Box& a, const Box& b) {
  a.validate();
  b.validate();
  const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  if (inter == 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

std::vector<MatchResult> match_detections(const std::vector<Detection>& dets,
                                          const std::vector<GroundTruthBox>& gts,
                                          double correct_iou) {
  if (!(correct_iou > 0.0 && correct_iou < 1.0))
    throw std::invalid_argument("match_detections: correct_iou must be in (0,1)");

  // Descending score, stable on ties.
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<bool> gt_matched(gts.size(), false);
  std::vector<MatchResult> results(dets.size());

  for (std::size_t oi : order) {
    const Detection& det = dets[oi];
    int best_unmatched = -1, best_matched = -1;
    double best_unmatched_iou = 0.0, best_matched_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].category != det.category || gts[g].image_id != det.image_id) continue;
      const double v = iou(det.box, gts[g].box);
      if (v < correct_iou) continue;
      if (!gt_matched[g]) {
        if (v > best_unmatched_iou) {
          best_unmatched_iou = v;
          best_unmatched = static_cast<int>(g);
        }
      } else if (v > best_matched_iou) {
        best_matched_iou = v;
        best_matched = static_cast<int>(g);
      }
    }
    if (best_unmatched >= 0) {
      gt_matched[static_cast<std::size_t>(best_unmatched)] = true;
      results[oi] = {MatchKind::TP, best_unmatched};
    } else if (best_matched >= 0) {
      results[oi] = {MatchKind::Duplicate, best_matched};
    } else {
      results[oi] = {MatchKind::FP, -1};
    }
  }
  return results;
}

FPCategory categorize_fp(const Detection& det, const std::vector<GroundTruthBox>& gts,
                         const SimilarityMap& similarity, double weak_iou, double correct_iou) {
  if (!(weak_iou > 0.0 && weak_iou < correct_iou))
    throw std::invalid_argument("categorize_fp: need 0 < weak_iou < correct_iou");
  double best_same = 0.0, best_sim = 0.0, best_oth = 0.0;
  for (const auto& gt : gts) {
    if (gt.image_id != det.image_id) continue;
    const double v = iou(det.box, gt.box);
    if (gt.category == det.category) {
      best_same = std::max(best_same, v);
    } else if (similarity.similar(det.category, gt.category)) {
      best_sim = std::max(best_sim, v);
    } else {
      best_oth = std::max(best_oth, v);
    }
  }
  if (best_same >= weak_iou) return FPCategory::Loc;
  if (best_sim >= weak_iou) return FPCategory::Sim;
  if (best_oth >= weak_iou) return FPCategory::Oth;
  return FPCategory::BG;
}

std::map<int, FPDistribution> top_fp_distribution(const std::vector<Detection>& dets,
                                                  const std::vector<GroundTruthBox>& gts,
                                                  const SimilarityMap& similarity,
                                                  const DiagnoseThresholds& thresholds) {
  // Matching happens per image over all categories at once.
  const std::vector<MatchResult> matches = match_detections(dets, gts, thresholds.correct_iou);

  std::map<int, int> gt_count;
  for (const auto& gt : gts) ++gt_count[gt.category];

  std::map<int, FPDistribution> out;
  for (const auto& [category, n] : gt_count) {
    std::vector<std::size_t> cat_dets;
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (dets[i].category == category) cat_dets.push_back(i);
    std::stable_sort(cat_dets.begin(), cat_dets.end(), [&](std::size_t a, std::size_t b) {
      return dets[a].score > dets[b].score;
    });
    if (static_cast<int>(cat_dets.size()) > n) cat_dets.resize(static_cast<std::size_t>(n));

    FPDistribution dist;
    std::array<int, 4> counts{};
    for (std::size_t i : cat_dets) {
      if (matches[i].kind == MatchKind::TP) continue;
      const FPCategory fc = categorize_fp(dets[i], gts, similarity, thresholds.weak_iou,
                                          thresholds.correct_iou);
      ++counts[static_cast<std::size_t>(fc)];
      ++dist.fp_count;
    }
    if (dist.fp_count > 0)
      for (int k = 0; k < 4; ++k)
        dist.fractions[static_cast<std::size_t>(k)] =
            static_cast<double>(counts[static_cast<std::size_t>(k)]) / dist.fp_count;
    out[category] = dist;
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

std::vector<Detection> load_detections_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_detections_csv: cannot open " + path);
  std::vector<Detection> dets;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("image_id", 0) == 0) continue;  // header
    const auto f = split_csv_line(line);
    if (f.size() != 7)
      throw std::runtime_error("load_detections_csv: line " + std::to_string(line_no) +
                               " has " + std::to_string(f.size()) + " fields, expected 7");
    Detection d;
    d.image_id = f[0];
    d.category = std::stoi(f[1]);
    d.score = std::stod(f[2]);
    d.box = {std::stod(f[3]), std::stod(f[4]), std::stod(f[5]), std::stod(f[6])};
    d.box.validate();
    dets.push_back(std::move(d));
  }
  return dets;
}

std::vector<GroundTruthBox> load_ground_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_ground_truth_csv: cannot open " + path);
  std::vector<GroundTruthBox> gts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("image_id", 0) == 0) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6)
      throw std::runtime_error("load_ground_truth_csv: line " + std::to_string(line_no) +
                               " has " + std::to_string(f.size()) + " fields, expected 6");
    GroundTruthBox g;
    g.image_id = f[0];
    g.category = std::stoi(f[1]);
    g.box = {std::stod(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5])};
    g.box.validate();
    gts.push_back(std::move(g));
  }
  return gts;
}

std::string distributions_to_csv(const std::map<int, FPDistribution>& dist) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(17);
  out << "category,fp_count,loc,sim,oth,bg\n";
  for (const auto& [cat, d] : dist) {
    out << cat << "," << d.fp_count;
    for (double fr : d.fractions) out << "," << fr;
    out << "\n";
  }
  return out.str();
}

}  // namespace exemplar::diagnose
