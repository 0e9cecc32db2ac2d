#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace exemplar::diagnose {

struct Box {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  void validate() const;
  double area() const { return (x_max - x_min) * (y_max - y_min); }
};

struct Detection {
  Box box;
  double score = 0;
  int category = 0;
  std::string image_id;
};

struct GroundTruthBox {
  Box box;
  int category = 0;
  std::string image_id;
};

// Symmetric similarity relation over categories; every category is similar
// to itself.
class SimilarityMap {
 public:
  void add_group(const std::vector<int>& categories);
  bool similar(int a, int b) const;

  // One group per line, category ids whitespace-separated.
  static SimilarityMap load(const std::string& path);
  std::string serialize() const;

 private:
  std::vector<std::set<int>> groups_;
};

enum class FPCategory { Loc, Sim, Oth, BG };
std::string fp_category_name(FPCategory c);

// Intersection over union; 0 for disjoint boxes.
double iou(const Box& a, const Box& b);

enum class MatchKind { TP, FP, Duplicate };

struct MatchResult {
  MatchKind kind = MatchKind::FP;
  int matched_gt = -1;  // index into the ground-truth list for TPs
};

// Greedy matching in descending score order (ties broken by input order):
// a detection is a TP if it has IoU >= correct_iou with a still-unmatched
// ground truth of its own category; a later detection overlapping only
// matched ground truths at that level is a duplicate. Results align with the
// input detections.
std::vector<MatchResult> match_detections(const std::vector<Detection>& dets,
                                          const std::vector<GroundTruthBox>& gts,
                                          double correct_iou);

// False-positive taxonomy for one detection already known to be an FP:
//   Loc: overlaps a same-category ground truth at IoU >= weak_iou (an FP with
//        same-category IoU >= correct_iou is necessarily a duplicate);
//   Sim: else overlaps a similar-category ground truth at IoU >= weak_iou;
//   Oth: else overlaps any other ground truth at IoU >= weak_iou;
//   BG:  otherwise.
FPCategory categorize_fp(const Detection& det, const std::vector<GroundTruthBox>& gts,
                         const SimilarityMap& similarity, double weak_iou, double correct_iou);

struct FPDistribution {
  std::array<double, 4> fractions{};  // Loc, Sim, Oth, BG
  int fp_count = 0;
  bool empty() const { return fp_count == 0; }
};

struct DiagnoseThresholds {
  double weak_iou = 0.1;
  double correct_iou = 0.5;
};

// Per category: N = number of ground-truth objects of that category; the FPs
// among the N highest-scoring detections of that category (matched per
// image) are categorized and normalized to fractions.
std::map<int, FPDistribution> top_fp_distribution(const std::vector<Detection>& dets,
                                                  const std::vector<GroundTruthBox>& gts,
                                                  const SimilarityMap& similarity,
                                                  const DiagnoseThresholds& thresholds);

// CSV I/O. Detections: "image_id,category,score,x_min,y_min,x_max,y_max";
// ground truth: the same minus score. A single header line is required.
std::vector<Detection> load_detections_csv(const std::string& path);
std::vector<GroundTruthBox> load_ground_truth_csv(const std::string& path);
std::string distributions_to_csv(const std::map<int, FPDistribution>& dist);

}  // namespace exemplar::diagnose
