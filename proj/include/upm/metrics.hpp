#pragma once

#include <vector>

#include "upm/types.hpp"

namespace upm {

struct F1Result {
  double f1 = 0.0, precision = 0.0, recall = 0.0;
};

/// Entrywise true/false positive counting over two matchings of equal shape.
/// Empty prediction and empty ground truth score 1; empty prediction against
/// a non-empty ground truth scores 0.
F1Result f1(const Matching& pred, const Matching& gt);

/// 1 - ||pred - gt||_F^2 / ||pred||_F^2, exactly as stated: normalized by the
/// prediction, so values may go negative. normalize_by_gt switches the
/// denominator to ||gt||_F^2. An empty denominator side yields 1 when the
/// other side is empty too, else 0.
double accuracy(const Matching& pred, const Matching& gt,
                bool normalize_by_gt = false);

struct MatchTypeCounts {
  long correct = 0;
  long mismatching = 0;    // both endpoints matched inliers, wrong pair
  long ill_matching = 0;   // an unmatched inlier involved, no outlier
  long over_matching = 0;  // an outlier involved

  long total() const {
    return correct + mismatching + ill_matching + over_matching;
  }
};

/// Classifies every predicted pair: correct when the ground truth agrees,
/// otherwise by the endpoint node types.
MatchTypeCounts match_types(const Matching& pred,
                            const std::vector<NodeType>& types_a,
                            const std::vector<NodeType>& types_b,
                            const Matching& gt);

struct ClusteringScores {
  double cp = 0.0;   // purity
  double ri = 0.0;   // Rand index
  double ca = 0.0;   // clustering accuracy
  double f1c = 0.0;  // within-cluster mean pairwise F1
  double mac = 0.0;  // within-cluster mean pairwise accuracy
};

/// Clustering quality of predicted labels against ground-truth labels, plus
/// the within-cluster matching quality averaged from the given per-pair
/// score matrices (symmetric, indexed like the label vectors).
///
/// F1C/MAC average over unordered distinct pairs inside each predicted
/// cluster; clusters without pairs are skipped. mac_as_written restores the
/// literal "one minus, normalized by squared cluster size" form for both.
ClusteringScores clustering_metrics(const std::vector<int>& pred_labels,
                                    int k, const std::vector<int>& gt_labels,
                                    const Eigen::Ref<const Matrix>& per_pair_f1,
                                    const Eigen::Ref<const Matrix>& per_pair_acc,
                                    bool mac_as_written = false);

}  // namespace upm
