#include "upm/metrics.hpp"

#include <algorithm>

#include "upm/check.hpp"

namespace upm {

F1Result f1(const Matching& pred, const Matching& gt) {
  detail::require(pred.rows() == gt.rows() && pred.cols() == gt.cols(),
                  "f1: shape mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      const bool p = pred.matched(i, j), g = gt.matched(i, j);
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
  }
  F1Result r;
  r.precision = (tp + fp) ? double(tp) / double(tp + fp) : (fn == 0 ? 1.0 : 0.0);
  r.recall = (tp + fn) ? double(tp) / double(tp + fn) : (fp == 0 ? 1.0 : 0.0);
  r.f1 = (tp + fp + fn) ? double(tp) / (double(tp) + 0.5 * double(fp + fn))
                        : 1.0;
  return r;
}

double accuracy(const Matching& pred, const Matching& gt,
                bool normalize_by_gt) {
  detail::require(pred.rows() == gt.rows() && pred.cols() == gt.cols(),
                  "accuracy: shape mismatch");
  const long denom = normalize_by_gt ? gt.match_count() : pred.match_count();
  long diff = 0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    for (Eigen::Index j = 0; j < pred.cols(); ++j)
      diff += pred.matched(i, j) != gt.matched(i, j);
  if (denom == 0) return diff == 0 ? 1.0 : 0.0;
  return 1.0 - double(diff) / double(denom);
}

MatchTypeCounts match_types(const Matching& pred,
                            const std::vector<NodeType>& types_a,
                            const std::vector<NodeType>& types_b,
                            const Matching& gt) {
  detail::require(pred.rows() == gt.rows() && pred.cols() == gt.cols(),
                  "match_types: shape mismatch");
  detail::require(types_a.size() == static_cast<std::size_t>(pred.rows()) &&
                      types_b.size() == static_cast<std::size_t>(pred.cols()),
                  "match_types: node type sequence length mismatch");
  MatchTypeCounts c;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      if (!pred.matched(i, j)) continue;
      if (gt.matched(i, j)) {
        c.correct++;
      } else {
        const NodeType a = types_a[static_cast<std::size_t>(i)];
        const NodeType b = types_b[static_cast<std::size_t>(j)];
        if (a == NodeType::Outlier || b == NodeType::Outlier)
          c.over_matching++;
        else if (a == NodeType::UnmatchedInlier ||
                 b == NodeType::UnmatchedInlier)
          c.ill_matching++;
        else
          c.mismatching++;
      }
    }
  }
  return c;
}

ClusteringScores clustering_metrics(const std::vector<int>& pred_labels,
                                    int k, const std::vector<int>& gt_labels,
                                    const Eigen::Ref<const Matrix>& per_pair_f1,
                                    const Eigen::Ref<const Matrix>& per_pair_acc,
                                    bool mac_as_written) {
  const std::size_t m = pred_labels.size();
  detail::require(m == gt_labels.size(),
                  "clustering_metrics: label length mismatch");
  detail::require(m >= 1 && k >= 1, "clustering_metrics: need data and k >= 1");
  detail::require(per_pair_f1.rows() == static_cast<Eigen::Index>(m) &&
                      per_pair_f1.cols() == static_cast<Eigen::Index>(m) &&
                      per_pair_acc.rows() == static_cast<Eigen::Index>(m) &&
                      per_pair_acc.cols() == static_cast<Eigen::Index>(m),
                  "clustering_metrics: per-pair matrix shape mismatch");
  for (int l : pred_labels)
    detail::require(l >= 0 && l < k, "clustering_metrics: label out of range");

  const int g = 1 + *std::max_element(gt_labels.begin(), gt_labels.end());
  Eigen::MatrixXd contingency = Eigen::MatrixXd::Zero(k, g);
  for (std::size_t v = 0; v < m; ++v)
    contingency(pred_labels[v], gt_labels[v]) += 1.0;
  const Eigen::VectorXd cluster_size = contingency.rowwise().sum();

  ClusteringScores s;

  for (int i = 0; i < k; ++i) s.cp += contingency.row(i).maxCoeff();
  s.cp /= double(m);

  long n11 = 0, n00 = 0, pairs = 0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      pairs++;
      const bool same_pred = pred_labels[a] == pred_labels[b];
      const bool same_gt = gt_labels[a] == gt_labels[b];
      n11 += same_pred && same_gt;
      n00 += !same_pred && !same_gt;
    }
  }
  s.ri = pairs ? double(n11 + n00) / double(pairs) : 1.0;

  // Wrong-pair mass inside predicted clusters (t1) and split mass of each
  // ground-truth class across predicted clusters (t2), ordered pairs.
  double t1 = 0.0, t2 = 0.0;
  for (int i = 0; i < k; ++i) {
    if (cluster_size(i) == 0.0) continue;
    t1 += 1.0 -
          contingency.row(i).squaredNorm() / (cluster_size(i) * cluster_size(i));
  }
  for (int j = 0; j < g; ++j) {
    double lin = 0.0, quad = 0.0;
    for (int i = 0; i < k; ++i) {
      if (cluster_size(i) == 0.0) continue;
      const double frac = contingency(i, j) / cluster_size(i);
      lin += frac;
      quad += frac * frac;
    }
    t2 += lin * lin - quad;
  }
  s.ca = 1.0 - (t1 + t2) / double(k);

  // Within-cluster matching quality over unordered distinct pairs.
  double f1_sum_over_clusters = 0.0, acc_sum_over_clusters = 0.0;
  int clusters_with_pairs = 0;
  double f1_written = 0.0, acc_written = 0.0;
  for (int i = 0; i < k; ++i) {
    double f1_sum = 0.0, acc_sum = 0.0;
    long count = 0;
    for (std::size_t a = 0; a < m; ++a) {
      if (pred_labels[a] != i) continue;
      for (std::size_t b = a + 1; b < m; ++b) {
        if (pred_labels[b] != i) continue;
        f1_sum += per_pair_f1(static_cast<Eigen::Index>(a),
                              static_cast<Eigen::Index>(b));
        acc_sum += per_pair_acc(static_cast<Eigen::Index>(a),
                                static_cast<Eigen::Index>(b));
        count++;
      }
    }
    if (count > 0) {
      clusters_with_pairs++;
      f1_sum_over_clusters += f1_sum / double(count);
      acc_sum_over_clusters += acc_sum / double(count);
    }
    if (cluster_size(i) > 0.0) {
      f1_written += f1_sum / (cluster_size(i) * cluster_size(i));
      acc_written += acc_sum / (cluster_size(i) * cluster_size(i));
    }
  }
  if (mac_as_written) {
    s.f1c = 1.0 - f1_written / double(k);
    s.mac = 1.0 - acc_written / double(k);
  } else if (clusters_with_pairs > 0) {
    s.f1c = f1_sum_over_clusters / double(clusters_with_pairs);
    s.mac = acc_sum_over_clusters / double(clusters_with_pairs);
  } else {
    s.f1c = 1.0;
    s.mac = 1.0;
  }
  return s;
}

}  // namespace upm
