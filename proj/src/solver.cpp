#include "upm/solver.hpp"

#include <algorithm>

#include "upm/counters.hpp"

namespace upm {

OutlierFilterResult outlier_filter(const UniverseAffinity& s) {
  detail::require(s.universe_size() >= 2,
                  "outlier_filter: universe size must be >= 2");
  const Eigen::Index nu = s.universe_size();
  OutlierFilterResult out;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < nu; ++j)
      if (s.prob(i, j) > s.prob(i, best)) best = j;
    if (best != nu - 1) out.kept.push_back(static_cast<int>(i));
  }
  out.scores.resize(static_cast<Eigen::Index>(out.kept.size()), nu - 1);
  for (std::size_t r = 0; r < out.kept.size(); ++r)
    out.scores.row(static_cast<Eigen::Index>(r)) =
        s.prob.row(out.kept[r]).head(nu - 1);
  return out;
}

Matching hungarian(const Eigen::Ref<const Matrix>& scorelike, bool maximize) {
  op_counters().hungarian_calls++;
  const Matrix score = scorelike;
  const std::vector<int> row_to_col = hungarian_assignment(score, maximize);
  return Matching::from_row_assignment(row_to_col, score.cols());
}

UniverseAssignment infer_universe(const UniverseAffinity& s,
                                  std::string graph_id) {
  OutlierFilterResult filtered = outlier_filter(s);
  const Matching assignment = hungarian(filtered.scores, /*maximize=*/true);

  UniverseAssignment out;
  out.graph_id = std::move(graph_id);
  out.universe_size = static_cast<int>(s.universe_size());
  out.anchor.assign(static_cast<std::size_t>(s.size()),
                    UniverseAssignment::kOutlier);
  for (std::size_t r = 0; r < filtered.kept.size(); ++r) {
    const int col = assignment.row_match(static_cast<Eigen::Index>(r));
    if (col < 0) continue;  // more kept rows than anchors
    out.anchor[static_cast<std::size_t>(filtered.kept[r])] = col;
    out.score += filtered.scores(static_cast<Eigen::Index>(r), col);
  }
  return out;
}

Matching reconstruct_pairwise(const UniverseAssignment& xa,
                              const UniverseAssignment& xb) {
  detail::require(xa.universe_size == xb.universe_size,
                  "reconstruct_pairwise: universe size mismatch");
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < xa.size(); ++i) {
    if (xa.is_outlier(i)) continue;
    for (int j = 0; j < xb.size(); ++j)
      if (xb.anchor[j] == xa.anchor[i]) pairs.emplace_back(i, j);
  }
  return Matching::from_pairs(xa.size(), xb.size(), pairs);
}

}  // namespace upm
