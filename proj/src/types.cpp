#include "upm/types.hpp"

#include <algorithm>
#include <numeric>

#include "upm/check.hpp"

namespace upm {

namespace {

void validate_partial_permutation(const IndexMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      detail::require(m(i, j) == 0 || m(i, j) == 1,
                      "Matching entries must be 0 or 1");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    detail::require(m.row(i).sum() <= 1, "Matching row sum exceeds 1");
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    detail::require(m.col(j).sum() <= 1, "Matching column sum exceeds 1");
}

}  // namespace

Matching::Matching(Eigen::Index rows, Eigen::Index cols)
    : m_(IndexMatrix::Zero(rows, cols)) {
  detail::require(rows >= 0 && cols >= 0, "Matching dimensions must be >= 0");
}

Matching Matching::from_matrix(const IndexMatrix& m) {
  validate_partial_permutation(m);
  return Matching(m);
}

Matching Matching::from_pairs(Eigen::Index rows, Eigen::Index cols,
                              const std::vector<std::pair<int, int>>& pairs) {
  IndexMatrix m = IndexMatrix::Zero(rows, cols);
  for (auto [i, j] : pairs) {
    detail::require(i >= 0 && i < rows && j >= 0 && j < cols,
                    "Matching pair out of range");
    m(i, j) = 1;
  }
  validate_partial_permutation(m);
  return Matching(m);
}

Matching Matching::from_row_assignment(const std::vector<int>& row_to_col,
                                       Eigen::Index cols) {
  IndexMatrix m =
      IndexMatrix::Zero(static_cast<Eigen::Index>(row_to_col.size()), cols);
  for (std::size_t i = 0; i < row_to_col.size(); ++i) {
    int j = row_to_col[i];
    if (j < 0) continue;
    detail::require(j < cols, "Matching column index out of range");
    m(static_cast<Eigen::Index>(i), j) = 1;
  }
  validate_partial_permutation(m);
  return Matching(m);
}

int Matching::row_match(Eigen::Index i) const {
  for (Eigen::Index j = 0; j < m_.cols(); ++j)
    if (m_(i, j) != 0) return static_cast<int>(j);
  return -1;
}

int Matching::col_match(Eigen::Index j) const {
  for (Eigen::Index i = 0; i < m_.rows(); ++i)
    if (m_(i, j) != 0) return static_cast<int>(i);
  return -1;
}

Matching Matching::transposed() const { return Matching(m_.transpose()); }

const char* to_string(UniverseMode mode) {
  return mode == UniverseMode::FeatureMerged ? "feature_merged" : "node_merged";
}

UniverseMode universe_mode_from_string(const std::string& s) {
  if (s == "feature_merged") return UniverseMode::FeatureMerged;
  if (s == "node_merged") return UniverseMode::NodeMerged;
  throw std::invalid_argument("unknown universe mode: " + s);
}

int InstanceSet::universe_size(UniverseMode mode) const {
  detail::require(!anchors_per_class.empty(),
                  "InstanceSet has no anchor counts");
  if (mode == UniverseMode::FeatureMerged)
    return *std::max_element(anchors_per_class.begin(),
                             anchors_per_class.end()) +
           1;
  return std::accumulate(anchors_per_class.begin(), anchors_per_class.end(),
                         0) +
         1;
}

UniverseSpec InstanceSet::universe_spec(UniverseMode mode) const {
  return UniverseSpec{universe_size(mode), mode, class_count};
}

const char* to_string(NodeType t) {
  switch (t) {
    case NodeType::MatchedInlier: return "matched_inlier";
    case NodeType::UnmatchedInlier: return "unmatched_inlier";
    case NodeType::Outlier: return "outlier";
  }
  return "?";
}

int pgc(int node, const Matching& pair_gt) {
  detail::require(node >= 0 && node < pair_gt.rows(),
                  "pgc: node index out of range");
  return pair_gt.row_match(node) >= 0 ? 1 : 0;
}

int mgc(int node, const GraphInstance& graph,
        const std::vector<CorpusMatch>& corpus) {
  detail::require(node >= 0 && node < graph.size(),
                  "mgc: node index out of range");
  for (const CorpusMatch& cm : corpus) {
    detail::require(cm.gt.rows() == graph.size(),
                    "mgc: matching rows do not cover the queried graph");
    detail::require(cm.other == nullptr || cm.gt.cols() == cm.other->size(),
                    "mgc: matching columns do not cover the corpus graph");
    if (cm.gt.row_match(node) >= 0) return 1;
  }
  return 0;
}

NodeType node_type(int node, const GraphInstance& graph,
                   const Matching& pair_gt,
                   const std::vector<CorpusMatch>& corpus) {
  if (pgc(node, pair_gt)) return NodeType::MatchedInlier;
  if (mgc(node, graph, corpus)) return NodeType::UnmatchedInlier;
  return NodeType::Outlier;
}

std::vector<NodeType> node_types(const GraphInstance& graph,
                                 const Matching& pair_gt,
                                 const std::vector<CorpusMatch>& corpus) {
  std::vector<NodeType> out;
  out.reserve(static_cast<std::size_t>(graph.size()));
  for (int v = 0; v < graph.size(); ++v)
    out.push_back(node_type(v, graph, pair_gt, corpus));
  return out;
}

}  // namespace upm
