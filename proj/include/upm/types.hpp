#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace upm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexMatrix = Eigen::MatrixXi;

/// Binary (partial) assignment matrix. Every row and every column carries at
/// most one 1, so a value is either a permutation, a partial permutation or
/// empty. Immutable after construction; all factories validate.
class Matching {
 public:
  Matching() = default;
  Matching(Eigen::Index rows, Eigen::Index cols);  // all-zero matching

  static Matching from_matrix(const IndexMatrix& m);
  static Matching from_pairs(Eigen::Index rows, Eigen::Index cols,
                             const std::vector<std::pair<int, int>>& pairs);
  /// row_to_col[i] is the matched column of row i, or -1 for unmatched.
  static Matching from_row_assignment(const std::vector<int>& row_to_col,
                                      Eigen::Index cols);

  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }
  bool matched(Eigen::Index i, Eigen::Index j) const { return m_(i, j) != 0; }
  /// Matched column of row i, or -1.
  int row_match(Eigen::Index i) const;
  /// Matched row of column j, or -1.
  int col_match(Eigen::Index j) const;
  long match_count() const { return m_.cast<long>().sum(); }
  bool empty() const { return match_count() == 0; }

  const IndexMatrix& matrix() const { return m_; }
  Matching transposed() const;

  bool operator==(const Matching& o) const {
    return m_.rows() == o.m_.rows() && m_.cols() == o.m_.cols() && m_ == o.m_;
  }

 private:
  explicit Matching(IndexMatrix m) : m_(std::move(m)) {}
  IndexMatrix m_;
};

/// One input graph. Edges are carried implicitly through node features; the
/// matching machinery never touches adjacency. gt_universe, when present,
/// stores the planted class-local anchor id per node, with -1 marking nodes
/// that belong to the absorbing slot (planted outliers).
struct GraphInstance {
  std::string id;
  int class_id = 0;
  Matrix features;  // n x d
  std::optional<std::vector<int>> gt_universe;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index feature_dim() const { return features.cols(); }
};

/// How per-class anchor sets fuse into one universe.
/// FeatureMerged shares anchor slots across classes (n_u ~ max_i n_i + 1),
/// NodeMerged gives every class its own slots (n_u ~ sum_i n_i + 1). The last
/// slot is always the absorbing node.
enum class UniverseMode { FeatureMerged, NodeMerged };

struct UniverseSpec {
  int n_u = 2;  // anchor count, absorbing node included
  UniverseMode mode = UniverseMode::FeatureMerged;
  int class_count = 1;
};

const char* to_string(UniverseMode mode);
UniverseMode universe_mode_from_string(const std::string& s);

/// A generated collection of graphs with planted ground truth.
struct InstanceSet {
  std::vector<GraphInstance> graphs;
  int class_count = 0;
  std::vector<int> anchors_per_class;
  int feature_dim = 0;
  std::uint64_t seed = 0;
  /// Set when prototypes could not be orthogonalized (more anchors than
  /// feature dimensions) and random unit vectors were used instead.
  bool random_prototype_fallback = false;

  /// Universe size implied by the anchor counts for the given mode
  /// (max or sum of per-class counts, plus the absorbing node).
  int universe_size(UniverseMode mode) const;
  UniverseSpec universe_spec(UniverseMode mode) const;
};

enum class NodeType { MatchedInlier, UnmatchedInlier, Outlier };

const char* to_string(NodeType t);

/// Ground-truth matching between a graph and one corpus member.
struct CorpusMatch {
  const GraphInstance* other = nullptr;
  Matching gt;  // rows: the queried graph, cols: *other
};

/// Pairwise graph correspondence: 1 iff the node is matched in pair_gt.
int pgc(int node, const Matching& pair_gt);

/// Multiple graph correspondence: 1 iff the node is matched in at least one
/// ground-truth matching across the corpus.
int mgc(int node, const GraphInstance& graph,
        const std::vector<CorpusMatch>& corpus);

/// Node taxonomy: PGC=1 -> MatchedInlier; PGC=0, MGC=1 -> UnmatchedInlier;
/// MGC=0 -> Outlier.
NodeType node_type(int node, const GraphInstance& graph,
                   const Matching& pair_gt,
                   const std::vector<CorpusMatch>& corpus);

/// Types of all nodes of `graph` for the pair described by pair_gt.
std::vector<NodeType> node_types(const GraphInstance& graph,
                                 const Matching& pair_gt,
                                 const std::vector<CorpusMatch>& corpus);

}  // namespace upm
