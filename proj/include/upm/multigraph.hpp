#pragma once

#include <cstdint>
#include <vector>

#include "upm/affinity.hpp"
#include "upm/solver.hpp"
#include "upm/types.hpp"

namespace upm {

/// Online matching session. Each admitted graph is matched to the universe
/// once; pairwise results are reconstructed on demand and never cached, so
/// storage stays linear in the number of graphs.
class MatchSession {
 public:
  explicit MatchSession(const UniverseMetric& metric) : metric_(&metric) {}

  /// One evaluation forward plus one assignment solve, independent of how
  /// many graphs the session already holds.
  const UniverseAssignment& add(const GraphInstance& graph);

  /// Reconstruction from the stored universe assignments; no recomputation.
  Matching pairwise(int i, int j) const;

  std::size_t size() const { return stored_.size(); }
  const UniverseAssignment& assignment(int i) const;
  const UniverseMetric& metric() const { return *metric_; }

 private:
  const UniverseMetric* metric_;
  std::vector<UniverseAssignment> stored_;
};

/// Scalar similarity of a matched pair: the sum of the Hadamard product of
/// the predicted matching with the reconstructed pairwise affinity.
double affinity_score(const Matching& xab, const UniverseAffinity& sa,
                      const UniverseAffinity& sb);

struct ClusterResult {
  std::vector<int> labels;  // in [0, k)
  int k = 0;
  Matrix pairwise_scores;   // symmetric, what the clustering saw
};

/// Normalized-Laplacian spectral embedding (top-k eigenvectors, rows
/// normalized) followed by seeded k-means, 50 restarts, best inertia.
/// Labels are renumbered by first appearance, so equal partitions compare
/// equal directly.
ClusterResult spectral_cluster(const Eigen::Ref<const Matrix>& scores, int k,
                               std::uint64_t seed = 0);

struct ClusterPairMatch {
  int a = 0, b = 0;  // graph indices
  Matching matching;
};

struct MixtureResult {
  ClusterResult clusters;
  std::vector<UniverseAssignment> assignments;
  std::vector<UniverseAffinity> affinities;
  /// Pairwise matchings reported per predicted cluster.
  std::vector<std::vector<ClusterPairMatch>> cluster_matchings;
};

/// Full mixture matching run: universe inference for every graph, affinity
/// scores for every pair, spectral clustering, and matchings within the
/// predicted clusters.
MixtureResult mixture_pipeline(const std::vector<GraphInstance>& graphs,
                               const UniverseMetric& metric, int k,
                               std::uint64_t cluster_seed = 0);

}  // namespace upm
