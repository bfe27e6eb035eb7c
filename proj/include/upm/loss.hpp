#pragma once

#include <vector>

#include "upm/affinity.hpp"
#include "upm/types.hpp"

namespace upm {

/// One training pair: two universe affinities plus the pairwise ground truth.
struct PairBatchItem {
  UniverseAffinity sa, sb;
  Matching gt;  // n_a x n_b
  double weight = 1.0;
};

struct BceOptions {
  bool outlier_aware = true;
  double clamp = 1e-7;  // probabilities are clamped to [clamp, 1 - clamp]
};

/// Loss value plus analytic gradients with respect to the raw affinities,
/// one matrix per batch item and side.
struct BceResult {
  double loss = 0.0;
  std::vector<Matrix> grad_a;  // d loss / d sa.raw
  std::vector<Matrix> grad_b;  // d loss / d sb.raw
};

/// Matching probability of nodes i and j: inner product of the two
/// row-stochastic affinity rows over all anchors.
double match_prob(const UniverseAffinity& sa, const UniverseAffinity& sb,
                  int i, int j);

/// Same inner product with the absorbing column excluded, so two nodes that
/// both sit on the absorbing node still count as unmatched.
double partial_match_prob(const UniverseAffinity& sa,
                          const UniverseAffinity& sb, int i, int j);

/// Summed binary cross entropy over all node pairs of all items, on full
/// matching probabilities (vanilla) or absorbing-excluded ones
/// (outlier-aware). Gradients are the exact chain-rule gradients of the
/// computed (clamped) loss through the row softmax.
BceResult bce_loss(const std::vector<PairBatchItem>& items,
                   const BceOptions& opts);

/// Closed-form gradient of the single-term vanilla loss for pair (i,j) with
/// respect to the raw affinity entry (i,t) of side a. Cross-check oracle for
/// the batched chain-rule gradient, not the gradient of record.
double vanilla_grad_entry(const UniverseAffinity& sa,
                          const UniverseAffinity& sb, int i, int j, int t,
                          int x_ij);

/// Closed-form gradient of the single-term outlier-aware loss with respect to
/// the absorbing-column raw entry of side a. Positive when x_ij = 1, and
/// never positive when x_ij = 0, which is what pushes outliers into the
/// absorbing node.
double outlier_grad_absorbing(const UniverseAffinity& sa,
                              const UniverseAffinity& sb, int i, int j,
                              int x_ij, double clamp = 1e-7);

}  // namespace upm
