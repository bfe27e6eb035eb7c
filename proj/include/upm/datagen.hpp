#pragma once

#include <array>
#include <cstdint>

#include "upm/types.hpp"

namespace upm {

/// Recipe for a synthetic instance set with planted universe ground truth.
/// Classes get unit-norm anchor prototypes (orthogonalized when the feature
/// dimension allows); graphs sample a subset of their class anchors with
/// Gaussian feature noise and append box-uniform outlier nodes.
struct GenConfig {
  int class_count = 1;
  std::vector<int> anchors_per_class;  // one entry per class
  int feature_dim = 16;
  int graphs_per_class = 10;
  std::array<int, 2> inlier_drop_range{0, 0};
  std::array<int, 2> outlier_count_range{0, 0};
  double feature_noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const GenConfig& config);

/// Fully reproducible from config.seed; equal configs give bit-identical
/// sets. Node order is shuffled per graph so position leaks nothing.
InstanceSet generate(const GenConfig& config);

/// Derived pairwise ground truth: nodes match iff they carry the same
/// non-absorbing planted anchor and the graphs share a class. Inter-class
/// pairs yield the zero matrix.
Matching derive_pairwise_gt(const GraphInstance& a, const GraphInstance& b);

}  // namespace upm
