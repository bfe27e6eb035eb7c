#pragma once

#include <cstdint>

#include "upm/types.hpp"

namespace upm {

/// Learnable universe layer. The weight matrix plays the role of the anchor
/// feature product (one linear map), optionally preceded by per-channel
/// standardization and a rectifier. The last weight column scores the
/// absorbing node.
struct UniverseMetric {
  Matrix weight;  // d x n_u
  Vector bn_gamma, bn_beta;               // d, learnable
  Vector bn_running_mean, bn_running_var; // d, updated in training forwards
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;
  bool nonlinearity = true;
  double temperature = 1.0;

  Eigen::Index feature_dim() const { return weight.rows(); }
  Eigen::Index universe_size() const { return weight.cols(); }

  /// Gaussian init with std 1/sqrt(d) so the initial softmax stays
  /// near-uniform; unit scale / zero shift / unit running variance.
  static UniverseMetric init(int feature_dim, int universe_size,
                             std::uint64_t seed, bool nonlinearity = true,
                             double temperature = 1.0);
};

/// Node-to-anchor scores of one graph. prob is the row-wise softmax of
/// raw / temperature, so every row sums to 1.
struct UniverseAffinity {
  Matrix raw;   // n x n_u
  Matrix prob;  // n x n_u, row-stochastic
  double temperature = 1.0;

  Eigen::Index size() const { return raw.rows(); }
  Eigen::Index universe_size() const { return raw.cols(); }
};

/// Numerically stable row-wise softmax with temperature.
Matrix row_softmax(const Eigen::Ref<const Matrix>& scores,
                   double temperature = 1.0);

/// Builds a UniverseAffinity from raw scores (softmax included). Handy for
/// tests and for finite-difference probes around a raw matrix.
UniverseAffinity affinity_from_raw(Matrix raw, double temperature = 1.0);

/// Intermediates of a training forward, kept for the parameter backward pass.
struct ForwardCache {
  Matrix standardized;   // (F - mu) / sqrt(var + eps), n x d
  Matrix pre_activation; // gamma * standardized + beta, n x d
  Matrix hidden;         // rectifier output (or plain F), n x d
};

/// Evaluation forward: standardizes with running statistics (when the
/// nonlinearity is enabled) and never mutates the metric.
UniverseAffinity forward(const UniverseMetric& metric,
                         const Eigen::Ref<const Matrix>& features);

/// Training forward: standardizes with batch statistics, updates the running
/// statistics in place and optionally exposes intermediates. Callers must
/// serialize training forwards per metric instance.
UniverseAffinity forward_training(UniverseMetric& metric,
                                  const Eigen::Ref<const Matrix>& features,
                                  ForwardCache* cache = nullptr);

/// Reconstructed pairwise affinity sa * sb^T. Defaults to the row-stochastic
/// matrices (entries land in [0,1]); use_raw switches to the raw scores.
Matrix pairwise_affinity(const UniverseAffinity& sa, const UniverseAffinity& sb,
                         bool use_raw = false);

/// Second-order affinity matrix over node pairs, (n_a n_b) x (n_a n_b) with
/// column-major pair indexing: entry ((i,k),(j,l)) = s(i,k) * s(j,l), so the
/// diagonal carries the squared node affinities. Requires s_ab >= 0.
Matrix build_ku(const Eigen::Ref<const Matrix>& s_ab);

/// Quadratic assignment objective vec(X)^T K vec(X) for a candidate matching.
/// Scoring oracle only, never a solver.
double qap_score(const Eigen::Ref<const Matrix>& k, const Matching& x);

}  // namespace upm
