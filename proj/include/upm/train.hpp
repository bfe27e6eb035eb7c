#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "upm/datagen.hpp"
#include "upm/loss.hpp"
#include "upm/types.hpp"

namespace upm {

enum class SamplingMode { SameClass, HalfMixed };

const char* to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 20;
  int pairs_per_epoch = 200;
  int batch_size = 8;
  double learning_rate = 0.5;
  double momentum = 0.9;
  bool outlier_aware = true;
  SamplingMode sampling = SamplingMode::SameClass;
  UniverseSpec universe;
  double clamp = 1e-7;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.2;
};

void validate(const TrainConfig& config);

struct SampledPair {
  int a = 0, b = 0;  // indices into the instance set
  Matching gt;
};

/// SameClass draws both graphs from one uniformly chosen class; HalfMixed
/// alternates same-class and cross-class pairs (cross-class ground truth is
/// the zero matrix). Ground truth comes from the planted universe ids.
std::vector<SampledPair> sample_pairs(const InstanceSet& set,
                                      SamplingMode mode, int count,
                                      std::mt19937_64& rng);

/// Gradients with respect to every learnable parameter of the metric.
struct ParamGrads {
  Matrix weight;
  Vector bn_gamma, bn_beta;

  static ParamGrads zero_like(const UniverseMetric& metric);
  ParamGrads& operator+=(const ParamGrads& o);
  ParamGrads& operator*=(double s);
};

/// Training-mode loss of one batch (updates running statistics) and, when
/// grads is non-null, the exact chain-rule gradients through the linear map,
/// rectifier and normalization parameters.
double batch_loss(UniverseMetric& metric, const InstanceSet& set,
                  const std::vector<SampledPair>& batch,
                  const BceOptions& opts, ParamGrads* grads);

/// Classic momentum step: velocity = momentum * velocity + grads;
/// parameters -= learning_rate * velocity.
void sgd_step(UniverseMetric& metric, const ParamGrads& grads,
              ParamGrads& velocity, double learning_rate, double momentum);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double holdout_f1 = 0.0;
  /// Fraction of planted held-out outliers whose argmax is the absorbing
  /// column; NaN when the held-out split has no planted outliers.
  double outlier_absorption = 0.0;
};

struct TrainResult {
  UniverseMetric metric;
  std::vector<EpochStats> history;
};

/// SGD with momentum over sampled pairs. Deterministic given the seed; the
/// held-out split (holdout_fraction per class) is fixed before training and
/// scored in evaluation mode after every epoch.
TrainResult train(const UniverseMetric& initial, const InstanceSet& set,
                  const TrainConfig& config);

}  // namespace upm
