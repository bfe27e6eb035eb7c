#include "upm/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "upm/check.hpp"
#include "upm/metrics.hpp"
#include "upm/solver.hpp"

namespace upm {

const char* to_string(SamplingMode mode) {
  return mode == SamplingMode::SameClass ? "same_class" : "half_mixed";
}

SamplingMode sampling_mode_from_string(const std::string& s) {
  if (s == "same_class") return SamplingMode::SameClass;
  if (s == "half_mixed") return SamplingMode::HalfMixed;
  throw std::invalid_argument("unknown sampling mode: " + s);
}

void validate(const TrainConfig& c) {
  detail::require(c.epochs >= 0, "TrainConfig.epochs must be >= 0");
  detail::require(c.pairs_per_epoch >= 1,
                  "TrainConfig.pairs_per_epoch must be >= 1");
  detail::require(c.batch_size >= 1, "TrainConfig.batch_size must be >= 1");
  detail::require(c.learning_rate >= 0.0,
                  "TrainConfig.learning_rate must be >= 0");
  detail::require(c.momentum >= 0.0 && c.momentum < 1.0,
                  "TrainConfig.momentum must lie in [0, 1)");
  detail::require(c.clamp > 0.0 && c.clamp < 0.5,
                  "TrainConfig.clamp must lie in (0, 0.5)");
  detail::require(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0,
                  "TrainConfig.holdout_fraction must lie in [0, 1)");
  detail::require(c.universe.n_u >= 2, "TrainConfig.universe.n_u must be >= 2");
}

std::vector<SampledPair> sample_pairs(const InstanceSet& set,
                                      SamplingMode mode, int count,
                                      std::mt19937_64& rng) {
  detail::require(count >= 0, "sample_pairs: count must be >= 0");
  std::vector<std::vector<int>> members(
      static_cast<std::size_t>(std::max(set.class_count, 1)));
  for (std::size_t i = 0; i < set.graphs.size(); ++i)
    members[static_cast<std::size_t>(set.graphs[i].class_id)].push_back(
        static_cast<int>(i));

  std::vector<int> pair_classes;  // classes with at least two graphs
  std::vector<int> nonempty;
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].size() >= 2) pair_classes.push_back(static_cast<int>(c));
    if (!members[c].empty()) nonempty.push_back(static_cast<int>(c));
  }
  detail::require(!pair_classes.empty(),
                  "sample_pairs: need a class with at least two graphs");
  detail::require(mode != SamplingMode::HalfMixed || nonempty.size() >= 2,
                  "sample_pairs: half-mixed sampling needs two classes");

  auto pick = [&rng](const std::vector<int>& v) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng)];
  };

  std::vector<SampledPair> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) {
    SampledPair p;
    const bool cross = mode == SamplingMode::HalfMixed && (t % 2 == 1);
    if (cross) {
      const int ca = pick(nonempty);
      int cb = ca;
      while (cb == ca) cb = pick(nonempty);
      p.a = pick(members[static_cast<std::size_t>(ca)]);
      p.b = pick(members[static_cast<std::size_t>(cb)]);
    } else {
      const auto& pool =
          members[static_cast<std::size_t>(pick(pair_classes))];
      p.a = pick(pool);
      p.b = p.a;
      while (p.b == p.a) p.b = pick(pool);
    }
    p.gt = derive_pairwise_gt(set.graphs[static_cast<std::size_t>(p.a)],
                              set.graphs[static_cast<std::size_t>(p.b)]);
    out.push_back(std::move(p));
  }
  return out;
}

ParamGrads ParamGrads::zero_like(const UniverseMetric& metric) {
  ParamGrads g;
  g.weight = Matrix::Zero(metric.feature_dim(), metric.universe_size());
  g.bn_gamma = Vector::Zero(metric.feature_dim());
  g.bn_beta = Vector::Zero(metric.feature_dim());
  return g;
}

ParamGrads& ParamGrads::operator+=(const ParamGrads& o) {
  weight += o.weight;
  bn_gamma += o.bn_gamma;
  bn_beta += o.bn_beta;
  return *this;
}

ParamGrads& ParamGrads::operator*=(double s) {
  weight *= s;
  bn_gamma *= s;
  bn_beta *= s;
  return *this;
}

namespace {

// Chain from d loss / d raw into the metric parameters for one graph side.
void accumulate_side(const UniverseMetric& metric, const ForwardCache& cache,
                     const Matrix& grad_raw, ParamGrads& grads) {
  grads.weight += cache.hidden.transpose() * grad_raw;
  if (!metric.nonlinearity) return;
  Matrix grad_hidden = grad_raw * metric.weight.transpose();
  Matrix grad_pre =
      (cache.pre_activation.array() > 0.0).cast<double>() * grad_hidden.array();
  grads.bn_gamma += (grad_pre.array() * cache.standardized.array())
                        .colwise()
                        .sum()
                        .transpose()
                        .matrix();
  grads.bn_beta += grad_pre.colwise().sum().transpose();
}

}  // namespace

double batch_loss(UniverseMetric& metric, const InstanceSet& set,
                  const std::vector<SampledPair>& batch,
                  const BceOptions& opts, ParamGrads* grads) {
  std::vector<PairBatchItem> items;
  std::vector<ForwardCache> cache_a(batch.size()), cache_b(batch.size());
  items.reserve(batch.size());
  for (std::size_t p = 0; p < batch.size(); ++p) {
    const GraphInstance& ga = set.graphs[static_cast<std::size_t>(batch[p].a)];
    const GraphInstance& gb = set.graphs[static_cast<std::size_t>(batch[p].b)];
    PairBatchItem item;
    item.sa = forward_training(metric, ga.features, &cache_a[p]);
    item.sb = forward_training(metric, gb.features, &cache_b[p]);
    item.gt = batch[p].gt;
    items.push_back(std::move(item));
  }
  const BceResult result = bce_loss(items, opts);
  if (grads) {
    for (std::size_t p = 0; p < batch.size(); ++p) {
      accumulate_side(metric, cache_a[p], result.grad_a[p], *grads);
      accumulate_side(metric, cache_b[p], result.grad_b[p], *grads);
    }
  }
  return result.loss;
}

void sgd_step(UniverseMetric& metric, const ParamGrads& grads,
              ParamGrads& velocity, double learning_rate, double momentum) {
  velocity *= momentum;
  velocity += grads;
  metric.weight -= learning_rate * velocity.weight;
  metric.bn_gamma -= learning_rate * velocity.bn_gamma;
  metric.bn_beta -= learning_rate * velocity.bn_beta;
}

namespace {

struct Split {
  std::vector<int> train, holdout;
};

Split split_holdout(const InstanceSet& set, double fraction,
                    std::uint64_t seed) {
  Split split;
  std::mt19937_64 rng(seed ^ 0x853c49e6748fea9bULL);
  std::vector<std::vector<int>> members(
      static_cast<std::size_t>(std::max(set.class_count, 1)));
  for (std::size_t i = 0; i < set.graphs.size(); ++i)
    members[static_cast<std::size_t>(set.graphs[i].class_id)].push_back(
        static_cast<int>(i));
  for (auto& pool : members) {
    std::shuffle(pool.begin(), pool.end(), rng);
    std::size_t held = pool.size() >= 2
                           ? static_cast<std::size_t>(std::llround(
                                 fraction * double(pool.size())))
                           : 0;
    held = std::min(held, pool.size() - (pool.empty() ? 0 : 1));
    for (std::size_t i = 0; i < pool.size(); ++i)
      (i < held ? split.holdout : split.train).push_back(pool[i]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.holdout.begin(), split.holdout.end());
  return split;
}

struct HoldoutScores {
  double f1 = std::numeric_limits<double>::quiet_NaN();
  double absorption = std::numeric_limits<double>::quiet_NaN();
};

HoldoutScores score_holdout(const UniverseMetric& metric,
                            const InstanceSet& set,
                            const std::vector<int>& holdout) {
  HoldoutScores scores;
  if (holdout.empty()) return scores;

  std::vector<UniverseAffinity> affinities;
  std::vector<UniverseAssignment> assignments;
  affinities.reserve(holdout.size());
  for (int idx : holdout) {
    affinities.push_back(
        forward(metric, set.graphs[static_cast<std::size_t>(idx)].features));
    assignments.push_back(infer_universe(affinities.back()));
  }

  double f1_sum = 0.0;
  long pair_count = 0;
  for (std::size_t a = 0; a < holdout.size(); ++a) {
    const GraphInstance& ga = set.graphs[static_cast<std::size_t>(holdout[a])];
    for (std::size_t b = a + 1; b < holdout.size(); ++b) {
      const GraphInstance& gb =
          set.graphs[static_cast<std::size_t>(holdout[b])];
      if (ga.class_id != gb.class_id) continue;
      const Matching pred =
          reconstruct_pairwise(assignments[a], assignments[b]);
      f1_sum += f1(pred, derive_pairwise_gt(ga, gb)).f1;
      pair_count++;
    }
  }
  if (pair_count > 0) scores.f1 = f1_sum / double(pair_count);

  long planted = 0, absorbed = 0;
  const Eigen::Index absorbing = metric.universe_size() - 1;
  for (std::size_t a = 0; a < holdout.size(); ++a) {
    const GraphInstance& g = set.graphs[static_cast<std::size_t>(holdout[a])];
    if (!g.gt_universe) continue;
    for (Eigen::Index v = 0; v < g.size(); ++v) {
      if ((*g.gt_universe)[static_cast<std::size_t>(v)] >= 0) continue;
      planted++;
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < affinities[a].universe_size(); ++j)
        if (affinities[a].prob(v, j) > affinities[a].prob(v, best)) best = j;
      absorbed += best == absorbing;
    }
  }
  if (planted > 0) scores.absorption = double(absorbed) / double(planted);
  return scores;
}

InstanceSet subset(const InstanceSet& set, const std::vector<int>& indices) {
  InstanceSet out;
  out.class_count = set.class_count;
  out.anchors_per_class = set.anchors_per_class;
  out.feature_dim = set.feature_dim;
  out.seed = set.seed;
  out.random_prototype_fallback = set.random_prototype_fallback;
  out.graphs.reserve(indices.size());
  for (int i : indices)
    out.graphs.push_back(set.graphs[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

TrainResult train(const UniverseMetric& initial, const InstanceSet& set,
                  const TrainConfig& config) {
  validate(config);
  detail::require(!set.graphs.empty(), "train: dataset is empty");
  detail::require(set.feature_dim == initial.feature_dim(),
                  "train: feature dimension mismatch");
  detail::require(config.universe.n_u == initial.universe_size(),
                  "train: universe size mismatch");

  TrainResult result;
  result.metric = initial;

  const Split split =
      split_holdout(set, config.holdout_fraction, config.seed);
  const InstanceSet train_set = subset(set, split.train);

  std::mt19937_64 rng(config.seed);
  ParamGrads velocity = ParamGrads::zero_like(result.metric);
  const BceOptions opts{config.outlier_aware, config.clamp};

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<SampledPair> pairs = sample_pairs(
        train_set, config.sampling, config.pairs_per_epoch, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < pairs.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(
          pairs.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::vector<SampledPair> batch(pairs.begin() + start,
                                           pairs.begin() + stop);
      ParamGrads grads = ParamGrads::zero_like(result.metric);
      const double loss =
          batch_loss(result.metric, train_set, batch, opts, &grads);
      if (!std::isfinite(loss))
        throw std::runtime_error(
            "train: non-finite loss at epoch " + std::to_string(epoch) +
            ", batch " + std::to_string(start / config.batch_size));
      epoch_loss += loss;
      sgd_step(result.metric, grads, velocity, config.learning_rate,
               config.momentum);
    }

    const HoldoutScores scores =
        score_holdout(result.metric, set, split.holdout);
    result.history.push_back(EpochStats{epoch,
                                        epoch_loss / double(pairs.size()),
                                        scores.f1, scores.absorption});
  }
  return result;
}

}  // namespace upm
