#include "upm/affinity.hpp"

#include <cmath>
#include <random>

#include "upm/check.hpp"
#include "upm/counters.hpp"

namespace upm {

OpCounters& op_counters() {
  thread_local OpCounters counters;
  return counters;
}

UniverseMetric UniverseMetric::init(int feature_dim, int universe_size,
                                    std::uint64_t seed, bool nonlinearity,
                                    double temperature) {
  detail::require(feature_dim >= 1, "feature_dim must be >= 1");
  detail::require(universe_size >= 2,
                  "universe size must be >= 2 (one anchor plus absorbing)");
  detail::require(temperature > 0.0, "temperature must be > 0");
  UniverseMetric m;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(feature_dim));
  m.weight.resize(feature_dim, universe_size);
  for (Eigen::Index j = 0; j < m.weight.cols(); ++j)
    for (Eigen::Index i = 0; i < m.weight.rows(); ++i)
      m.weight(i, j) = gauss(rng);
  m.bn_gamma = Vector::Ones(feature_dim);
  m.bn_beta = Vector::Zero(feature_dim);
  m.bn_running_mean = Vector::Zero(feature_dim);
  m.bn_running_var = Vector::Ones(feature_dim);
  m.nonlinearity = nonlinearity;
  m.temperature = temperature;
  return m;
}

Matrix row_softmax(const Eigen::Ref<const Matrix>& scores,
                   double temperature) {
  detail::require(temperature > 0.0, "temperature must be > 0");
  Matrix out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    out.row(i) = ((scores.row(i).array() - m) / temperature).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

UniverseAffinity affinity_from_raw(Matrix raw, double temperature) {
  UniverseAffinity s;
  s.prob = row_softmax(raw, temperature);
  s.raw = std::move(raw);
  s.temperature = temperature;
  return s;
}

namespace {

void check_forward_input(const UniverseMetric& metric,
                         const Eigen::Ref<const Matrix>& features) {
  detail::require(features.rows() >= 1, "forward: graph must have nodes");
  detail::require(features.cols() == metric.feature_dim(),
                  "forward: feature dimension mismatch");
  detail::require(features.allFinite(), "forward: non-finite input features");
  detail::require((metric.bn_running_var.array() > 0.0).all(),
                  "forward: running variance must stay positive");
}

UniverseAffinity finish_forward(const UniverseMetric& metric,
                                const Matrix& hidden) {
  UniverseAffinity s;
  s.raw = hidden * metric.weight;
  s.prob = row_softmax(s.raw, metric.temperature);
  s.temperature = metric.temperature;
  op_counters().forwards++;
  return s;
}

}  // namespace

UniverseAffinity forward(const UniverseMetric& metric,
                         const Eigen::Ref<const Matrix>& features) {
  check_forward_input(metric, features);
  if (!metric.nonlinearity) return finish_forward(metric, features);

  const Vector scale =
      (metric.bn_running_var.array() + metric.bn_epsilon).rsqrt();
  Matrix standardized =
      (features.rowwise() - metric.bn_running_mean.transpose()).array().rowwise() *
      scale.transpose().array();
  Matrix pre = (standardized.array().rowwise() *
                metric.bn_gamma.transpose().array())
                   .rowwise() +
               metric.bn_beta.transpose().array();
  return finish_forward(metric, pre.cwiseMax(0.0));
}

UniverseAffinity forward_training(UniverseMetric& metric,
                                  const Eigen::Ref<const Matrix>& features,
                                  ForwardCache* cache) {
  check_forward_input(metric, features);
  if (!metric.nonlinearity) {
    if (cache) {
      cache->standardized.resize(0, 0);
      cache->pre_activation.resize(0, 0);
      cache->hidden = features;
    }
    return finish_forward(metric, features);
  }

  const double n = static_cast<double>(features.rows());
  const Vector mean = features.colwise().mean();
  Matrix centered = features.rowwise() - mean.transpose();
  const Vector var = centered.array().square().colwise().sum() / n;

  const double k = metric.bn_momentum;
  metric.bn_running_mean = k * metric.bn_running_mean + (1.0 - k) * mean;
  metric.bn_running_var = k * metric.bn_running_var + (1.0 - k) * var;

  const Vector scale = (var.array() + metric.bn_epsilon).rsqrt();
  Matrix standardized =
      centered.array().rowwise() * scale.transpose().array();
  Matrix pre = (standardized.array().rowwise() *
                metric.bn_gamma.transpose().array())
                   .rowwise() +
               metric.bn_beta.transpose().array();
  Matrix hidden = pre.cwiseMax(0.0);
  if (cache) {
    cache->standardized = standardized;
    cache->pre_activation = pre;
    cache->hidden = hidden;
  }
  return finish_forward(metric, hidden);
}

Matrix pairwise_affinity(const UniverseAffinity& sa, const UniverseAffinity& sb,
                         bool use_raw) {
  detail::require(sa.universe_size() == sb.universe_size(),
                  "pairwise_affinity: universe size mismatch");
  if (use_raw) return sa.raw * sb.raw.transpose();
  return sa.prob * sb.prob.transpose();
}

Matrix build_ku(const Eigen::Ref<const Matrix>& s_ab) {
  detail::require((s_ab.array() >= 0.0).all(),
                  "build_ku: affinities must be nonnegative");
  // Column-major vectorization matches vec(X) in the assignment objective;
  // the matrix is the rank-one outer product of vec(s_ab) with itself.
  const Eigen::Map<const Vector> v(s_ab.data(), s_ab.size());
  return v * v.transpose();
}

double qap_score(const Eigen::Ref<const Matrix>& k, const Matching& x) {
  const Eigen::Index nm = x.rows() * x.cols();
  detail::require(k.rows() == nm && k.cols() == nm,
                  "qap_score: affinity matrix shape mismatch");
  Vector v = Vector::Zero(nm);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (x.matched(i, j)) v(j * x.rows() + i) = 1.0;
  return v.dot(k * v);
}

}  // namespace upm
