#include "upm/loss.hpp"

#include <cmath>
#include <string>

#include "upm/check.hpp"

namespace upm {

namespace {

void check_pair_indices(const UniverseAffinity& sa, const UniverseAffinity& sb,
                        int i, int j) {
  detail::require(sa.universe_size() == sb.universe_size(),
                  "universe size mismatch between affinities");
  detail::require(i >= 0 && i < sa.size(), "node index i out of range");
  detail::require(j >= 0 && j < sb.size(), "node index j out of range");
}

/// Backward through the row softmax p = softmax(raw / tau):
/// d loss / d raw = (p .* (up - rowsum(up .* p))) / tau.
Matrix softmax_backward(const Matrix& prob, const Matrix& upstream,
                        double tau) {
  Vector inner = (upstream.array() * prob.array()).rowwise().sum();
  return (prob.array() * (upstream.array().colwise() - inner.array())) / tau;
}

}  // namespace

double match_prob(const UniverseAffinity& sa, const UniverseAffinity& sb,
                  int i, int j) {
  check_pair_indices(sa, sb, i, j);
  return sa.prob.row(i).dot(sb.prob.row(j));
}

double partial_match_prob(const UniverseAffinity& sa,
                          const UniverseAffinity& sb, int i, int j) {
  check_pair_indices(sa, sb, i, j);
  detail::require(sa.universe_size() >= 2, "universe size must be >= 2");
  const Eigen::Index k = sa.universe_size() - 1;
  return sa.prob.row(i).head(k).dot(sb.prob.row(j).head(k));
}

BceResult bce_loss(const std::vector<PairBatchItem>& items,
                   const BceOptions& opts) {
  detail::require(opts.clamp > 0.0 && opts.clamp < 0.5,
                  "clamp must lie in (0, 0.5)");
  const double eps = opts.clamp;
  BceResult out;
  out.grad_a.reserve(items.size());
  out.grad_b.reserve(items.size());

  for (std::size_t it = 0; it < items.size(); ++it) {
    const PairBatchItem& item = items[it];
    const Eigen::Index nu = item.sa.universe_size();
    detail::require(nu == item.sb.universe_size(),
                    "universe size mismatch in batch item");
    detail::require(!opts.outlier_aware || nu >= 2,
                    "outlier-aware loss needs an absorbing column");
    detail::require(item.gt.rows() == item.sa.size() &&
                        item.gt.cols() == item.sb.size(),
                    "ground-truth shape mismatch in batch item");
    const Eigen::Index cols = opts.outlier_aware ? nu - 1 : nu;

    const auto pa = item.sa.prob.leftCols(cols);
    const auto pb = item.sb.prob.leftCols(cols);
    Matrix pm = pa * pb.transpose();  // n_a x n_b matching probabilities

    Matrix g(pm.rows(), pm.cols());  // d loss / d pm, clamp-aware
    for (Eigen::Index i = 0; i < pm.rows(); ++i) {
      for (Eigen::Index j = 0; j < pm.cols(); ++j) {
        const double p = pm(i, j);
        const double q = std::min(std::max(p, eps), 1.0 - eps);
        const int x = item.gt.matched(i, j) ? 1 : 0;
        const double term = x ? -std::log(q) : -std::log1p(-q);
        if (!std::isfinite(term))
          throw std::runtime_error("bce_loss: non-finite term at item " +
                                   std::to_string(it) + ", pair (" +
                                   std::to_string(i) + "," +
                                   std::to_string(j) + ")");
        out.loss += item.weight * term;
        const bool interior = p > eps && p < 1.0 - eps;
        g(i, j) = interior
                      ? item.weight * (x ? -1.0 / p : 1.0 / (1.0 - p))
                      : 0.0;
      }
    }

    Matrix up_a = Matrix::Zero(item.sa.size(), nu);
    Matrix up_b = Matrix::Zero(item.sb.size(), nu);
    up_a.leftCols(cols) = g * pb;
    up_b.leftCols(cols) = g.transpose() * pa;
    out.grad_a.push_back(
        softmax_backward(item.sa.prob, up_a, item.sa.temperature));
    out.grad_b.push_back(
        softmax_backward(item.sb.prob, up_b, item.sb.temperature));
  }
  return out;
}

double vanilla_grad_entry(const UniverseAffinity& sa,
                          const UniverseAffinity& sb, int i, int j, int t,
                          int x_ij) {
  check_pair_indices(sa, sb, i, j);
  detail::require(t >= 0 && t < sa.universe_size(),
                  "anchor index t out of range");
  const double p = match_prob(sa, sb, i, j);
  const double pat = sa.prob(i, t);
  const double pbt = sb.prob(j, t);
  // x=1: (p_it / p) * sum_k p_ik (p_jk - p_jt); the x=0 case flips the sign
  // and swaps the denominator for 1 - p, the derivative of -log(1 - p).
  const double core = pat * (p - pbt);
  const double grad = x_ij ? core / p : -core / (1.0 - p);
  return grad / sa.temperature;
}

double outlier_grad_absorbing(const UniverseAffinity& sa,
                              const UniverseAffinity& sb, int i, int j,
                              int x_ij, double clamp) {
  check_pair_indices(sa, sb, i, j);
  detail::require(sa.universe_size() >= 2, "universe size must be >= 2");
  const Eigen::Index n = sa.universe_size() - 1;
  const double pan = sa.prob(i, n);
  if (x_ij) return pan / sa.temperature;
  const double pp = partial_match_prob(sa, sb, i, j);
  return -pan * pp / std::max(1.0 - pp, clamp) / sa.temperature;
}

}  // namespace upm
