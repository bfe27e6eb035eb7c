#include "upm/multigraph.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "upm/check.hpp"

namespace upm {

const UniverseAssignment& MatchSession::add(const GraphInstance& graph) {
  UniverseAffinity s = forward(*metric_, graph.features);
  stored_.push_back(infer_universe(s, graph.id));
  return stored_.back();
}

Matching MatchSession::pairwise(int i, int j) const {
  return reconstruct_pairwise(assignment(i), assignment(j));
}

const UniverseAssignment& MatchSession::assignment(int i) const {
  detail::require(i >= 0 && static_cast<std::size_t>(i) < stored_.size(),
                  "MatchSession: unknown graph index");
  return stored_[static_cast<std::size_t>(i)];
}

double affinity_score(const Matching& xab, const UniverseAffinity& sa,
                      const UniverseAffinity& sb) {
  detail::require(xab.rows() == sa.size() && xab.cols() == sb.size(),
                  "affinity_score: shape mismatch");
  detail::require(sa.universe_size() == sb.universe_size(),
                  "affinity_score: universe size mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < xab.rows(); ++i)
    for (Eigen::Index j = 0; j < xab.cols(); ++j)
      if (xab.matched(i, j)) total += sa.prob.row(i).dot(sb.prob.row(j));
  return total;
}

namespace {

struct KMeansRun {
  std::vector<int> labels;
  double inertia = std::numeric_limits<double>::infinity();
};

KMeansRun kmeans_once(const Matrix& points, int k, std::mt19937_64& rng) {
  const Eigen::Index m = points.rows();
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  Matrix centers(k, points.cols());
  for (int c = 0; c < k; ++c) centers.row(c) = points.row(order[c]);

  std::vector<int> labels(static_cast<std::size_t>(m), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < m; ++i) {
      int best = 0;
      double best_d = (points.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    // Re-seat empty clusters with the point farthest from its center.
    for (int c = 0; c < k; ++c) {
      if (std::count(labels.begin(), labels.end(), c) > 0) continue;
      Eigen::Index worst = 0;
      double worst_d = -1.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        if (std::count(labels.begin(), labels.end(), l) <= 1) continue;
        const double d = (points.row(i) - centers.row(l)).squaredNorm();
        if (d > worst_d) {
          worst_d = d;
          worst = i;
        }
      }
      labels[static_cast<std::size_t>(worst)] = c;
      changed = true;
    }
    for (int c = 0; c < k; ++c) {
      Vector sum = Vector::Zero(points.cols());
      long count = 0;
      for (Eigen::Index i = 0; i < m; ++i)
        if (labels[static_cast<std::size_t>(i)] == c) {
          sum += points.row(i).transpose();
          count++;
        }
      if (count > 0) centers.row(c) = (sum / double(count)).transpose();
    }
    if (!changed) break;
  }

  KMeansRun run;
  run.labels = labels;
  run.inertia = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    run.inertia +=
        (points.row(i) - centers.row(labels[static_cast<std::size_t>(i)]))
            .squaredNorm();
  return run;
}

std::vector<int> relabel_by_first_appearance(const std::vector<int>& labels,
                                             int k) {
  std::vector<int> remap(static_cast<std::size_t>(k), -1);
  int next = 0;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int& slot = remap[static_cast<std::size_t>(labels[i])];
    if (slot < 0) slot = next++;
    out[i] = slot;
  }
  return out;
}

}  // namespace

ClusterResult spectral_cluster(const Eigen::Ref<const Matrix>& scores, int k,
                               std::uint64_t seed) {
  const Eigen::Index m = scores.rows();
  detail::require(scores.cols() == m, "spectral_cluster: matrix must be square");
  detail::require(k >= 1 && k <= m, "spectral_cluster: k out of range");
  detail::require((scores.array() >= -1e-12).all(),
                  "spectral_cluster: scores must be nonnegative");
  detail::require(scores.isApprox(scores.transpose(), 1e-9),
                  "spectral_cluster: scores must be symmetric");

  // Symmetric normalized affinity D^-1/2 W D^-1/2; zero-degree rows stay zero.
  const Vector degree = scores.rowwise().sum();
  Vector dinv = Vector::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i)
    if (degree(i) > 0.0) dinv(i) = 1.0 / std::sqrt(degree(i));
  Matrix sym = dinv.asDiagonal() * scores * dinv.asDiagonal();
  sym = 0.5 * (sym + sym.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  detail::require_runtime(eig.info() == Eigen::Success,
                          "spectral_cluster: eigensolver failed");
  Matrix embedding = eig.eigenvectors().rightCols(k);  // largest eigenvalues
  for (Eigen::Index i = 0; i < m; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 1e-300) embedding.row(i) /= norm;
  }

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  KMeansRun best;
  for (int restart = 0; restart < 50; ++restart) {
    KMeansRun run = kmeans_once(embedding, k, rng);
    if (run.inertia < best.inertia) best = run;
  }

  ClusterResult result;
  result.k = k;
  result.labels = relabel_by_first_appearance(best.labels, k);
  result.pairwise_scores = scores;
  return result;
}

MixtureResult mixture_pipeline(const std::vector<GraphInstance>& graphs,
                               const UniverseMetric& metric, int k,
                               std::uint64_t cluster_seed) {
  const int m = static_cast<int>(graphs.size());
  detail::require(m >= 1 && k >= 1 && k <= m,
                  "mixture_pipeline: need at least k graphs");

  MixtureResult out;
  out.affinities.reserve(graphs.size());
  out.assignments.reserve(graphs.size());
  for (const GraphInstance& g : graphs) {
    out.affinities.push_back(forward(metric, g.features));
    out.assignments.push_back(infer_universe(out.affinities.back(), g.id));
  }

  Matrix scores = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    scores(i, i) = affinity_score(
        reconstruct_pairwise(out.assignments[i], out.assignments[i]),
        out.affinities[i], out.affinities[i]);
    for (int j = i + 1; j < m; ++j) {
      const Matching xij =
          reconstruct_pairwise(out.assignments[i], out.assignments[j]);
      const double sij = affinity_score(xij, out.affinities[i], out.affinities[j]);
      const double sji = affinity_score(xij.transposed(), out.affinities[j],
                                        out.affinities[i]);
      detail::require_runtime(std::abs(sij - sji) <= 1e-9 * (1.0 + std::abs(sij)),
                              "mixture_pipeline: asymmetric affinity score");
      scores(i, j) = scores(j, i) = sij;
    }
  }

  out.clusters = spectral_cluster(scores, k, cluster_seed);

  out.cluster_matchings.assign(static_cast<std::size_t>(k), {});
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const int c = out.clusters.labels[static_cast<std::size_t>(i)];
      if (c != out.clusters.labels[static_cast<std::size_t>(j)]) continue;
      out.cluster_matchings[static_cast<std::size_t>(c)].push_back(
          {i, j,
           reconstruct_pairwise(out.assignments[i], out.assignments[j])});
    }
  return out;
}

}  // namespace upm
