#include "upm/datagen.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "upm/check.hpp"

namespace upm {

void validate(const GenConfig& c) {
  detail::require(c.class_count >= 1, "GenConfig.class_count must be >= 1");
  detail::require(
      c.anchors_per_class.size() == static_cast<std::size_t>(c.class_count),
      "GenConfig.anchors_per_class must have class_count entries");
  for (int n : c.anchors_per_class)
    detail::require(n >= 1, "GenConfig.anchors_per_class entries must be >= 1");
  detail::require(c.feature_dim >= 1, "GenConfig.feature_dim must be >= 1");
  detail::require(c.graphs_per_class >= 0,
                  "GenConfig.graphs_per_class must be >= 0");
  detail::require(c.inlier_drop_range[0] >= 0 &&
                      c.inlier_drop_range[0] <= c.inlier_drop_range[1],
                  "GenConfig.inlier_drop_range must be a nonnegative range");
  detail::require(c.outlier_count_range[0] >= 0 &&
                      c.outlier_count_range[0] <= c.outlier_count_range[1],
                  "GenConfig.outlier_count_range must be a nonnegative range");
  detail::require(c.feature_noise_sigma >= 0.0,
                  "GenConfig.feature_noise_sigma must be >= 0");
  const int min_anchors = *std::min_element(c.anchors_per_class.begin(),
                                            c.anchors_per_class.end());
  detail::require(c.inlier_drop_range[1] < min_anchors,
                  "GenConfig.inlier_drop_range upper bound must stay below "
                  "the smallest anchors_per_class");
}

namespace {

// Prototype matrix, one unit-norm column per anchor over all classes.
// Orthonormal via QR when the dimension allows, random unit vectors else.
Matrix draw_prototypes(int feature_dim, int total_anchors,
                       std::mt19937_64& rng, bool& fallback) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix raw(feature_dim, total_anchors);
  for (Eigen::Index j = 0; j < raw.cols(); ++j)
    for (Eigen::Index i = 0; i < raw.rows(); ++i) raw(i, j) = gauss(rng);
  fallback = total_anchors > feature_dim;
  if (!fallback) {
    Eigen::HouseholderQR<Matrix> qr(raw);
    Matrix q = qr.householderQ() * Matrix::Identity(feature_dim, total_anchors);
    return q;
  }
  for (Eigen::Index j = 0; j < raw.cols(); ++j) raw.col(j).normalize();
  return raw;
}

}  // namespace

InstanceSet generate(const GenConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int total_anchors = std::accumulate(config.anchors_per_class.begin(),
                                            config.anchors_per_class.end(), 0);
  InstanceSet set;
  set.class_count = config.class_count;
  set.anchors_per_class = config.anchors_per_class;
  set.feature_dim = config.feature_dim;
  set.seed = config.seed;

  Matrix prototypes = draw_prototypes(config.feature_dim, total_anchors, rng,
                                      set.random_prototype_fallback);
  const Vector box_lo = prototypes.rowwise().minCoeff();
  const Vector box_hi = prototypes.rowwise().maxCoeff();

  std::vector<int> class_offset(config.class_count, 0);
  for (int c = 1; c < config.class_count; ++c)
    class_offset[c] = class_offset[c - 1] + config.anchors_per_class[c - 1];

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 0; c < config.class_count; ++c) {
    const int n_c = config.anchors_per_class[c];
    for (int g = 0; g < config.graphs_per_class; ++g) {
      std::uniform_int_distribution<int> drop_dist(config.inlier_drop_range[0],
                                                   config.inlier_drop_range[1]);
      std::uniform_int_distribution<int> outlier_dist(
          config.outlier_count_range[0], config.outlier_count_range[1]);
      const int dropped = drop_dist(rng);
      const int outliers = outlier_dist(rng);

      std::vector<int> anchors(n_c);
      std::iota(anchors.begin(), anchors.end(), 0);
      std::shuffle(anchors.begin(), anchors.end(), rng);
      anchors.resize(static_cast<std::size_t>(n_c - dropped));

      const int n = static_cast<int>(anchors.size()) + outliers;
      GraphInstance graph;
      graph.id = "c" + std::to_string(c) + "_g" + std::to_string(g);
      graph.class_id = c;
      graph.features.resize(n, config.feature_dim);
      std::vector<int> gt(static_cast<std::size_t>(n), -1);

      int row = 0;
      for (int a : anchors) {
        graph.features.row(row) =
            prototypes.col(class_offset[c] + a).transpose();
        if (config.feature_noise_sigma > 0.0)
          for (Eigen::Index d = 0; d < graph.features.cols(); ++d)
            graph.features(row, d) += config.feature_noise_sigma * gauss(rng);
        gt[static_cast<std::size_t>(row)] = a;
        ++row;
      }
      for (int o = 0; o < outliers; ++o, ++row)
        for (Eigen::Index d = 0; d < graph.features.cols(); ++d)
          graph.features(row, d) =
              box_lo(d) + (box_hi(d) - box_lo(d)) * unit(rng);

      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      Matrix shuffled(n, config.feature_dim);
      std::vector<int> shuffled_gt(static_cast<std::size_t>(n));
      for (int r = 0; r < n; ++r) {
        shuffled.row(r) = graph.features.row(order[static_cast<std::size_t>(r)]);
        shuffled_gt[static_cast<std::size_t>(r)] =
            gt[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
      }
      graph.features = std::move(shuffled);
      graph.gt_universe = std::move(shuffled_gt);
      set.graphs.push_back(std::move(graph));
    }
  }
  return set;
}

Matching derive_pairwise_gt(const GraphInstance& a, const GraphInstance& b) {
  detail::require(a.gt_universe.has_value() && b.gt_universe.has_value(),
                  "derive_pairwise_gt: missing ground truth");
  if (a.class_id != b.class_id) return Matching(a.size(), b.size());
  std::vector<std::pair<int, int>> pairs;
  const auto& ga = *a.gt_universe;
  const auto& gb = *b.gt_universe;
  for (std::size_t i = 0; i < ga.size(); ++i) {
    if (ga[i] < 0) continue;
    for (std::size_t j = 0; j < gb.size(); ++j)
      if (gb[j] == ga[i])
        pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
  }
  return Matching::from_pairs(a.size(), b.size(), pairs);
}

}  // namespace upm
