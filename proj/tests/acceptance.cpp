// Acceptance suite: one self-contained check per criterion, each printing a
// single PASS/FAIL line. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "upm/counters.hpp"
#include "upm/datagen.hpp"
#include "upm/io.hpp"
#include "upm/loss.hpp"
#include "upm/metrics.hpp"
#include "upm/multigraph.hpp"
#include "upm/solver.hpp"
#include "upm/train.hpp"
#include "test_util.hpp"

using namespace upm;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what,
            const std::string& detail) {
  std::printf("%s  criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", id,
              what.c_str(), detail.c_str());
  if (!pass) failures++;
}

double elapsed(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

// 1. Analytic loss gradients against central finite differences.
void criterion_gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  double max_rel = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    std::uniform_int_distribution<int> size(2, 6), universe(2, 10);
    PairBatchItem item;
    item.sa = test_util::random_affinity(rng, size(rng), universe(rng));
    item.sb = test_util::random_affinity(rng, item.sa.size() == 0 ? 2 : size(rng),
                                         item.sa.universe_size());
    item.gt = test_util::random_matching(rng, item.sa.size(), item.sb.size());
    for (const bool outlier_aware : {false, true}) {
      const BceOptions opts{outlier_aware, 1e-7};
      const BceResult res = bce_loss({item}, opts);
      for (int side = 0; side < 2; ++side) {
        const Matrix& grad = side == 0 ? res.grad_a[0] : res.grad_b[0];
        for (Eigen::Index i = 0; i < grad.rows(); ++i)
          for (Eigen::Index t = 0; t < grad.cols(); ++t) {
            const double fd =
                test_util::fd_loss_grad(item, opts, side == 0, i, t, 1e-5);
            max_rel = std::max(max_rel, std::abs(grad(i, t) - fd) /
                                            std::max(1.0, std::abs(fd)));
          }
      }
    }
  }
  const double secs = elapsed(t0);
  report(1, max_rel < 1e-5 && secs < 10.0,
         "gradient fidelity vs finite differences",
         fmt("max rel err %.3g, %.2f s", max_rel, secs));
}

// 2. Anchor-sum of the single-term vanilla gradient vanishes.
void criterion_zero_sum() {
  std::mt19937_64 rng(20240602);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::uniform_int_distribution<int> size(1, 6), universe(2, 10), coin(0, 1);
    const UniverseAffinity sa = test_util::random_affinity(rng, size(rng),
                                                           universe(rng));
    const UniverseAffinity sb =
        test_util::random_affinity(rng, size(rng), sa.universe_size());
    std::uniform_int_distribution<int> pick_a(0, int(sa.size()) - 1);
    std::uniform_int_distribution<int> pick_b(0, int(sb.size()) - 1);
    const int i = pick_a(rng), j = pick_b(rng), x = coin(rng);
    double sum = 0.0;
    for (int t = 0; t < sa.universe_size(); ++t)
      sum += vanilla_grad_entry(sa, sb, i, j, t, x);
    worst = std::max(worst, std::abs(sum));
  }
  report(2, worst < 1e-10, "zero-sum vanilla gradient over anchors",
         fmt("max |sum| %.3g over 1000 terms", worst));
}

// 3. Unmatched pairs never push affinity away from the absorbing node.
void criterion_absorbing_sign() {
  std::mt19937_64 rng(20240603);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::uniform_int_distribution<int> size(1, 6), universe(2, 10);
    const UniverseAffinity sa = test_util::random_affinity(rng, size(rng),
                                                           universe(rng));
    const UniverseAffinity sb =
        test_util::random_affinity(rng, size(rng), sa.universe_size());
    std::uniform_int_distribution<int> pick_a(0, int(sa.size()) - 1);
    std::uniform_int_distribution<int> pick_b(0, int(sb.size()) - 1);
    if (outlier_grad_absorbing(sa, sb, pick_a(rng), pick_b(rng), 0) > 0.0)
      violations++;
  }
  report(3, violations == 0, "absorbing-column gradient sign with x=0",
         fmt("%g violations in 1000 terms", double(violations)));
}

// 4. Assignment solver against exhaustive search.
void criterion_hungarian_optimality() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240604);
  int mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::uniform_int_distribution<int> small(1, 6), wide(1, 8), coin(0, 1);
    int n = small(rng), m = wide(rng);
    if (coin(rng)) std::swap(n, m);
    if (std::min(n, m) > 6) n = 6;
    const Matrix score = test_util::random_matrix(rng, n, m, -2.0, 2.0);
    const bool maximize = coin(rng) == 1;
    const Matching result = hungarian(score, maximize);
    double total = 0.0;
    for (int i = 0; i < n; ++i)
      if (result.row_match(i) >= 0) total += score(i, result.row_match(i));
    const double best = test_util::brute_force_best_total(score, maximize);
    if (std::abs(total - best) > 1e-9) mismatches++;
  }
  const double secs = elapsed(t0);
  report(4, mismatches == 0 && secs < 5.0,
         "assignment optimality vs exhaustive search",
         fmt("%g mismatches in 500 instances, %.2f s", double(mismatches),
             secs));
}

// 5. Quadratic scoring on the pairwise-affinity matrix picks the same
//    permutations as the linear score.
void criterion_qap_equals_lap() {
  std::mt19937_64 rng(20240605);
  int disagreements = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = trial < 100 ? 3 : 4;
    const Matrix s = test_util::random_matrix(rng, n, n, 0.0, 1.0);
    const Matrix ku = build_ku(s);
    double best_quad = -1.0, best_lin = -1e300;
    std::vector<std::vector<int>> arg_quad, arg_lin;
    for (const auto& perm : test_util::all_permutations(n)) {
      std::vector<std::pair<int, int>> pairs;
      double linear = 0.0;
      for (int i = 0; i < n; ++i) {
        pairs.emplace_back(i, perm[static_cast<std::size_t>(i)]);
        linear += s(i, perm[static_cast<std::size_t>(i)]);
      }
      const double quad = qap_score(ku, Matching::from_pairs(n, n, pairs));
      if (quad > best_quad + 1e-12) {
        best_quad = quad;
        arg_quad.clear();
      }
      if (quad >= best_quad - 1e-12) arg_quad.push_back(perm);
      if (linear > best_lin + 1e-12) {
        best_lin = linear;
        arg_lin.clear();
      }
      if (linear >= best_lin - 1e-12) arg_lin.push_back(perm);
    }
    if (arg_quad != arg_lin) disagreements++;
  }
  report(5, disagreements == 0, "quadratic scoring reduces to linear",
         fmt("%g argmax-set disagreements in 200", double(disagreements)));
}

InstanceSet session_dataset(std::uint64_t seed) {
  GenConfig c;
  c.class_count = 1;
  c.anchors_per_class = {8};
  c.feature_dim = 12;
  c.graphs_per_class = 15;
  c.inlier_drop_range = {0, 2};
  c.outlier_count_range = {0, 2};
  c.feature_noise_sigma = 0.05;
  c.seed = seed;
  return generate(c);
}

// 6. Cycle consistency over all triples of online sessions.
void criterion_cycle_consistency() {
  long violations = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const InstanceSet set = session_dataset(seed);
    const UniverseMetric metric =
        UniverseMetric::init(set.feature_dim, 9, seed, /*nonlinearity=*/false);
    MatchSession session(metric);
    for (const GraphInstance& g : set.graphs) session.add(g);
    const int n = static_cast<int>(session.size());
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) {
          if (i == k || k == j || i == j) continue;
          const IndexMatrix composed = session.pairwise(i, k).matrix() *
                                       session.pairwise(k, j).matrix();
          const IndexMatrix direct = session.pairwise(i, j).matrix();
          for (Eigen::Index r = 0; r < composed.rows(); ++r)
            for (Eigen::Index c = 0; c < composed.cols(); ++c)
              if (composed(r, c) > direct(r, c)) violations++;
        }
  }
  report(6, violations == 0,
         "cycle consistency over 15-graph sessions, 50 seeds",
         fmt("%g elementwise violations", double(violations)));
}

// 7. Online sessions are batch-equivalent at constant per-graph cost.
void criterion_online_equivalence() {
  bool equivalent = true;
  long count_violations = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const InstanceSet set = session_dataset(seed + 100);
    const UniverseMetric metric =
        UniverseMetric::init(set.feature_dim, 9, seed, /*nonlinearity=*/false);
    MatchSession session(metric);
    for (const GraphInstance& g : set.graphs) {
      const OpCounters before = op_counters();
      session.add(g);
      const OpCounters after = op_counters();
      if (after.forwards - before.forwards != 1 ||
          after.hungarian_calls - before.hungarian_calls != 1)
        count_violations++;
    }
    for (std::size_t i = 0; i < set.graphs.size(); ++i) {
      const UniverseAssignment batch =
          infer_universe(forward(metric, set.graphs[i].features),
                         set.graphs[i].id);
      const UniverseAssignment& online =
          session.assignment(static_cast<int>(i));
      if (batch.anchor != online.anchor || batch.score != online.score)
        equivalent = false;
    }
  }
  report(7, equivalent && count_violations == 0,
         "online/batch equivalence at one forward + one solve per graph",
         fmt("%g count violations, identical=%g", double(count_violations),
             double(equivalent)));
}

// 8. End-to-end learning on planted data.
void criterion_learning() {
  const auto t0 = std::chrono::steady_clock::now();
  GenConfig gen;
  gen.class_count = 5;
  gen.anchors_per_class.assign(5, 10);
  gen.feature_dim = 64;
  gen.graphs_per_class = 20;
  gen.inlier_drop_range = {0, 2};
  gen.outlier_count_range = {2, 2};
  gen.feature_noise_sigma = 0.05;
  gen.seed = 808;
  const InstanceSet set = generate(gen);

  TrainConfig config;
  config.epochs = 30;
  config.pairs_per_epoch = 300;
  config.batch_size = 8;
  config.learning_rate = 0.02;
  config.momentum = 0.9;
  config.outlier_aware = true;
  config.sampling = SamplingMode::SameClass;
  config.universe = set.universe_spec(UniverseMode::FeatureMerged);
  config.seed = 909;
  const UniverseMetric initial =
      UniverseMetric::init(set.feature_dim, config.universe.n_u, 707);
  const TrainResult r = train(initial, set, config);

  const EpochStats& last = r.history.back();
  const double secs = elapsed(t0);
  report(8,
         last.holdout_f1 >= 0.95 && last.outlier_absorption >= 0.90 &&
             secs < 120.0,
         "learning on planted data (feature-merged, 5x10 anchors)",
         fmt("held-out F1 %.3f, absorption %.3f, %.1f s", last.holdout_f1,
             last.outlier_absorption, secs));
}

// 9. Outlier-aware beats vanilla at absorbing planted outliers.
void criterion_outlier_direction() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GenConfig gen;
    gen.class_count = 2;
    gen.anchors_per_class = {6, 6};
    gen.feature_dim = 24;
    gen.graphs_per_class = 12;
    gen.inlier_drop_range = {0, 1};
    gen.outlier_count_range = {2, 2};
    gen.feature_noise_sigma = 0.05;
    gen.seed = 4000 + seed;
    const InstanceSet set = generate(gen);

    TrainConfig config;
    config.epochs = 12;
    config.pairs_per_epoch = 150;
    config.batch_size = 8;
    config.learning_rate = 0.02;
    config.universe = set.universe_spec(UniverseMode::FeatureMerged);
    config.seed = 5000 + seed;
    TrainConfig vanilla = config;
    vanilla.outlier_aware = false;

    const UniverseMetric initial = UniverseMetric::init(
        set.feature_dim, config.universe.n_u, 6000 + seed);
    const double aware =
        train(initial, set, config).history.back().outlier_absorption;
    const double plain =
        train(initial, set, vanilla).history.back().outlier_absorption;
    if (!(aware >= plain)) ok = false;
    detail += fmt("%.2f/%.2f ", aware, plain);
  }
  report(9, ok, "outlier-aware absorption >= vanilla over 5 seeds", detail);
}

// 10. Disjoint anchor slots separate a mixture; shared slots do not do
//     better.
void criterion_universe_structure() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GenConfig gen;
    gen.class_count = 3;
    gen.anchors_per_class = {8, 8, 8};
    gen.feature_dim = 32;
    gen.graphs_per_class = 12;
    gen.inlier_drop_range = {0, 1};
    gen.outlier_count_range = {0, 0};
    gen.feature_noise_sigma = 0.05;
    gen.seed = 7000 + seed;
    const InstanceSet set = generate(gen);

    auto run = [&](UniverseMode mode) {
      TrainConfig config;
      config.epochs = 15;
      config.pairs_per_epoch = 200;
      config.batch_size = 8;
      config.learning_rate = 0.02;
      config.outlier_aware = true;
      config.sampling = SamplingMode::HalfMixed;
      config.universe = set.universe_spec(mode);
      config.seed = 8000 + seed;
      const UniverseMetric initial = UniverseMetric::init(
          set.feature_dim, config.universe.n_u, 9000 + seed);
      const UniverseMetric trained = train(initial, set, config).metric;

      // Mixture evaluation: 8 graphs per class, spectral clustering, purity.
      std::mt19937_64 rng(1000 + seed);
      std::vector<GraphInstance> graphs;
      std::vector<int> labels;
      for (int c = 0; c < 3; ++c) {
        std::vector<int> pool;
        for (std::size_t g = 0; g < set.graphs.size(); ++g)
          if (set.graphs[g].class_id == c) pool.push_back(static_cast<int>(g));
        std::shuffle(pool.begin(), pool.end(), rng);
        for (int t = 0; t < 8; ++t) {
          graphs.push_back(set.graphs[static_cast<std::size_t>(pool[t])]);
          labels.push_back(c);
        }
      }
      const MixtureResult mix = mixture_pipeline(graphs, trained, 3, seed);
      const int m = static_cast<int>(graphs.size());
      return clustering_metrics(mix.clusters.labels, 3, labels,
                                Matrix::Zero(m, m), Matrix::Zero(m, m))
          .cp;
    };

    const double cp_node = run(UniverseMode::NodeMerged);
    const double cp_feature = run(UniverseMode::FeatureMerged);
    if (!(cp_node == 1.0 && cp_node >= cp_feature)) ok = false;
    detail += fmt("%.2f/%.2f ", cp_node, cp_feature);
  }
  report(10, ok, "node-merged purity 1.0 and >= feature-merged, 5 seeds",
         detail);
}

// 11. Metric fixtures, hand-computed.
void criterion_metric_fixtures() {
  bool ok = true;
  auto expect = [&](bool cond) { ok = ok && cond; };
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12; };

  const Matching gt3 = Matching::from_pairs(3, 3, {{0, 0}, {1, 1}});
  expect(close(f1(gt3, gt3).f1, 1.0));
  expect(close(f1(Matching::from_pairs(3, 3, {{0, 1}, {1, 2}}), gt3).f1, 0.0));
  expect(close(f1(Matching::from_pairs(3, 3, {{0, 0}, {1, 2}}), gt3).f1, 0.5));
  expect(close(f1(Matching(2, 2), Matching(2, 2)).f1, 1.0));
  expect(close(f1(Matching(3, 3), gt3).f1, 0.0));

  const Matching acc_gt = Matching::from_pairs(4, 4, {{0, 0}, {2, 2}, {3, 3}});
  const Matching acc_pred = Matching::from_pairs(4, 4, {{0, 0}, {1, 1}});
  expect(close(accuracy(acc_pred, acc_gt), -0.5));
  expect(close(accuracy(acc_gt, acc_gt), 1.0));
  expect(close(accuracy(Matching::from_pairs(2, 2, {{0, 0}}), Matching(2, 2)),
               0.0));

  using T = NodeType;
  const std::vector<T> ta{T::MatchedInlier, T::UnmatchedInlier, T::Outlier};
  const std::vector<T> tb{T::MatchedInlier, T::UnmatchedInlier, T::Outlier};
  const Matching mt_gt = Matching::from_pairs(3, 3, {{0, 0}});
  expect(match_types(Matching::from_pairs(3, 3, {{0, 1}}), ta, tb, mt_gt)
             .ill_matching == 1);
  expect(match_types(Matching::from_pairs(3, 3, {{1, 2}}), ta, tb, mt_gt)
             .over_matching == 1);
  expect(match_types(Matching::from_pairs(3, 3, {{0, 0}}), ta, tb, mt_gt)
             .correct == 1);

  const std::vector<int> gt_labels{0, 0, 0, 0, 1, 1, 1, 1};
  Matrix ones = Matrix::Constant(8, 8, 1.0);
  ones.diagonal().setZero();
  const ClusteringScores perfect =
      clustering_metrics(gt_labels, 2, gt_labels, ones, ones);
  expect(close(perfect.cp, 1.0) && close(perfect.ri, 1.0) &&
         close(perfect.ca, 1.0) && close(perfect.f1c, 1.0));

  const ClusteringScores lumped =
      clustering_metrics(std::vector<int>(8, 0), 1, gt_labels, ones, ones);
  expect(close(lumped.cp, 0.5) && close(lumped.ri, 12.0 / 28.0) &&
         close(lumped.ca, 0.5) && close(lumped.f1c, 1.0));

  const ClusteringScores singletons = clustering_metrics(
      {0, 1, 2, 3, 4, 5, 6, 7}, 8, gt_labels, ones, ones);
  expect(close(singletons.cp, 1.0) && close(singletons.ri, 16.0 / 28.0) &&
         close(singletons.ca, -2.0));

  report(11, ok, "metric oracles on the fixture set",
         ok ? "all fixtures exact" : "fixture mismatch");
}

}  // namespace

int main() {
  criterion_gradient_fidelity();
  criterion_zero_sum();
  criterion_absorbing_sign();
  criterion_hungarian_optimality();
  criterion_qap_equals_lap();
  criterion_cycle_consistency();
  criterion_online_equivalence();
  criterion_learning();
  criterion_outlier_direction();
  criterion_universe_structure();
  criterion_metric_fixtures();
  std::printf("%d of 11 criteria failed\n", failures);
  return failures;
}
