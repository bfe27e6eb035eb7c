#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "upm/datagen.hpp"
#include "upm/io.hpp"
#include "upm/solver.hpp"
#include "upm/metrics.hpp"
#include "test_util.hpp"

using namespace upm;

namespace {

GenConfig small_config() {
  GenConfig c;
  c.class_count = 2;
  c.anchors_per_class = {5, 4};
  c.feature_dim = 12;
  c.graphs_per_class = 4;
  c.inlier_drop_range = {0, 2};
  c.outlier_count_range = {0, 2};
  c.feature_noise_sigma = 0.05;
  c.seed = 42;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  GenConfig c = small_config();
  c.inlier_drop_range = {0, 4};  // hi must stay below min anchors (4)
  CHECK_THROWS_WITH_AS(generate(c), doctest::Contains("inlier_drop_range"),
                       std::invalid_argument);
  c = small_config();
  c.feature_noise_sigma = -1.0;
  CHECK_THROWS_AS(generate(c), std::invalid_argument);
  c = small_config();
  c.anchors_per_class = {5};
  CHECK_THROWS_AS(generate(c), std::invalid_argument);
}

TEST_CASE("noiseless planted data gives a clean bijection") {
  GenConfig c;
  c.class_count = 1;
  c.anchors_per_class = {6};
  c.feature_dim = 8;
  c.graphs_per_class = 2;
  c.seed = 7;
  const InstanceSet set = generate(c);
  REQUIRE(set.graphs.size() == 2);
  CHECK_FALSE(set.random_prototype_fallback);

  const Matching gt = derive_pairwise_gt(set.graphs[0], set.graphs[1]);
  CHECK(gt.match_count() == 6);  // full bijection

  // Training-free nearest-prototype matching: reuse the noiseless features of
  // graph 0 as anchor directions, absorbing column all zero.
  Matrix weight = Matrix::Zero(8, 7);
  for (int v = 0; v < 6; ++v)
    weight.col((*set.graphs[0].gt_universe)[static_cast<std::size_t>(v)]) =
        set.graphs[0].features.row(v).transpose();
  UniverseMetric metric;
  metric.weight = weight;
  metric.bn_gamma = Vector::Ones(8);
  metric.bn_beta = Vector::Zero(8);
  metric.bn_running_mean = Vector::Zero(8);
  metric.bn_running_var = Vector::Ones(8);
  metric.nonlinearity = false;

  const UniverseAssignment xa =
      infer_universe(forward(metric, set.graphs[0].features));
  const UniverseAssignment xb =
      infer_universe(forward(metric, set.graphs[1].features));
  CHECK(f1(reconstruct_pairwise(xa, xb), gt).f1 == doctest::Approx(1.0));
}

TEST_CASE("near-total drops leave at most one shared anchor per pair") {
  GenConfig c;
  c.class_count = 1;
  c.anchors_per_class = {10};
  c.feature_dim = 16;
  c.graphs_per_class = 6;
  c.inlier_drop_range = {9, 9};
  c.outlier_count_range = {1, 1};
  c.seed = 13;
  const InstanceSet set = generate(c);
  for (const GraphInstance& g : set.graphs) CHECK(g.size() == 2);
  for (std::size_t a = 0; a < set.graphs.size(); ++a)
    for (std::size_t b = a + 1; b < set.graphs.size(); ++b)
      CHECK(derive_pairwise_gt(set.graphs[a], set.graphs[b]).match_count() <= 1);
}

TEST_CASE("equal seeds give byte-identical serialized sets") {
  const GenConfig c = small_config();
  const auto dir1 = std::filesystem::temp_directory_path() / "upm_dg_a";
  const auto dir2 = std::filesystem::temp_directory_path() / "upm_dg_b";
  save_instance_set(dir1, generate(c));
  save_instance_set(dir2, generate(c));
  CHECK(slurp(dir1 / "manifest.json") == slurp(dir2 / "manifest.json"));
  CHECK(slurp(dir1 / "graphs.jsonl") == slurp(dir2 / "graphs.jsonl"));

  GenConfig other = c;
  other.seed = 43;
  const auto dir3 = std::filesystem::temp_directory_path() / "upm_dg_c";
  save_instance_set(dir3, generate(other));
  CHECK(slurp(dir1 / "graphs.jsonl") != slurp(dir3 / "graphs.jsonl"));
}

TEST_CASE("derive_pairwise_gt fixtures and oracle") {
  GraphInstance a, b;
  a.class_id = b.class_id = 0;
  a.features = Matrix::Zero(3, 2);
  b.features = Matrix::Zero(3, 2);
  a.gt_universe = std::vector<int>{2, 0, 1};
  b.gt_universe = std::vector<int>{1, 2, 0};
  const Matching gt = derive_pairwise_gt(a, b);
  CHECK(gt.match_count() == 3);  // identical anchor sets: full permutation
  CHECK(gt.matched(0, 1));
  CHECK(gt.matched(1, 2));
  CHECK(gt.matched(2, 0));

  GraphInstance c = b;
  c.class_id = 1;
  CHECK(derive_pairwise_gt(a, c).empty());  // inter-class pairs are zero

  GraphInstance d = b;
  d.gt_universe.reset();
  CHECK_THROWS_AS(derive_pairwise_gt(a, d), std::invalid_argument);

  std::mt19937_64 rng(3);
  const InstanceSet set = generate(small_config());
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<std::size_t> pick(0, set.graphs.size() - 1);
    const GraphInstance& ga = set.graphs[pick(rng)];
    const GraphInstance& gb = set.graphs[pick(rng)];
    const Matching m = derive_pairwise_gt(ga, gb);
    for (int i = 0; i < ga.size(); ++i)
      for (int j = 0; j < gb.size(); ++j) {
        const int ai = (*ga.gt_universe)[static_cast<std::size_t>(i)];
        const int aj = (*gb.gt_universe)[static_cast<std::size_t>(j)];
        const bool expect =
            ga.class_id == gb.class_id && ai >= 0 && ai == aj;
        CHECK(m.matched(i, j) == expect);
      }
  }
}

TEST_CASE("derived ground truths are cycle consistent over all triples") {
  const InstanceSet set = generate(small_config());
  const std::size_t n = set.graphs.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == k || k == j || i == j) continue;
        const IndexMatrix composed =
            derive_pairwise_gt(set.graphs[i], set.graphs[k]).matrix() *
            derive_pairwise_gt(set.graphs[k], set.graphs[j]).matrix();
        const IndexMatrix direct =
            derive_pairwise_gt(set.graphs[i], set.graphs[j]).matrix();
        CHECK((composed.array() <= direct.array()).all());
      }
}

TEST_CASE("planted outliers come out as Outlier under the corpus taxonomy") {
  GenConfig c = small_config();
  c.inlier_drop_range = {0, 0};
  c.outlier_count_range = {1, 2};
  const InstanceSet set = generate(c);
  for (std::size_t a = 0; a < set.graphs.size(); ++a) {
    std::vector<CorpusMatch> corpus;
    for (std::size_t b = 0; b < set.graphs.size(); ++b) {
      if (a == b) continue;
      corpus.push_back(
          {&set.graphs[b], derive_pairwise_gt(set.graphs[a], set.graphs[b])});
    }
    const GraphInstance& g = set.graphs[a];
    for (int v = 0; v < g.size(); ++v) {
      const bool planted_outlier =
          (*g.gt_universe)[static_cast<std::size_t>(v)] < 0;
      CHECK((mgc(v, g, corpus) == 0) == planted_outlier);
    }
  }
}

TEST_CASE("more anchors than dimensions falls back with a manifest flag") {
  GenConfig c;
  c.class_count = 2;
  c.anchors_per_class = {5, 5};
  c.feature_dim = 4;
  c.graphs_per_class = 2;
  c.seed = 1;
  const InstanceSet set = generate(c);
  CHECK(set.random_prototype_fallback);
}
