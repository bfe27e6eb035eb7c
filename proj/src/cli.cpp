#include "upm/cli.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "upm/check.hpp"
#include "upm/counters.hpp"
#include "upm/io.hpp"
#include "upm/metrics.hpp"
#include "upm/multigraph.hpp"
#include "upm/solver.hpp"
#include "upm/train.hpp"

namespace upm::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(12);
  ss << v;
  return ss.str();
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  detail::require_runtime(in.good(), "cannot open config " + path.string());
  return json::parse(in);
}

void echo_config(RunReport& report, const json& config) {
  for (const auto& [key, value] : config.items())
    report.add("config." + key, value.dump());
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

GenConfig parse_gen_config(const json& j) {
  GenConfig c;
  c.class_count = j.value("class_count", c.class_count);
  if (j.contains("anchors_per_class")) {
    const json& a = j.at("anchors_per_class");
    if (a.is_number_integer())
      c.anchors_per_class.assign(static_cast<std::size_t>(c.class_count),
                                 a.get<int>());
    else
      c.anchors_per_class = a.get<std::vector<int>>();
  }
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.graphs_per_class = j.value("graphs_per_class", c.graphs_per_class);
  if (j.contains("inlier_drop_range")) {
    const auto r = j.at("inlier_drop_range").get<std::vector<int>>();
    detail::require(r.size() == 2, "inlier_drop_range must be [lo, hi]");
    c.inlier_drop_range = {r[0], r[1]};
  }
  if (j.contains("outlier_count_range")) {
    const auto r = j.at("outlier_count_range").get<std::vector<int>>();
    detail::require(r.size() == 2, "outlier_count_range must be [lo, hi]");
    c.outlier_count_range = {r[0], r[1]};
  }
  c.feature_noise_sigma = j.value("feature_noise_sigma", c.feature_noise_sigma);
  c.seed = j.value("seed", c.seed);
  return c;
}

struct TrainFileConfig {
  TrainConfig train;
  bool nonlinearity = true;
  double temperature = 1.0;
  std::uint64_t init_seed = 0;
  UniverseMode mode = UniverseMode::FeatureMerged;
  int universe_size = 0;  // 0 = derive from the dataset
};

TrainFileConfig parse_train_config(const json& j) {
  TrainFileConfig c;
  c.train.epochs = j.value("epochs", c.train.epochs);
  c.train.pairs_per_epoch = j.value("pairs_per_epoch", c.train.pairs_per_epoch);
  c.train.batch_size = j.value("batch_size", c.train.batch_size);
  c.train.learning_rate = j.value("learning_rate", c.train.learning_rate);
  c.train.momentum = j.value("momentum", c.train.momentum);
  c.train.outlier_aware = j.value("outlier_aware", c.train.outlier_aware);
  if (j.contains("sampling"))
    c.train.sampling =
        sampling_mode_from_string(j.at("sampling").get<std::string>());
  c.train.clamp = j.value("clamp", c.train.clamp);
  c.train.seed = j.value("seed", c.train.seed);
  c.train.holdout_fraction =
      j.value("holdout_fraction", c.train.holdout_fraction);
  c.nonlinearity = j.value("nonlinearity", c.nonlinearity);
  c.temperature = j.value("temperature", c.temperature);
  c.init_seed = j.value("init_seed", c.train.seed);
  if (j.contains("universe_mode"))
    c.mode = universe_mode_from_string(j.at("universe_mode").get<std::string>());
  c.universe_size = j.value("universe_size", c.universe_size);
  return c;
}

/// Multiple-graph-correspondence flags of one graph against the whole set.
std::vector<char> mgc_flags(const InstanceSet& set, int index) {
  const GraphInstance& g = set.graphs[static_cast<std::size_t>(index)];
  std::vector<CorpusMatch> corpus;
  for (std::size_t o = 0; o < set.graphs.size(); ++o) {
    if (static_cast<int>(o) == index) continue;
    corpus.push_back(
        {&set.graphs[o], derive_pairwise_gt(g, set.graphs[o])});
  }
  std::vector<char> flags(static_cast<std::size_t>(g.size()), 0);
  for (int v = 0; v < g.size(); ++v)
    flags[static_cast<std::size_t>(v)] =
        static_cast<char>(mgc(v, g, corpus));
  return flags;
}

std::vector<NodeType> types_from_flags(const Matching& pair_gt,
                                       const std::vector<char>& semantic) {
  std::vector<NodeType> types(semantic.size());
  for (std::size_t v = 0; v < semantic.size(); ++v) {
    if (pgc(static_cast<int>(v), pair_gt))
      types[v] = NodeType::MatchedInlier;
    else
      types[v] = semantic[v] ? NodeType::UnmatchedInlier : NodeType::Outlier;
  }
  return types;
}

void eval_pairs(RunReport& report, const InstanceSet& set,
                const UniverseMetric& metric, const EvalOptions& options,
                std::mt19937_64& rng) {
  std::vector<SampledPair> sampled =
      sample_pairs(set, SamplingMode::SameClass, options.pairs, rng);

  std::vector<std::vector<char>> semantic(set.graphs.size());
  auto semantic_of = [&](int idx) -> const std::vector<char>& {
    auto& slot = semantic[static_cast<std::size_t>(idx)];
    if (slot.empty() && set.graphs[static_cast<std::size_t>(idx)].size() > 0)
      slot = mgc_flags(set, idx);
    return slot;
  };

  double f1_sum = 0.0, precision_sum = 0.0, recall_sum = 0.0, acc_sum = 0.0;
  MatchTypeCounts totals;
  for (const SampledPair& p : sampled) {
    const GraphInstance& ga = set.graphs[static_cast<std::size_t>(p.a)];
    const GraphInstance& gb = set.graphs[static_cast<std::size_t>(p.b)];
    const UniverseAssignment xa = infer_universe(forward(metric, ga.features));
    const UniverseAssignment xb = infer_universe(forward(metric, gb.features));
    const Matching pred = reconstruct_pairwise(xa, xb);
    const F1Result r = f1(pred, p.gt);
    f1_sum += r.f1;
    precision_sum += r.precision;
    recall_sum += r.recall;
    acc_sum += accuracy(pred, p.gt);
    const MatchTypeCounts c =
        match_types(pred, types_from_flags(p.gt, semantic_of(p.a)),
                    types_from_flags(p.gt.transposed(), semantic_of(p.b)),
                    p.gt);
    totals.correct += c.correct;
    totals.mismatching += c.mismatching;
    totals.ill_matching += c.ill_matching;
    totals.over_matching += c.over_matching;
  }
  const double n = double(sampled.size());
  const std::string ctx = "pairs=" + std::to_string(sampled.size());
  report.add("f1_mean", f1_sum / n, ctx);
  report.add("precision_mean", precision_sum / n, ctx);
  report.add("recall_mean", recall_sum / n, ctx);
  report.add("accuracy_mean", acc_sum / n, ctx);
  report.add("match_correct", totals.correct, ctx);
  report.add("match_mismatching", totals.mismatching, ctx);
  report.add("match_ill", totals.ill_matching, ctx);
  report.add("match_over", totals.over_matching, ctx);
}

void eval_online(RunReport& report, const InstanceSet& set,
                 const UniverseMetric& metric, const EvalOptions& options,
                 std::mt19937_64& rng) {
  // Pick a class that can host the session, largest first as fallback.
  std::vector<std::vector<int>> members(
      static_cast<std::size_t>(std::max(set.class_count, 1)));
  for (std::size_t i = 0; i < set.graphs.size(); ++i)
    members[static_cast<std::size_t>(set.graphs[i].class_id)].push_back(
        static_cast<int>(i));
  std::vector<int> eligible;
  for (std::size_t c = 0; c < members.size(); ++c)
    if (static_cast<int>(members[c].size()) >= options.session_size)
      eligible.push_back(static_cast<int>(c));
  int chosen_class;
  if (eligible.empty()) {
    chosen_class = 0;
    for (std::size_t c = 1; c < members.size(); ++c)
      if (members[c].size() >
          members[static_cast<std::size_t>(chosen_class)].size())
        chosen_class = static_cast<int>(c);
  } else {
    std::uniform_int_distribution<std::size_t> d(0, eligible.size() - 1);
    chosen_class = eligible[d(rng)];
  }
  std::vector<int> pool = members[static_cast<std::size_t>(chosen_class)];
  std::shuffle(pool.begin(), pool.end(), rng);
  const int session_size =
      std::min<int>(options.session_size, static_cast<int>(pool.size()));
  pool.resize(static_cast<std::size_t>(session_size));

  MatchSession session(metric);
  long bad_counts = 0;
  for (int idx : pool) {
    const OpCounters before = op_counters();
    session.add(set.graphs[static_cast<std::size_t>(idx)]);
    const OpCounters after = op_counters();
    if (after.forwards - before.forwards != 1 ||
        after.hungarian_calls - before.hungarian_calls != 1)
      bad_counts++;
  }

  // Batch run over the same graphs must be bit-identical.
  bool equivalent = true;
  for (int i = 0; i < session_size; ++i) {
    const GraphInstance& g = set.graphs[static_cast<std::size_t>(pool[i])];
    const UniverseAssignment batch =
        infer_universe(forward(metric, g.features), g.id);
    if (batch.anchor != session.assignment(i).anchor) equivalent = false;
  }

  long cycle_violations = 0;
  for (int i = 0; i < session_size; ++i)
    for (int k = 0; k < session_size; ++k)
      for (int j = 0; j < session_size; ++j) {
        if (i == k || k == j || i == j) continue;
        const IndexMatrix composed =
            session.pairwise(i, k).matrix() * session.pairwise(k, j).matrix();
        const IndexMatrix direct = session.pairwise(i, j).matrix();
        for (Eigen::Index r = 0; r < composed.rows(); ++r)
          for (Eigen::Index c = 0; c < composed.cols(); ++c)
            if (composed(r, c) > direct(r, c)) cycle_violations++;
      }

  double f1_sum = 0.0, acc_sum = 0.0;
  long pair_count = 0;
  for (int i = 0; i < session_size; ++i)
    for (int j = i + 1; j < session_size; ++j) {
      const Matching pred = session.pairwise(i, j);
      const Matching gt = derive_pairwise_gt(
          set.graphs[static_cast<std::size_t>(pool[i])],
          set.graphs[static_cast<std::size_t>(pool[j])]);
      f1_sum += f1(pred, gt).f1;
      acc_sum += accuracy(pred, gt);
      pair_count++;
    }

  const std::string ctx = "session=" + std::to_string(session_size);
  report.add("session_class", long(chosen_class), ctx);
  report.add("session_graphs", long(session_size), ctx);
  report.add("per_add_count_violations", bad_counts,
             "expected 1 forward + 1 hungarian per add");
  report.add("batch_equivalent", equivalent ? "1" : "0", ctx);
  report.add("cycle_violations", cycle_violations, "all ordered triples");
  if (pair_count > 0) {
    report.add("f1_mean", f1_sum / double(pair_count), ctx);
    report.add("accuracy_mean", acc_sum / double(pair_count), ctx);
  }
  if (bad_counts > 0 || !equivalent || cycle_violations > 0)
    report.invariant_failures++;
}

void eval_cluster(RunReport& report, const InstanceSet& set,
                  const UniverseMetric& metric, const EvalOptions& options,
                  std::mt19937_64& rng) {
  std::vector<std::vector<int>> members(
      static_cast<std::size_t>(std::max(set.class_count, 1)));
  for (std::size_t i = 0; i < set.graphs.size(); ++i)
    members[static_cast<std::size_t>(set.graphs[i].class_id)].push_back(
        static_cast<int>(i));
  std::vector<int> classes;
  for (std::size_t c = 0; c < members.size(); ++c)
    if (!members[c].empty()) classes.push_back(static_cast<int>(c));
  const int k = options.k > 0 ? options.k : static_cast<int>(classes.size());
  detail::require(k >= 1 && k <= static_cast<int>(classes.size()),
                  "cluster mode: k exceeds available classes");
  std::shuffle(classes.begin(), classes.end(), rng);
  classes.resize(static_cast<std::size_t>(k));

  std::vector<GraphInstance> graphs;
  std::vector<int> gt_labels;
  for (int label = 0; label < k; ++label) {
    std::vector<int> pool = members[static_cast<std::size_t>(classes[label])];
    std::shuffle(pool.begin(), pool.end(), rng);
    const int take = std::min<int>(options.per_class,
                                   static_cast<int>(pool.size()));
    for (int t = 0; t < take; ++t) {
      graphs.push_back(set.graphs[static_cast<std::size_t>(pool[t])]);
      gt_labels.push_back(label);
    }
  }

  const MixtureResult mixture = mixture_pipeline(graphs, metric, k, rng());

  const int m = static_cast<int>(graphs.size());
  Matrix pair_f1 = Matrix::Zero(m, m), pair_acc = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const Matching pred = reconstruct_pairwise(mixture.assignments[i],
                                                 mixture.assignments[j]);
      const Matching gt = derive_pairwise_gt(graphs[static_cast<std::size_t>(i)],
                                             graphs[static_cast<std::size_t>(j)]);
      pair_f1(i, j) = pair_f1(j, i) = f1(pred, gt).f1;
      pair_acc(i, j) = pair_acc(j, i) = accuracy(pred, gt);
    }

  const ClusteringScores scores = clustering_metrics(
      mixture.clusters.labels, k, gt_labels, pair_f1, pair_acc);
  const std::string ctx =
      "k=" + std::to_string(k) + " graphs=" + std::to_string(m);
  report.add("cp", scores.cp, ctx);
  report.add("ri", scores.ri, ctx);
  report.add("ca", scores.ca, ctx);
  report.add("f1c", scores.f1c, ctx);
  report.add("mac", scores.mac, ctx);
}

void eval_gradcheck(RunReport& report, const InstanceSet& set,
                    const UniverseMetric& metric, const EvalOptions& options,
                    std::mt19937_64& rng) {
  const int count = std::max(1, std::min(options.pairs, 50));
  std::vector<SampledPair> sampled =
      sample_pairs(set, SamplingMode::SameClass, count, rng);

  double max_rel = 0.0;
  const double h = 1e-5;
  for (int outlier_aware = 0; outlier_aware <= 1; ++outlier_aware) {
    const BceOptions opts{outlier_aware == 1, 1e-7};
    for (const SampledPair& p : sampled) {
      PairBatchItem item;
      item.sa = forward(metric,
                        set.graphs[static_cast<std::size_t>(p.a)].features);
      item.sb = forward(metric,
                        set.graphs[static_cast<std::size_t>(p.b)].features);
      item.gt = p.gt;
      const BceResult res = bce_loss({item}, opts);
      auto probe = [&](bool side_a, Eigen::Index i, Eigen::Index t,
                       double delta) {
        PairBatchItem probe_item = item;
        Matrix raw = side_a ? item.sa.raw : item.sb.raw;
        raw(i, t) += delta;
        (side_a ? probe_item.sa : probe_item.sb) =
            affinity_from_raw(raw, metric.temperature);
        return bce_loss({probe_item}, opts).loss;
      };
      for (int side = 0; side < 2; ++side) {
        const Matrix& grad = side == 0 ? res.grad_a[0] : res.grad_b[0];
        for (Eigen::Index i = 0; i < grad.rows(); ++i)
          for (Eigen::Index t = 0; t < grad.cols(); ++t) {
            const double fd =
                (probe(side == 0, i, t, h) - probe(side == 0, i, t, -h)) /
                (2 * h);
            const double rel =
                std::abs(grad(i, t) - fd) / std::max(1.0, std::abs(fd));
            max_rel = std::max(max_rel, rel);
          }
      }
    }
  }
  report.add("gradcheck_max_rel_error", max_rel,
             "pairs=" + std::to_string(count) + " h=1e-5");
  if (!(max_rel < 1e-5)) report.invariant_failures++;
}

}  // namespace

void RunReport::add(const std::string& metric, const std::string& value,
                    const std::string& context) {
  rows.push_back({metric, value, context});
}

void RunReport::add(const std::string& metric, double value,
                    const std::string& context) {
  add(metric, format_double(value), context);
}

void RunReport::add(const std::string& metric, long value,
                    const std::string& context) {
  add(metric, std::to_string(value), context);
}

std::string RunReport::to_csv() const {
  std::string out = "metric,value,context\n";
  for (const Row& row : rows)
    out += csv_escape(row.metric) + "," + csv_escape(row.value) + "," +
           csv_escape(row.context) + "\n";
  return out;
}

RunReport cmd_gen(const fs::path& config_path, const fs::path& out_dir,
                  std::optional<std::uint64_t> seed_override) {
  Timer timer;
  const json config_json = read_json(config_path);
  GenConfig config = parse_gen_config(config_json);
  if (seed_override) config.seed = *seed_override;

  RunReport report;
  report.command = "gen";
  report.seed = config.seed;
  report.add("command", std::string("gen"));
  report.add("schema_version", long(RunReport::kSchemaVersion));
  report.add("seed", long(config.seed));
  echo_config(report, config_json);

  const InstanceSet set = generate(config);
  save_instance_set(out_dir, set);

  report.add("graphs", long(set.graphs.size()));
  report.add("classes", long(set.class_count));
  long nodes = 0, outliers = 0;
  for (const GraphInstance& g : set.graphs) {
    nodes += g.size();
    for (int a : *g.gt_universe) outliers += a < 0;
  }
  report.add("nodes", nodes);
  report.add("planted_outliers", outliers);
  report.add("random_prototype_fallback",
             std::string(set.random_prototype_fallback ? "1" : "0"));
  report.add("dataset_dir", out_dir.string());
  report.add("elapsed_seconds", timer.seconds());
  return report;
}

RunReport cmd_train(const fs::path& dataset_dir, const fs::path& config_path,
                    const fs::path& checkpoint_out, const fs::path& history_csv,
                    std::optional<std::uint64_t> seed_override) {
  Timer timer;
  const json config_json = read_json(config_path);
  TrainFileConfig file_config = parse_train_config(config_json);
  if (seed_override) {
    file_config.train.seed = *seed_override;
    file_config.init_seed = *seed_override;
  }
  const InstanceSet set = load_instance_set(dataset_dir);

  file_config.train.universe = set.universe_spec(file_config.mode);
  if (file_config.universe_size > 0)
    file_config.train.universe.n_u = file_config.universe_size;

  RunReport report;
  report.command = "train";
  report.seed = file_config.train.seed;
  report.add("command", std::string("train"));
  report.add("schema_version", long(RunReport::kSchemaVersion));
  report.add("seed", long(file_config.train.seed));
  echo_config(report, config_json);

  const UniverseMetric initial = UniverseMetric::init(
      set.feature_dim, file_config.train.universe.n_u, file_config.init_seed,
      file_config.nonlinearity, file_config.temperature);
  const TrainResult result = train(initial, set, file_config.train);

  Checkpoint ckpt{result.metric, file_config.train.universe,
                  fnv1a_hex(config_json.dump())};
  save_checkpoint(checkpoint_out, ckpt);

  if (!history_csv.empty()) {
    std::string csv = "epoch,mean_loss,holdout_f1,outlier_absorption\n";
    for (const EpochStats& e : result.history)
      csv += std::to_string(e.epoch) + "," + format_double(e.mean_loss) + "," +
             format_double(e.holdout_f1) + "," +
             format_double(e.outlier_absorption) + "\n";
    atomic_write(history_csv, csv);
    report.add("history_csv", history_csv.string());
  }

  report.add("universe_size", long(file_config.train.universe.n_u));
  report.add("universe_mode",
             std::string(to_string(file_config.train.universe.mode)));
  report.add("epochs", long(result.history.size()));
  if (!result.history.empty()) {
    const EpochStats& last = result.history.back();
    report.add("final_mean_loss", last.mean_loss);
    report.add("holdout_f1", last.holdout_f1, "evaluation mode");
    report.add("outlier_absorption", last.outlier_absorption,
               "evaluation mode");
  }
  report.add("checkpoint", checkpoint_out.string());
  report.add("config_hash", ckpt.config_hash);
  report.add("elapsed_seconds", timer.seconds());
  return report;
}

RunReport cmd_eval(const fs::path& dataset_dir, const fs::path& checkpoint_path,
                   const EvalOptions& options) {
  Timer timer;
  const InstanceSet set = load_instance_set(dataset_dir);
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  detail::require(set.feature_dim == ckpt.metric.feature_dim(),
                  "eval: dataset and checkpoint feature dimensions differ");

  const std::uint64_t seed = options.seed.value_or(set.seed);
  std::mt19937_64 rng(seed ^ 0xda3e39cb94b95bdbULL);

  RunReport report;
  report.command = "eval";
  report.seed = seed;
  report.add("command", std::string("eval"));
  report.add("schema_version", long(RunReport::kSchemaVersion));
  report.add("seed", long(seed));
  report.add("mode", options.mode);
  report.add("dataset_dir", dataset_dir.string());
  report.add("checkpoint", checkpoint_path.string());

  if (options.mode == "pairs")
    eval_pairs(report, set, ckpt.metric, options, rng);
  else if (options.mode == "online")
    eval_online(report, set, ckpt.metric, options, rng);
  else if (options.mode == "cluster")
    eval_cluster(report, set, ckpt.metric, options, rng);
  else if (options.mode == "gradcheck")
    eval_gradcheck(report, set, ckpt.metric, options, rng);
  else
    throw std::invalid_argument("unknown eval mode: " + options.mode);

  report.add("invariant_failures", long(report.invariant_failures));
  report.add("elapsed_seconds", timer.seconds());
  return report;
}

RunReport cmd_inspect(const fs::path& checkpoint_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  RunReport report;
  report.command = "inspect";
  report.add("command", std::string("inspect"));
  report.add("schema_version", long(RunReport::kSchemaVersion));
  report.add("checkpoint", checkpoint_path.string());
  report.add("feature_dim", long(ckpt.metric.feature_dim()));
  report.add("universe_size", long(ckpt.metric.universe_size()));
  report.add("universe_mode", std::string(to_string(ckpt.universe.mode)));
  report.add("class_count", long(ckpt.universe.class_count));
  report.add("nonlinearity", std::string(ckpt.metric.nonlinearity ? "1" : "0"));
  report.add("temperature", ckpt.metric.temperature);
  report.add("config_hash", ckpt.config_hash);
  return report;
}

}  // namespace upm::cli
