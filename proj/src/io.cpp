#include "upm/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "upm/check.hpp"

namespace upm {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kDatasetVersion = 1;
constexpr int kCheckpointVersion = 1;

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from_json(const json& a) {
  Vector v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

json matrix_to_json(const Matrix& m) {  // row-major flattening
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  return a;
}

Matrix matrix_from_json(const json& a, Eigen::Index rows, Eigen::Index cols) {
  detail::require_runtime(
      a.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
      "matrix payload size mismatch");
  Matrix m(rows, cols);
  std::size_t idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = a[idx++].get<double>();
  return m;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require_runtime(in.good(), "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void atomic_write(const fs::path& path, const std::string& content) {
  detail::require_runtime(!path.empty(), "atomic_write: empty path");
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    detail::require_runtime(out.good(),
                            "atomic_write: cannot create " + tmp.string());
    out << content;
    out.flush();
    if (!out.good()) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("atomic_write: write failed for " +
                               tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("atomic_write: rename failed for " +
                             path.string());
  }
}

void save_instance_set(const fs::path& dir, const InstanceSet& set) {
  fs::create_directories(dir);

  json manifest;
  manifest["format"] = "upm-dataset";
  manifest["version"] = kDatasetVersion;
  manifest["class_count"] = set.class_count;
  manifest["anchors_per_class"] = set.anchors_per_class;
  manifest["feature_dim"] = set.feature_dim;
  manifest["graph_count"] = set.graphs.size();
  manifest["seed"] = set.seed;
  manifest["random_prototype_fallback"] = set.random_prototype_fallback;
  manifest["graphs_file"] = "graphs.jsonl";

  std::string lines;
  for (const GraphInstance& g : set.graphs) {
    json rec;
    rec["id"] = g.id;
    rec["class_id"] = g.class_id;
    rec["shape"] = {g.size(), g.feature_dim()};
    rec["features"] = matrix_to_json(g.features);
    if (g.gt_universe)
      rec["gt_universe"] = *g.gt_universe;
    else
      rec["gt_universe"] = nullptr;
    lines += rec.dump();
    lines += '\n';
  }
  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
  atomic_write(dir / "graphs.jsonl", lines);
}

InstanceSet load_instance_set(const fs::path& dir) {
  const json manifest = json::parse(read_file(dir / "manifest.json"));
  detail::require_runtime(manifest.at("format") == "upm-dataset",
                          "not a dataset manifest: " + dir.string());
  detail::require_runtime(manifest.at("version").get<int>() == kDatasetVersion,
                          "unsupported dataset version");
  InstanceSet set;
  set.class_count = manifest.at("class_count").get<int>();
  set.anchors_per_class =
      manifest.at("anchors_per_class").get<std::vector<int>>();
  set.feature_dim = manifest.at("feature_dim").get<int>();
  set.seed = manifest.at("seed").get<std::uint64_t>();
  set.random_prototype_fallback =
      manifest.at("random_prototype_fallback").get<bool>();

  const std::string graphs_file =
      manifest.at("graphs_file").get<std::string>();
  std::istringstream lines(read_file(dir / graphs_file));
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    GraphInstance g;
    g.id = rec.at("id").get<std::string>();
    g.class_id = rec.at("class_id").get<int>();
    const auto shape = rec.at("shape").get<std::vector<Eigen::Index>>();
    detail::require_runtime(shape.size() == 2, "bad graph shape");
    g.features = matrix_from_json(rec.at("features"), shape[0], shape[1]);
    if (!rec.at("gt_universe").is_null())
      g.gt_universe = rec.at("gt_universe").get<std::vector<int>>();
    set.graphs.push_back(std::move(g));
  }
  detail::require_runtime(
      set.graphs.size() == manifest.at("graph_count").get<std::size_t>(),
      "graph count mismatch in " + dir.string());
  return set;
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  const UniverseMetric& m = ckpt.metric;
  json doc;
  doc["format"] = "upm-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["universe"] = {{"n_u", ckpt.universe.n_u},
                     {"mode", to_string(ckpt.universe.mode)},
                     {"class_count", ckpt.universe.class_count}};
  json metric;
  metric["feature_dim"] = m.feature_dim();
  metric["universe_size"] = m.universe_size();
  metric["nonlinearity"] = m.nonlinearity;
  metric["temperature"] = m.temperature;
  metric["bn_momentum"] = m.bn_momentum;
  metric["bn_epsilon"] = m.bn_epsilon;
  metric["weight"] = matrix_to_json(m.weight);
  metric["bn_gamma"] = vector_to_json(m.bn_gamma);
  metric["bn_beta"] = vector_to_json(m.bn_beta);
  metric["bn_running_mean"] = vector_to_json(m.bn_running_mean);
  metric["bn_running_var"] = vector_to_json(m.bn_running_var);
  doc["metric"] = std::move(metric);
  doc["config_hash"] = ckpt.config_hash;
  atomic_write(path, doc.dump(2) + "\n");
}

Checkpoint load_checkpoint(const fs::path& path) {
  const json doc = json::parse(read_file(path));
  detail::require_runtime(doc.at("format") == "upm-checkpoint",
                          "not a checkpoint: " + path.string());
  detail::require_runtime(doc.at("version").get<int>() == kCheckpointVersion,
                          "unsupported checkpoint version");
  Checkpoint ckpt;
  const json& u = doc.at("universe");
  ckpt.universe.n_u = u.at("n_u").get<int>();
  ckpt.universe.mode =
      universe_mode_from_string(u.at("mode").get<std::string>());
  ckpt.universe.class_count = u.at("class_count").get<int>();

  const json& metric = doc.at("metric");
  UniverseMetric& m = ckpt.metric;
  const auto d = metric.at("feature_dim").get<Eigen::Index>();
  const auto nu = metric.at("universe_size").get<Eigen::Index>();
  m.nonlinearity = metric.at("nonlinearity").get<bool>();
  m.temperature = metric.at("temperature").get<double>();
  m.bn_momentum = metric.at("bn_momentum").get<double>();
  m.bn_epsilon = metric.at("bn_epsilon").get<double>();
  m.weight = matrix_from_json(metric.at("weight"), d, nu);
  m.bn_gamma = vector_from_json(metric.at("bn_gamma"));
  m.bn_beta = vector_from_json(metric.at("bn_beta"));
  m.bn_running_mean = vector_from_json(metric.at("bn_running_mean"));
  m.bn_running_var = vector_from_json(metric.at("bn_running_var"));
  detail::require_runtime(m.bn_gamma.size() == d && m.bn_beta.size() == d &&
                              m.bn_running_mean.size() == d &&
                              m.bn_running_var.size() == d,
                          "checkpoint normalization state size mismatch");
  ckpt.config_hash = doc.at("config_hash").get<std::string>();
  return ckpt;
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace upm
