#pragma once

#include <filesystem>
#include <string>

#include "upm/affinity.hpp"
#include "upm/types.hpp"

namespace upm {

/// Writes content to a sibling temp file and renames it into place, so a
/// failed write never leaves a partial file behind.
void atomic_write(const std::filesystem::path& path,
                  const std::string& content);

/// Dataset directory layout: manifest.json (counts, dims, seed, flags) plus
/// graphs.jsonl with one record per graph:
///   {"id", "class_id", "shape": [n, d], "features": row-major numbers,
///    "gt_universe": ints with -1 for outlier nodes}
/// UTF-8, stable key order.
void save_instance_set(const std::filesystem::path& dir,
                       const InstanceSet& set);
InstanceSet load_instance_set(const std::filesystem::path& dir);

struct Checkpoint {
  UniverseMetric metric;
  UniverseSpec universe;
  std::string config_hash;
};

/// Versioned JSON document carrying the weight matrix (row-major),
/// normalization state, universe spec and a hash of the training config.
/// Doubles round-trip exactly; save -> load -> save is byte-identical.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over a canonical string; used to stamp configs into artifacts.
std::string fnv1a_hex(const std::string& data);

}  // namespace upm
