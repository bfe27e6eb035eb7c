#pragma once

#include <cstdint>

namespace upm {

/// Instrumentation counters for the expensive per-graph operations.
/// Thread-local so parallel callers never race; tests reset them around a
/// measured section to verify operation-count bounds (e.g. one forward and
/// one assignment solve per admitted graph in an online session).
struct OpCounters {
  std::uint64_t forwards = 0;
  std::uint64_t hungarian_calls = 0;

  void reset() { forwards = 0, hungarian_calls = 0; }
};

OpCounters& op_counters();

}  // namespace upm
