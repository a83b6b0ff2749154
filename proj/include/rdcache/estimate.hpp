#pragma once

// Multi-level miss estimation from a single top-level reuse-distance
// histogram.
//
// Exclusive hierarchy: levels 1..i together behave as one LRU cache of the
// summed capacity, so level i misses every access with distance >= sum of
// capacities of levels 1..i.
// Inclusive hierarchy: level i holds the most recent cap_i blocks, so it
// misses every access with distance >= cap_i.
// Cold accesses miss at every level in both cases.

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdcache/histogram.hpp"

namespace rdcache {

enum class Inclusion { exclusive, inclusive };

inline const char* to_string(Inclusion inc) { return inc == Inclusion::exclusive ? "exclusive" : "inclusive"; }

inline Inclusion parse_inclusion(const std::string& s) {
  if (s == "exclusive") return Inclusion::exclusive;
  if (s == "inclusive") return Inclusion::inclusive;
  throw std::invalid_argument("unknown inclusion policy '" + s + "' (expected exclusive|inclusive)");
}

struct HierarchyConfig {
  std::vector<std::uint64_t> levels;  // size in bytes, level 1 first
  std::uint64_t line_size_bytes = 64;
  Inclusion inclusion = Inclusion::exclusive;

  void validate() const {
    if (levels.empty()) throw std::invalid_argument("hierarchy needs at least one level");
    if (!is_power_of_two(line_size_bytes)) throw std::invalid_argument("line size must be a power of two");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const auto s = levels[i];
      if (!is_power_of_two(s))
        throw std::invalid_argument("level " + std::to_string(i + 1) + " size must be a positive power of two");
      if (s % line_size_bytes != 0)
        throw std::invalid_argument("level " + std::to_string(i + 1) + " size is not a multiple of the line size");
      if (i > 0 && s < levels[i - 1]) throw std::invalid_argument("level sizes must not decrease");
      if (i > 0 && s == levels[i - 1] && inclusion == Inclusion::inclusive)
        throw std::invalid_argument("inclusive level sizes must strictly increase");
    }
  }

  std::uint64_t capacity_blocks(std::size_t level) const { return levels[level] / line_size_bytes; }
};

struct LevelMisses {
  std::uint64_t size_bytes = 0;
  std::uint64_t miss_count = 0;
  double miss_rate = 0.0;  // miss_count / total accesses
  double mpka = 0.0;       // misses per 1000 accesses
};

struct LevelEstimate {
  std::vector<LevelMisses> levels;
  std::uint64_t total_accesses = 0;
};

inline double rate_of(std::uint64_t count, std::uint64_t total) {
  return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total);
}

/// Capacity (in blocks) whose one-level miss count equals the given level's
/// miss count.
inline std::uint64_t effective_capacity(const HierarchyConfig& config, std::size_t level) {
  if (config.inclusion == Inclusion::inclusive) return config.capacity_blocks(level);
  std::uint64_t cap = 0;
  for (std::size_t j = 0; j <= level; ++j) cap += config.capacity_blocks(j);
  return cap;
}

template <typename MissFn>
LevelEstimate estimate_with(MissFn&& misses_at_capacity, std::uint64_t total, const HierarchyConfig& config) {
  LevelEstimate est;
  est.total_accesses = total;
  est.levels.reserve(config.levels.size());
  for (std::size_t i = 0; i < config.levels.size(); ++i) {
    const std::uint64_t m = misses_at_capacity(effective_capacity(config, i));
    est.levels.push_back({config.levels[i], m, rate_of(m, total), 1000.0 * rate_of(m, total)});
  }
  return est;
}

inline void check_block_size(const ReuseHistogram& hist, const HierarchyConfig& config) {
  if (hist.block_size_bytes != config.line_size_bytes)
    throw std::invalid_argument("histogram block size " + std::to_string(hist.block_size_bytes) +
                                " does not match hierarchy line size " + std::to_string(config.line_size_bytes));
}

inline LevelEstimate estimate(const ReuseHistogram& hist, const HierarchyConfig& config) {
  config.validate();
  check_block_size(hist, config);
  return estimate_with([&](std::uint64_t cap) { return misses_beyond(hist, cap); }, hist.total_accesses, config);
}

/// Same result as estimate(), answered from a precomputed MissCurve.
inline LevelEstimate estimate(const MissCurve& curve, const HierarchyConfig& config) {
  config.validate();
  return estimate_with([&](std::uint64_t cap) { return curve.misses_beyond(cap); }, curve.total_accesses(), config);
}

inline void write_estimate_csv(std::ostream& out, const LevelEstimate& est) {
  out << "level,size_bytes,miss_count,miss_rate,mpka\n";
  const auto old_prec = out.precision(17);
  for (std::size_t i = 0; i < est.levels.size(); ++i) {
    const auto& l = est.levels[i];
    out << (i + 1) << ',' << l.size_bytes << ',' << l.miss_count << ',' << l.miss_rate << ',' << l.mpka << '\n';
  }
  out.precision(old_prec);
}

}  // namespace rdcache
