#pragma once

// Reference multi-level cache simulator (functional, no timing).
//
// Exclusive: levels hold disjoint blocks. A hit below L1 moves the block to
// L1; every insertion into a full level pushes that level's victim to the
// MRU position of the next level, cascading; last-level victims are dropped.
//
// Inclusive: a miss fills every level above the hit level (or all levels on
// a full miss). An outer-level eviction back-invalidates inner copies. Only
// probes that reach a level update its recency; L1 hits leave outer
// replicas untouched. With recency inheritance, an outer replica of a block
// that still lives in an inner level takes that inner copy's recency: it is
// held out of the outer level's LRU order (pinned) and, when the inner copy
// is evicted, re-enters at the most-recent end.

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rdcache/estimate.hpp"
#include "rdcache/replacement.hpp"
#include "rdcache/trace.hpp"

namespace rdcache {

inline std::uint64_t set_index(BlockId block, std::uint64_t num_sets) { return block % num_sets; }

struct LevelSpec {
  std::uint64_t size_bytes = 0;
  std::uint32_t associativity = 0;  // 0 = fully associative
  Replacement replacement = Replacement::lru;
};

struct SimConfig {
  std::vector<LevelSpec> levels;
  std::uint64_t line_size_bytes = 64;
  Inclusion inclusion = Inclusion::exclusive;
  bool lru_inheritance = false;

  std::uint64_t blocks(std::size_t i) const { return levels[i].size_bytes / line_size_bytes; }
  std::uint64_t ways(std::size_t i) const {
    return levels[i].associativity == 0 ? blocks(i) : levels[i].associativity;
  }

  void validate() const {
    if (levels.empty()) throw std::invalid_argument("simulation needs at least one level");
    if (!is_power_of_two(line_size_bytes)) throw std::invalid_argument("line size must be a power of two");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const auto& l = levels[i];
      const std::string name = "level " + std::to_string(i + 1);
      if (l.size_bytes == 0 || l.size_bytes % line_size_bytes != 0)
        throw std::invalid_argument(name + " size must be a positive multiple of the line size");
      if (l.associativity != 0 && blocks(i) % l.associativity != 0)
        throw std::invalid_argument(name + " size is not divisible by line size x associativity");
      if (blocks(i) > UINT32_MAX) throw std::invalid_argument(name + " holds too many blocks");
      if (l.replacement == Replacement::tree_plru && !is_power_of_two(ways(i)))
        throw std::invalid_argument(name + ": tree-PLRU requires power-of-two associativity");
      if (i > 0 && l.size_bytes < levels[i - 1].size_bytes) throw std::invalid_argument("level sizes must not decrease");
      if (i > 0 && l.size_bytes == levels[i - 1].size_bytes && inclusion == Inclusion::inclusive)
        throw std::invalid_argument("inclusive level sizes must strictly increase");
    }
    if (lru_inheritance) {
      if (inclusion != Inclusion::inclusive)
        throw std::invalid_argument("LRU inheritance applies to inclusive hierarchies only");
      for (const auto& l : levels)
        if (l.replacement != Replacement::lru) throw std::invalid_argument("LRU inheritance requires LRU at every level");
    }
  }

  /// Fully-associative LRU hierarchy with the given sizes.
  static SimConfig fully_associative(const HierarchyConfig& h, bool inheritance = false) {
    SimConfig c;
    c.line_size_bytes = h.line_size_bytes;
    c.inclusion = h.inclusion;
    c.lru_inheritance = inheritance;
    for (auto s : h.levels) c.levels.push_back({s, 0, Replacement::lru});
    return c;
  }
};

struct LevelStats {
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
};

struct SimResult {
  std::vector<LevelStats> levels;
  std::uint64_t total_accesses = 0;

  double mpka(std::size_t level) const {
    return total_accesses == 0 ? 0.0 : 1000.0 * static_cast<double>(levels[level].misses) / static_cast<double>(total_accesses);
  }
  bool operator==(const SimResult& o) const {
    if (total_accesses != o.total_accesses || levels.size() != o.levels.size()) return false;
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (levels[i].accesses != o.levels[i].accesses || levels[i].hits != o.levels[i].hits ||
          levels[i].misses != o.levels[i].misses)
        return false;
    return true;
  }
};

// One cache level: tag store, lookup index and replacement state.
class CacheLevel {
 public:
  using Slot = std::uint32_t;

  // dense_universe > 0 promises every block id is below it, which lets a
  // level index blocks with a flat array instead of a hash map or a scan.
  CacheLevel(std::uint64_t blocks, std::uint64_t ways, Replacement policy, std::uint64_t dense_universe = 0)
      : sets_(static_cast<std::uint32_t>(blocks / ways)),
        ways_(static_cast<std::uint32_t>(ways)),
        tags_(blocks, 0),
        valid_(blocks, 0),
        free_(sets_),
        policy_(make_policy(policy, sets_, ways_)) {
    for (std::uint32_t s = 0; s < sets_; ++s) {
      free_[s].reserve(ways_);
      for (std::uint32_t w = ways_; w-- > 0;) free_[s].push_back(w);
    }
    if (dense_universe > 0) dense_.assign(dense_universe, kNoSlot);
    else if (ways_ > kScanWays) index_.reserve(blocks);
    indexed_ = dense_universe > 0 || ways_ > kScanWays;
  }

  std::uint32_t num_sets() const { return sets_; }
  std::uint32_t ways() const { return ways_; }
  std::uint32_t set_of(BlockId b) const { return static_cast<std::uint32_t>(set_index(b, sets_)); }

  std::optional<Slot> find(BlockId b) const {
    if (indexed_) {
      if (!dense_.empty()) {
        const Slot s = dense_[b];
        return s == kNoSlot ? std::nullopt : std::optional<Slot>(s);
      }
      auto it = index_.find(b);
      if (it == index_.end()) return std::nullopt;
      return it->second;
    }
    const Slot base = set_of(b) * ways_;
    for (Slot s = base; s < base + ways_; ++s)
      if (valid_[s] && tags_[s] == b) return s;
    return std::nullopt;
  }

  bool contains(BlockId b) const { return find(b).has_value(); }

  void touch(Slot s) {
    std::visit([&](auto& p) { p.touch(s / ways_, s % ways_); }, policy_);
  }

  /// Places b at the most-recent position; returns the evicted block, if any.
  std::optional<BlockId> insert(BlockId b, bool pinned = false) {
    const std::uint32_t set = set_of(b);
    std::optional<BlockId> evicted;
    std::uint32_t way;
    if (!free_[set].empty()) {
      way = free_[set].back();
      free_[set].pop_back();
    } else {
      way = std::visit([&](auto& p) { return p.victim(set); }, policy_);
      const Slot vs = set * ways_ + way;
      evicted = tags_[vs];
      std::visit([&](auto& p) { p.remove(set, way); }, policy_);
      if (indexed_) unindex(tags_[vs]);
    }
    const Slot s = set * ways_ + way;
    tags_[s] = b;
    valid_[s] = 1;
    if (indexed_) {
      if (!dense_.empty()) dense_[b] = s;
      else index_.emplace(b, s);
    }
    std::visit([&](auto& p) { p.touch(set, way); }, policy_);
    if (pinned) pin(s);
    return evicted;
  }

  bool erase(BlockId b) {
    auto s = find(b);
    if (!s) return false;
    const std::uint32_t set = *s / ways_, way = *s % ways_;
    std::visit([&](auto& p) { p.remove(set, way); }, policy_);
    valid_[*s] = 0;
    free_[set].push_back(way);
    if (indexed_) unindex(b);
    return true;
  }

  void pin(Slot s) { std::get<LruState>(policy_).pin(s / ways_, s % ways_); }
  void unpin(Slot s) { std::get<LruState>(policy_).unpin(s / ways_, s % ways_); }

  template <typename Fn>
  void for_each_block(Fn&& fn) const {
    for (std::size_t s = 0; s < tags_.size(); ++s)
      if (valid_[s]) fn(tags_[s]);
  }

  std::size_t occupancy() const {
    std::size_t n = 0;
    for (auto v : valid_) n += v;
    return n;
  }

 private:
  // Sets this narrow are searched linearly; wider ones use a hash index.
  static constexpr std::uint32_t kScanWays = 32;
  static constexpr Slot kNoSlot = std::numeric_limits<Slot>::max();

  void unindex(BlockId b) {
    if (!dense_.empty()) dense_[b] = kNoSlot;
    else index_.erase(b);
  }

  using Policy = std::variant<LruState, BitPlruState, TreePlruState>;

  static Policy make_policy(Replacement r, std::uint32_t sets, std::uint32_t ways) {
    switch (r) {
      case Replacement::lru: return LruState(sets, ways);
      case Replacement::bit_plru: return BitPlruState(sets, ways);
      case Replacement::tree_plru: return TreePlruState(sets, ways);
    }
    throw std::invalid_argument("unknown replacement policy");
  }

  std::uint32_t sets_;
  std::uint32_t ways_;
  std::vector<BlockId> tags_;
  std::vector<std::uint8_t> valid_;
  std::vector<std::vector<std::uint32_t>> free_;
  std::unordered_map<BlockId, Slot> index_;
  std::vector<Slot> dense_;
  bool indexed_ = false;
  Policy policy_;
};

class HierarchySimulator {
 public:
  explicit HierarchySimulator(SimConfig config, std::uint64_t dense_universe = 0) : config_(std::move(config)) {
    config_.validate();
    for (std::size_t i = 0; i < config_.levels.size(); ++i)
      levels_.emplace_back(config_.blocks(i), config_.ways(i), config_.levels[i].replacement, dense_universe);
    stats_.assign(levels_.size(), {});
  }

  void access(BlockId b) {
    ++total_;
    const std::size_t n = levels_.size();
    std::size_t hit = n;
    std::optional<CacheLevel::Slot> hit_slot;
    for (std::size_t i = 0; i < n; ++i) {
      ++stats_[i].accesses;
      hit_slot = levels_[i].find(b);
      if (hit_slot) {
        ++stats_[i].hits;
        hit = i;
        break;
      }
      ++stats_[i].misses;
    }
    if (hit == 0) {
      levels_[0].touch(*hit_slot);
      return;
    }
    if (config_.inclusion == Inclusion::exclusive) access_exclusive(b, hit);
    else access_inclusive(b, hit, hit_slot);
  }

  SimResult result() const {
    SimResult r;
    r.levels = stats_;
    r.total_accesses = total_;
    return r;
  }

  const CacheLevel& level(std::size_t i) const { return levels_[i]; }
  std::size_t num_levels() const { return levels_.size(); }

  /// Exclusive: no block in two levels. Inclusive: level i is a subset of
  /// level i+1.
  bool check_invariants() const {
    bool ok = true;
    for (std::size_t i = 0; i + 1 < levels_.size() && ok; ++i) {
      levels_[i].for_each_block([&](BlockId b) {
        if (config_.inclusion == Inclusion::exclusive) {
          for (std::size_t j = i + 1; j < levels_.size(); ++j)
            if (levels_[j].contains(b)) ok = false;
        } else if (!levels_[i + 1].contains(b)) {
          ok = false;
        }
      });
    }
    return ok;
  }

 private:
  void access_exclusive(BlockId b, std::size_t hit) {
    if (hit < levels_.size()) levels_[hit].erase(b);
    BlockId carry = b;
    for (auto& level : levels_) {
      auto victim = level.insert(carry);
      if (!victim) break;
      carry = *victim;
    }
  }

  void access_inclusive(BlockId b, std::size_t hit, std::optional<CacheLevel::Slot> hit_slot) {
    const bool inherit = config_.lru_inheritance;
    const std::size_t n = levels_.size();
    if (hit < n) {
      levels_[hit].touch(*hit_slot);
      if (inherit) levels_[hit].pin(*hit_slot);
    }
    for (std::size_t j = std::min(hit, n) ; j-- > 0;) {
      auto victim = levels_[j].insert(b, inherit && j > 0);
      if (!victim) continue;
      for (std::size_t k = 0; k < j; ++k) levels_[k].erase(*victim);
      if (inherit && j + 1 < n) {
        if (auto s = levels_[j + 1].find(*victim)) levels_[j + 1].unpin(*s);
      }
    }
  }

  SimConfig config_;
  std::vector<CacheLevel> levels_;
  std::vector<LevelStats> stats_;
  std::uint64_t total_ = 0;
};

inline SimResult simulate(const BlockTrace& trace, const SimConfig& config) {
  if (trace.line_size_bytes != config.line_size_bytes)
    throw std::invalid_argument("trace block size " + std::to_string(trace.line_size_bytes) +
                                " does not match simulator line size " + std::to_string(config.line_size_bytes));
  bool fully_associative = true;
  for (const auto& l : config.levels) fully_associative = fully_associative && l.associativity == 0;
  if (!fully_associative) {
    HierarchySimulator sim(config);
    for (BlockId b : trace.blocks) sim.access(b);
    return sim.result();
  }
  // Set mapping is irrelevant with a single set per level, so ids can be
  // renumbered densely in first-touch order.
  std::unordered_map<BlockId, BlockId> rename;
  rename.reserve(trace.num_distinct_blocks);
  std::vector<BlockId> dense;
  dense.reserve(trace.blocks.size());
  for (BlockId b : trace.blocks) dense.push_back(rename.try_emplace(b, rename.size()).first->second);
  HierarchySimulator sim(config, std::max<std::uint64_t>(rename.size(), 1));
  for (BlockId b : dense) sim.access(b);
  return sim.result();
}

inline void write_sim_csv(std::ostream& out, const SimResult& r) {
  out << "level,accesses,hits,misses,mpka\n";
  const auto old_prec = out.precision(17);
  for (std::size_t i = 0; i < r.levels.size(); ++i)
    out << (i + 1) << ',' << r.levels[i].accesses << ',' << r.levels[i].hits << ',' << r.levels[i].misses << ','
        << r.mpka(i) << '\n';
  out.precision(old_prec);
}

}  // namespace rdcache
