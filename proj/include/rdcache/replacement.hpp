#pragma once

// Per-set replacement state for LRU, bit-PLRU (MRU bits) and tree-PLRU.
//
// Each state object covers every set of one cache level; ways are addressed
// as (set, way). The cache fills invalid ways before asking for a victim, so
// victim() is only meaningful on a full set.

#include <bit>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdcache {

enum class Replacement { lru, bit_plru, tree_plru };

inline const char* to_string(Replacement r) {
  switch (r) {
    case Replacement::lru: return "lru";
    case Replacement::bit_plru: return "bit-plru";
    case Replacement::tree_plru: return "tree-plru";
  }
  return "?";
}

inline Replacement parse_replacement(const std::string& s) {
  if (s == "lru") return Replacement::lru;
  if (s == "bit-plru" || s == "bitplru") return Replacement::bit_plru;
  if (s == "tree-plru" || s == "treeplru") return Replacement::tree_plru;
  throw std::invalid_argument("unknown replacement policy '" + s + "' (expected lru|bit-plru|tree-plru)");
}

// True LRU as intrusive doubly-linked lists, one per set. A way can also be
// pinned: moved to a secondary list that victim() consults only when no
// unpinned way is left. Inclusive hierarchies with recency inheritance pin
// the outer replicas of blocks that still live in an inner level.
class LruState {
 public:
  static constexpr std::uint32_t kNil = std::numeric_limits<std::uint32_t>::max();

  LruState(std::uint32_t sets, std::uint32_t ways)
      : ways_(ways),
        prev_(std::size_t{sets} * ways, kNil),
        next_(std::size_t{sets} * ways, kNil),
        pinned_(std::size_t{sets} * ways, 0),
        linked_(std::size_t{sets} * ways, 0),
        lists_(std::size_t{sets} * 2) {}

  void touch(std::uint32_t set, std::uint32_t way) {
    const auto s = slot(set, way);
    unlink(set, s);
    push_front(list_of(set, false), s);
    pinned_[s] = 0;
  }

  void pin(std::uint32_t set, std::uint32_t way) {
    const auto s = slot(set, way);
    unlink(set, s);
    push_front(list_of(set, true), s);
    pinned_[s] = 1;
  }

  // Pinned -> most-recent end of the unpinned list. No-op for unpinned ways.
  void unpin(std::uint32_t set, std::uint32_t way) {
    if (!pinned_[slot(set, way)]) return;
    touch(set, way);
  }

  void remove(std::uint32_t set, std::uint32_t way) {
    const auto s = slot(set, way);
    unlink(set, s);
    pinned_[s] = 0;
  }

  std::uint32_t victim(std::uint32_t set) const {
    const auto& main = lists_[list_of(set, false)];
    if (main.tail != kNil) return main.tail - set * ways_;
    const auto& pinned = lists_[list_of(set, true)];
    return pinned.tail == kNil ? 0 : pinned.tail - set * ways_;
  }

  bool is_pinned(std::uint32_t set, std::uint32_t way) const { return pinned_[slot(set, way)] != 0; }

 private:
  struct List {
    std::uint32_t head = kNil;
    std::uint32_t tail = kNil;
  };

  std::uint32_t slot(std::uint32_t set, std::uint32_t way) const { return set * ways_ + way; }
  static std::size_t list_of(std::uint32_t set, bool pinned) { return std::size_t{set} * 2 + (pinned ? 1 : 0); }

  void unlink(std::uint32_t set, std::uint32_t s) {
    if (!linked_[s]) return;
    auto& l = lists_[list_of(set, pinned_[s] != 0)];
    if (prev_[s] != kNil) next_[prev_[s]] = next_[s];
    else l.head = next_[s];
    if (next_[s] != kNil) prev_[next_[s]] = prev_[s];
    else l.tail = prev_[s];
    prev_[s] = next_[s] = kNil;
    linked_[s] = 0;
  }

  void push_front(std::size_t list, std::uint32_t s) {
    auto& l = lists_[list];
    prev_[s] = kNil;
    next_[s] = l.head;
    if (l.head != kNil) prev_[l.head] = s;
    l.head = s;
    if (l.tail == kNil) l.tail = s;
    linked_[s] = 1;
  }

  std::uint32_t ways_;
  std::vector<std::uint32_t> prev_, next_;
  std::vector<std::uint8_t> pinned_, linked_;
  std::vector<List> lists_;
};

// MRU-bit pseudo-LRU: one bit per way, set on access. When setting a bit
// would leave every bit of the set on, all other bits are cleared first.
// The victim is the lowest-indexed way whose bit is clear.
class BitPlruState {
 public:
  BitPlruState(std::uint32_t sets, std::uint32_t ways)
      : ways_(ways), bits_(std::size_t{sets} * ways, 0), ones_(sets, 0) {}

  void touch(std::uint32_t set, std::uint32_t way) {
    auto& bit = bits_[std::size_t{set} * ways_ + way];
    if (bit) return;
    if (ones_[set] + 1 == ways_) {
      for (std::uint32_t w = 0; w < ways_; ++w) bits_[std::size_t{set} * ways_ + w] = 0;
      ones_[set] = 0;
    }
    bit = 1;
    ++ones_[set];
  }

  void remove(std::uint32_t set, std::uint32_t way) {
    auto& bit = bits_[std::size_t{set} * ways_ + way];
    if (bit) {
      bit = 0;
      --ones_[set];
    }
  }

  std::uint32_t victim(std::uint32_t set) const {
    for (std::uint32_t w = 0; w < ways_; ++w)
      if (!bits_[std::size_t{set} * ways_ + w]) return w;
    return 0;
  }

  bool bit(std::uint32_t set, std::uint32_t way) const { return bits_[std::size_t{set} * ways_ + way] != 0; }

 private:
  std::uint32_t ways_;
  std::vector<std::uint8_t> bits_;
  std::vector<std::uint32_t> ones_;
};

// Tree pseudo-LRU over a power-of-two number of ways. Internal node k
// (heap order, root = 1) holds one direction bit: 0 = victim on the left,
// 1 = victim on the right. An access flips the bits on its path to point
// away from the touched way.
class TreePlruState {
 public:
  TreePlruState(std::uint32_t sets, std::uint32_t ways) : ways_(ways), bits_(std::size_t{sets} * ways, 0) {
    if (!std::has_single_bit(ways)) throw std::invalid_argument("tree-PLRU needs a power-of-two associativity");
  }

  void touch(std::uint32_t set, std::uint32_t way) {
    std::uint8_t* tree = &bits_[std::size_t{set} * ways_];
    std::uint32_t node = 1, lo = 0, span = ways_;
    while (span > 1) {
      const std::uint32_t half = span / 2;
      if (way < lo + half) {
        tree[node] = 1;
        node = 2 * node;
      } else {
        tree[node] = 0;
        lo += half;
        node = 2 * node + 1;
      }
      span = half;
    }
  }

  void remove(std::uint32_t, std::uint32_t) {}

  std::uint32_t victim(std::uint32_t set) const {
    const std::uint8_t* tree = &bits_[std::size_t{set} * ways_];
    std::uint32_t node = 1, lo = 0, span = ways_;
    while (span > 1) {
      const std::uint32_t half = span / 2;
      if (tree[node]) {
        lo += half;
        node = 2 * node + 1;
      } else {
        node = 2 * node;
      }
      span = half;
    }
    return lo;
  }

 private:
  std::uint32_t ways_;
  std::vector<std::uint8_t> bits_;  // per set: nodes 1..ways-1 used
};

}  // namespace rdcache
