#pragma once

#include <bit>
#include <cassert>
#include <cstddef>
#include <type_traits>
#include <vector>

namespace rdcache {

// Binary indexed tree over positions [0, size) holding signed counts.
// Point update, prefix sum and k-th-set-position lookup are O(log size).
template <typename Count>
class Fenwick {
  static_assert(std::is_signed_v<Count>, "Fenwick counts must be signed");

 public:
  explicit Fenwick(std::size_t size = 0) : tree_(size + 1, Count{0}) {}

  std::size_t size() const { return tree_.size() - 1; }

  void add(std::size_t pos, Count delta) {
    assert(pos < size());
    for (std::size_t i = pos + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
  }

  // Sum over [0, pos).
  Count prefix(std::size_t pos) const {
    assert(pos <= size());
    Count s{0};
    for (std::size_t i = pos; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

  // Sum over [lo, hi).
  Count range(std::size_t lo, std::size_t hi) const { return lo >= hi ? Count{0} : prefix(hi) - prefix(lo); }

  // Smallest position p with prefix(p + 1) >= k, for k >= 1. Requires
  // non-negative entries and k <= total.
  std::size_t find_kth(Count k) const {
    assert(k >= 1);
    std::size_t pos = 0;
    std::size_t step = std::bit_floor(size() == 0 ? std::size_t{1} : size());
    for (; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next < tree_.size() && tree_[next] < k) {
        pos = next;
        k -= tree_[next];
      }
    }
    return pos;
  }

 private:
  std::vector<Count> tree_;
};

}  // namespace rdcache
