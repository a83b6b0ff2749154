#pragma once

// Reuse-distance (LRU stack distance) histograms.
//
// Distances are measured in distinct blocks: an access whose previous
// access to the same block was separated by k other distinct blocks has
// distance k. First-time accesses are counted separately as cold.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <istream>
#include <list>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rdcache/fenwick.hpp"
#include "rdcache/trace.hpp"

namespace rdcache {

struct ReuseHistogram {
  std::map<std::uint64_t, std::uint64_t> counts;  // distance (blocks) -> occurrences
  std::uint64_t cold_count = 0;
  std::uint64_t total_accesses = 0;
  std::uint64_t block_size_bytes = 1;

  bool operator==(const ReuseHistogram&) const = default;

  std::optional<std::uint64_t> max_distance() const {
    if (counts.empty()) return std::nullopt;
    return counts.rbegin()->first;
  }

  std::uint64_t finite_count() const { return total_accesses - cold_count; }
};

/// Same counts as the source histogram with keys rescaled to bytes.
struct NormalizedHistogram {
  std::map<std::uint64_t, std::uint64_t> counts;  // distance (bytes) -> occurrences
  std::uint64_t cold_count = 0;
  std::uint64_t total_accesses = 0;
  std::uint64_t block_size_bytes = 1;

  std::optional<std::uint64_t> max_distance_bytes() const {
    if (counts.empty()) return std::nullopt;
    return counts.rbegin()->first;
  }
};

/// Reference implementation: an explicit most-recent-first stack, O(N*M).
inline ReuseHistogram histogram_naive(const BlockTrace& trace) {
  ReuseHistogram h;
  h.block_size_bytes = trace.line_size_bytes;
  h.total_accesses = trace.blocks.size();
  std::vector<BlockId> stack;  // back = most recent
  for (BlockId b : trace.blocks) {
    auto it = std::find(stack.rbegin(), stack.rend(), b);
    if (it == stack.rend()) {
      ++h.cold_count;
    } else {
      ++h.counts[static_cast<std::uint64_t>(it - stack.rbegin())];
      stack.erase(std::next(it).base());
    }
    stack.push_back(b);
  }
  return h;
}

/// O(N log N): the distance of an access at time t to a block last seen at
/// t0 is the number of live last-access timestamps in (t0, t).
inline ReuseHistogram histogram_fast(const BlockTrace& trace) {
  ReuseHistogram h;
  h.block_size_bytes = trace.line_size_bytes;
  h.total_accesses = trace.blocks.size();
  const std::size_t n = trace.blocks.size();
  Fenwick<std::int32_t> live(n);
  std::unordered_map<BlockId, std::size_t> last_seen;
  last_seen.reserve(trace.num_distinct_blocks ? trace.num_distinct_blocks : n / 4 + 16);

  // Distances are small integers most of the time; tally densely, then fold
  // into the sparse map.
  std::vector<std::uint64_t> dense(std::min<std::size_t>(n, 1 << 20), 0);
  for (std::size_t t = 0; t < n; ++t) {
    auto [it, inserted] = last_seen.try_emplace(trace.blocks[t], t);
    if (inserted) {
      ++h.cold_count;
    } else {
      const std::size_t prev = it->second;
      const auto d = static_cast<std::uint64_t>(live.range(prev + 1, t));
      if (d < dense.size()) ++dense[d];
      else ++h.counts[d];
      live.add(prev, -1);
      it->second = t;
    }
    live.add(t, 1);
  }
  for (std::size_t d = 0; d < dense.size(); ++d)
    if (dense[d] != 0) h.counts[d] += dense[d];
  return h;
}

inline NormalizedHistogram normalize(const ReuseHistogram& hist) {
  NormalizedHistogram out;
  out.cold_count = hist.cold_count;
  out.total_accesses = hist.total_accesses;
  out.block_size_bytes = hist.block_size_bytes;
  for (auto [d, c] : hist.counts) out.counts.emplace(d * hist.block_size_bytes, c);
  return out;
}

/// Misses of a fully-associative LRU cache holding `capacity_blocks` blocks:
/// every cold access plus every access with distance >= capacity.
inline std::uint64_t misses_beyond(const ReuseHistogram& hist, std::uint64_t capacity_blocks) {
  std::uint64_t m = hist.cold_count;
  for (auto it = hist.counts.lower_bound(capacity_blocks); it != hist.counts.end(); ++it) m += it->second;
  return m;
}

inline std::uint64_t hits_within(const ReuseHistogram& hist, std::uint64_t capacity_blocks) {
  return hist.total_accesses - misses_beyond(hist, capacity_blocks);
}

// Miss-count lookups for repeated queries against one histogram: sorted
// keys with suffix sums, O(log K) per query.
class MissCurve {
 public:
  explicit MissCurve(const ReuseHistogram& hist) : cold_(hist.cold_count), total_(hist.total_accesses) {
    keys_.reserve(hist.counts.size());
    suffix_.assign(hist.counts.size() + 1, 0);
    for (auto [d, c] : hist.counts) keys_.push_back(d);
    std::size_t i = hist.counts.size();
    for (auto it = hist.counts.rbegin(); it != hist.counts.rend(); ++it, --i) suffix_[i - 1] = suffix_[i] + it->second;
  }

  std::uint64_t misses_beyond(std::uint64_t capacity_blocks) const {
    auto idx = static_cast<std::size_t>(std::lower_bound(keys_.begin(), keys_.end(), capacity_blocks) - keys_.begin());
    return cold_ + suffix_[idx];
  }

  std::uint64_t total_accesses() const { return total_; }

 private:
  std::vector<std::uint64_t> keys_;
  std::vector<std::uint64_t> suffix_;
  std::uint64_t cold_;
  std::uint64_t total_;
};

// ---- CSV interchange -------------------------------------------------------
//
//   distance,count
//   <d>,<n>        one row per finite distance, ascending
//   cold,<n>
//   total,<n>
//   block_size,<bytes>

inline void write_histogram_csv(std::ostream& out, const ReuseHistogram& hist) {
  out << "distance,count\n";
  for (auto [d, c] : hist.counts) out << d << ',' << c << '\n';
  out << "cold," << hist.cold_count << '\n';
  out << "total," << hist.total_accesses << '\n';
  out << "block_size," << hist.block_size_bytes << '\n';
}

inline ReuseHistogram read_histogram_csv(std::istream& in) {
  ReuseHistogram h;
  std::string line;
  std::size_t lineno = 0;
  bool have_total = false, have_block = false;
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("histogram csv line " + std::to_string(lineno) + ": " + why);
  };
  auto parse_u64 = [&](const std::string& s) {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      fail("bad integer '" + s + "'");
    }
    if (used != s.size()) fail("bad integer '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "distance,count") fail("expected header 'distance,count'");
      continue;
    }
    auto comma = line.find(',');
    if (comma == std::string::npos) fail("expected two fields");
    std::string key = line.substr(0, comma), value = line.substr(comma + 1);
    if (key == "cold") {
      h.cold_count = parse_u64(value);
    } else if (key == "total") {
      h.total_accesses = parse_u64(value);
      have_total = true;
    } else if (key == "block_size") {
      h.block_size_bytes = parse_u64(value);
      have_block = true;
    } else {
      const auto d = parse_u64(key);
      if (!h.counts.emplace(d, parse_u64(value)).second) fail("duplicate distance " + key);
    }
  }
  if (lineno == 0) throw std::runtime_error("histogram csv is empty");
  if (!have_total) throw std::runtime_error("histogram csv missing total row");
  if (!have_block || !is_power_of_two(h.block_size_bytes))
    throw std::runtime_error("histogram csv missing or invalid block_size row");
  std::uint64_t sum = h.cold_count;
  for (auto [d, c] : h.counts) sum += c;
  if (sum != h.total_accesses) throw std::runtime_error("histogram csv counts do not sum to total");
  return h;
}

/// Log2-bucketed view for display: bucket k covers distances [2^k - 1, 2^(k+1) - 1),
/// i.e. bucket 0 is distance 0, bucket 1 is distances 1-2, and so on.
struct Log2Bucket {
  std::uint64_t lo = 0;  // inclusive
  std::uint64_t hi = 0;  // exclusive
  std::uint64_t count = 0;
};

inline std::vector<Log2Bucket> log2_buckets(const ReuseHistogram& hist) {
  std::vector<Log2Bucket> out;
  for (auto [d, c] : hist.counts) {
    const auto k = static_cast<std::size_t>(std::bit_width(d + 1) - 1);
    while (out.size() <= k) {
      const std::uint64_t j = out.size();
      out.push_back({(std::uint64_t{1} << j) - 1, (std::uint64_t{1} << (j + 1)) - 1, 0});
    }
    out[k].count += c;
  }
  return out;
}

}  // namespace rdcache
