#pragma once

// Memory-access traces: loading, saving, block mapping and synthetic
// generators with known reuse structure.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "rdcache/fenwick.hpp"

namespace rdcache {

using Address = std::uint64_t;
using BlockId = std::uint64_t;

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TraceFormat { text, binary };

/// Byte-address access stream in program order.
struct MemoryTrace {
  std::vector<Address> accesses;
  std::string source;

  std::size_t size() const { return accesses.size(); }
  bool operator==(const MemoryTrace& other) const { return accesses == other.accesses; }
};

/// Access stream expressed in cache-block identifiers.
struct BlockTrace {
  std::vector<BlockId> blocks;
  std::uint64_t line_size_bytes = 1;
  std::size_t num_distinct_blocks = 0;
  std::string source;

  std::size_t size() const { return blocks.size(); }
};

inline bool is_power_of_two(std::uint64_t v) { return v != 0 && std::has_single_bit(v); }

inline std::size_t count_distinct(const std::vector<BlockId>& blocks) {
  std::unordered_set<BlockId> seen;
  seen.reserve(blocks.size() / 4 + 16);
  for (BlockId b : blocks) seen.insert(b);
  return seen.size();
}

inline BlockTrace make_block_trace(std::vector<BlockId> blocks, std::uint64_t line_size_bytes,
                                   std::string source) {
  BlockTrace t;
  t.num_distinct_blocks = count_distinct(blocks);
  t.blocks = std::move(blocks);
  t.line_size_bytes = line_size_bytes;
  t.source = std::move(source);
  return t;
}

namespace detail {

inline bool is_access_type_token(std::string_view tok) {
  if (tok.size() != 1) return false;
  switch (tok[0]) {
    case 'R': case 'W': case 'r': case 'w':
    case 'L': case 'S': case 'M': case 'I':
      return true;
    default:
      return false;
  }
}

// Accepts "40", "0x40", "0X40"; a trailing ",size" (lackey style) is ignored.
inline bool parse_hex(std::string_view tok, Address& out) {
  if (auto comma = tok.find(','); comma != std::string_view::npos) tok = tok.substr(0, comma);
  if (tok.size() >= 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X')) tok.remove_prefix(2);
  if (tok.empty() || tok.size() > 16) return false;
  Address v = 0;
  for (char c : tok) {
    unsigned digit;
    if (c >= '0' && c <= '9') digit = c - '0';
    else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
    else return false;
    v = (v << 4) | digit;
  }
  out = v;
  return true;
}

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

// Draws uniformly from [0, bound) by rejection; bit-reproducible across
// standard libraries, unlike std::uniform_int_distribution.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

}  // namespace detail

/// Parses one text-trace line. Returns false for blank and comment lines.
/// An optional access-type token (R/W/L/S/M/I) before or after the address
/// is accepted and dropped.
inline bool parse_trace_line(std::string_view line, Address& out) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  line = detail::trim(line);
  if (line.empty()) return false;

  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    auto b = line.find_first_not_of(" \t", pos);
    if (b == std::string_view::npos) break;
    auto e = line.find_first_of(" \t", b);
    if (e == std::string_view::npos) e = line.size();
    tokens.push_back(line.substr(b, e - b));
    pos = e;
  }

  std::string_view addr_tok;
  if (tokens.size() == 1) {
    addr_tok = tokens[0];
  } else if (tokens.size() == 2 && detail::is_access_type_token(tokens[0])) {
    addr_tok = tokens[1];
  } else if (tokens.size() == 2 && detail::is_access_type_token(tokens[1])) {
    addr_tok = tokens[0];
  } else {
    throw TraceError("unrecognized trace line");
  }
  if (!detail::parse_hex(addr_tok, out)) throw TraceError("malformed address '" + std::string(addr_tok) + "'");
  return true;
}

inline MemoryTrace load_trace(const std::filesystem::path& path, TraceFormat format) {
  MemoryTrace trace;
  trace.source = path.string();

  if (format == TraceFormat::binary) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw TraceError("cannot open trace file: " + path.string());
    const auto bytes = static_cast<std::uint64_t>(in.tellg());
    if (bytes % 8 != 0)
      throw TraceError("binary trace length " + std::to_string(bytes) + " is not a multiple of 8: " +
                       path.string());
    in.seekg(0);
    std::vector<unsigned char> raw(bytes);
    if (bytes > 0 && !in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes)))
      throw TraceError("read failed: " + path.string());
    trace.accesses.resize(bytes / 8);
    for (std::size_t i = 0; i < trace.accesses.size(); ++i) {
      Address v = 0;
      for (int k = 7; k >= 0; --k) v = (v << 8) | raw[i * 8 + k];
      trace.accesses[i] = v;
    }
    return trace;
  }

  std::ifstream in(path);
  if (!in) throw TraceError("cannot open trace file: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    Address a;
    try {
      if (parse_trace_line(line, a)) trace.accesses.push_back(a);
    } catch (const TraceError& e) {
      throw TraceError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (in.bad()) throw TraceError("read failed: " + path.string());
  return trace;
}

inline void save_trace(const MemoryTrace& trace, const std::filesystem::path& path, TraceFormat format) {
  if (format == TraceFormat::binary) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw TraceError("cannot write trace file: " + path.string());
    std::vector<unsigned char> raw(trace.accesses.size() * 8);
    for (std::size_t i = 0; i < trace.accesses.size(); ++i) {
      Address v = trace.accesses[i];
      for (int k = 0; k < 8; ++k) {
        raw[i * 8 + k] = static_cast<unsigned char>(v & 0xff);
        v >>= 8;
      }
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw TraceError("write failed: " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw TraceError("cannot write trace file: " + path.string());
  std::ostringstream buf;
  buf << std::hex;
  for (Address a : trace.accesses) buf << "0x" << a << '\n';
  out << buf.str();
  if (!out) throw TraceError("write failed: " + path.string());
}

inline BlockTrace to_blocks(const MemoryTrace& trace, std::uint64_t line_size_bytes) {
  if (!is_power_of_two(line_size_bytes))
    throw std::invalid_argument("line size must be a power of two, got " + std::to_string(line_size_bytes));
  const int shift = std::countr_zero(line_size_bytes);
  std::vector<BlockId> blocks;
  blocks.reserve(trace.accesses.size());
  for (Address a : trace.accesses) blocks.push_back(a >> shift);
  return make_block_trace(std::move(blocks), line_size_bytes, trace.source);
}

/// Reinterprets block ids as byte addresses of the block's first byte.
inline MemoryTrace to_addresses(const BlockTrace& trace) {
  MemoryTrace out;
  out.source = trace.source;
  out.accesses.reserve(trace.blocks.size());
  for (BlockId b : trace.blocks) out.accesses.push_back(b * trace.line_size_bytes);
  return out;
}

/// Blocks 0..D-1 in order, repeated `sweeps` times. Every reuse has distance D-1.
inline BlockTrace gen_cyclic(std::uint64_t working_set, std::uint64_t sweeps) {
  if (working_set < 1 || sweeps < 1) throw std::invalid_argument("gen_cyclic: working set and sweeps must be >= 1");
  std::vector<BlockId> blocks;
  blocks.reserve(working_set * sweeps);
  for (std::uint64_t s = 0; s < sweeps; ++s)
    for (std::uint64_t b = 0; b < working_set; ++b) blocks.push_back(b);
  return make_block_trace(std::move(blocks), 1,
                          "cyclic(d=" + std::to_string(working_set) + ",sweeps=" + std::to_string(sweeps) + ")");
}

/// Touches D fresh blocks, then re-accesses the block at a uniformly drawn
/// LRU-stack depth for every remaining access. The non-cold reuse-distance
/// histogram is uniform over [0, D).
inline BlockTrace gen_uniform_stack(std::uint64_t depth, std::uint64_t n, std::uint64_t seed) {
  if (depth < 1 || n < depth) throw std::invalid_argument("gen_uniform_stack: need depth >= 1 and n >= depth");
  std::mt19937_64 rng(seed);
  std::vector<BlockId> blocks;
  blocks.reserve(n);

  // Timestamps of each block's latest access are marked in a Fenwick tree;
  // the block at stack depth d holds the (D - d)-th smallest live timestamp.
  Fenwick<std::int32_t> live(n);
  std::vector<BlockId> block_at(n);
  for (std::uint64_t t = 0; t < depth; ++t) {
    blocks.push_back(t);
    block_at[t] = t;
    live.add(t, 1);
  }
  for (std::uint64_t t = depth; t < n; ++t) {
    const std::uint64_t d = detail::uniform_below(rng, depth);
    const std::size_t ts = live.find_kth(static_cast<std::int32_t>(depth - d));
    const BlockId b = block_at[ts];
    live.add(ts, -1);
    live.add(t, 1);
    block_at[t] = b;
    blocks.push_back(b);
  }
  return make_block_trace(std::move(blocks), 1,
                          "uniform_stack(d=" + std::to_string(depth) + ",n=" + std::to_string(n) +
                              ",seed=" + std::to_string(seed) + ")");
}

/// n independent uniform draws from [0, U).
inline BlockTrace gen_random(std::uint64_t universe, std::uint64_t n, std::uint64_t seed) {
  if (universe < 1) throw std::invalid_argument("gen_random: universe must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<BlockId> blocks;
  blocks.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) blocks.push_back(detail::uniform_below(rng, universe));
  return make_block_trace(std::move(blocks), 1,
                          "random(universe=" + std::to_string(universe) + ",n=" + std::to_string(n) +
                              ",seed=" + std::to_string(seed) + ")");
}

}  // namespace rdcache
