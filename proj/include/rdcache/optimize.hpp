#pragma once

// Scanning search over power-of-two cache-size grids.
//
// Every size combination whose exponents strictly increase across levels is
// evaluated; miss rates come from the histogram estimator (or any other
// per-configuration miss source). The full table is kept so callers can
// audit the winner, export it, or plot it.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdcache/estimate.hpp"

namespace rdcache {

enum class Objective { min_cost, min_power, min_delay };

inline const char* to_string(Objective o) {
  switch (o) {
    case Objective::min_cost: return "min-cost";
    case Objective::min_power: return "min-power";
    case Objective::min_delay: return "min-delay";
  }
  return "?";
}

inline Objective parse_objective(const std::string& s) {
  if (s == "min-cost") return Objective::min_cost;
  if (s == "min-power") return Objective::min_power;
  if (s == "min-delay") return Objective::min_delay;
  throw std::invalid_argument("unknown objective '" + s + "' (expected min-cost|min-power|min-delay)");
}

struct ExponentRange {
  int lo = 0;
  int hi = 0;
};

/// Sizes 2^e bytes per level; exponents must strictly increase with level.
struct SizeGrid {
  std::vector<ExponentRange> levels;

  /// The three-level range set 2^10..2^23, 2^11..2^24, 2^12..2^25.
  static SizeGrid three_level_default() { return SizeGrid{{{10, 23}, {11, 24}, {12, 25}}}; }
};

/// All exponent tuples inside the ranges with e_1 < e_2 < ... < e_n, in
/// lexicographic order.
inline std::vector<std::vector<int>> enumerate_grid(const SizeGrid& grid) {
  if (grid.levels.empty()) throw std::invalid_argument("size grid has no levels");
  for (const auto& r : grid.levels) {
    if (r.lo > r.hi) throw std::invalid_argument("size grid range is empty (lo > hi)");
    if (r.lo < 0 || r.hi > 62) throw std::invalid_argument("size grid exponent out of range [0, 62]");
  }
  std::vector<std::vector<int>> out;
  std::vector<int> cur(grid.levels.size());
  std::function<void(std::size_t, int)> rec = [&](std::size_t level, int min_exp) {
    if (level == grid.levels.size()) {
      out.push_back(cur);
      return;
    }
    const auto& r = grid.levels[level];
    for (int e = std::max(r.lo, min_exp); e <= r.hi; ++e) {
      cur[level] = e;
      rec(level + 1, e + 1);
    }
  };
  rec(0, grid.levels.front().lo);
  return out;
}

inline std::vector<std::uint64_t> sizes_of(const std::vector<int>& exponents) {
  std::vector<std::uint64_t> s;
  s.reserve(exponents.size());
  for (int e : exponents) s.push_back(std::uint64_t{1} << e);
  return s;
}

/// Per-level cost c_i(x). Quadratic a_i * x^2 (x in bytes) unless a per-size
/// table is supplied for that level.
struct CostModel {
  std::vector<double> coefficients;
  std::vector<std::map<std::uint64_t, double>> tables;

  bool empty() const { return coefficients.empty() && tables.empty(); }

  double level_cost(std::size_t level, std::uint64_t size_bytes) const {
    if (level < tables.size() && !tables[level].empty()) {
      auto it = tables[level].find(size_bytes);
      if (it == tables[level].end())
        throw std::invalid_argument("cost table for level " + std::to_string(level + 1) + " has no entry for size " +
                                    std::to_string(size_bytes));
      return it->second;
    }
    if (level >= coefficients.size())
      throw std::invalid_argument("no cost coefficient for level " + std::to_string(level + 1));
    const double x = static_cast<double>(size_bytes);
    return coefficients[level] * x * x;
  }

  double total(const std::vector<std::uint64_t>& sizes) const {
    double c = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) c += level_cost(i, sizes[i]);
    return c;
  }

  void validate(std::size_t levels) const {
    for (std::size_t i = 0; i < levels; ++i) {
      const bool has_table = i < tables.size() && !tables[i].empty();
      if (!has_table) {
        if (i >= coefficients.size()) throw std::invalid_argument("cost model does not cover level " + std::to_string(i + 1));
        if (!(coefficients[i] > 0)) throw std::invalid_argument("cost coefficients must be positive");
        continue;
      }
      double prev = -INFINITY;
      for (auto [size, cost] : tables[i]) {
        if (!(cost > prev)) throw std::invalid_argument("cost table must increase with size");
        prev = cost;
      }
    }
  }
};

/// P = sum_i [static_i * x_i + dynamic_i * accesses_i] + memory * misses_n,
/// with accesses and misses taken per CPU access (level 1 sees every access,
/// level i sees level i-1's misses).
struct PowerModel {
  std::vector<double> static_per_byte;
  std::vector<double> dynamic_per_access;
  double memory_per_access = 0.0;

  bool empty() const { return static_per_byte.empty() && dynamic_per_access.empty() && memory_per_access == 0.0; }

  double total(const std::vector<std::uint64_t>& sizes, const std::vector<double>& miss_rates) const {
    double p = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const double accesses = i == 0 ? 1.0 : miss_rates[i - 1];
      if (i < static_per_byte.size()) p += static_per_byte[i] * static_cast<double>(sizes[i]);
      if (i < dynamic_per_access.size()) p += dynamic_per_access[i] * accesses;
    }
    if (!miss_rates.empty()) p += memory_per_access * miss_rates.back();
    return p;
  }

  void validate(std::size_t levels) const {
    if (static_per_byte.size() != levels || dynamic_per_access.size() != levels)
      throw std::invalid_argument("power model must give static and dynamic coefficients for every level");
    for (double v : static_per_byte)
      if (v < 0) throw std::invalid_argument("power coefficients must be non-negative");
    for (double v : dynamic_per_access)
      if (v < 0) throw std::invalid_argument("power coefficients must be non-negative");
    if (memory_per_access < 0) throw std::invalid_argument("power coefficients must be non-negative");
  }
};

struct ObjectiveSpec {
  Objective mode = Objective::min_cost;
  double cpi_base = 1.0;
  std::vector<double> miss_penalty;   // m_i, cycles
  std::optional<double> delay_bound;  // T (min-cost, min-power)
  std::optional<double> cost_bound;   // C (min-delay)
  CostModel cost;
  PowerModel power;

  void validate(std::size_t levels) const {
    if (miss_penalty.size() != levels)
      throw std::invalid_argument("need one miss penalty per level (" + std::to_string(levels) + ")");
    for (double m : miss_penalty)
      if (!(m > 0)) throw std::invalid_argument("miss penalties must be positive");
    if (mode == Objective::min_delay) {
      if (!cost_bound) throw std::invalid_argument("min-delay needs a cost bound");
      if (delay_bound) throw std::invalid_argument("min-delay takes a cost bound, not a delay bound");
      cost.validate(levels);
    } else {
      if (!delay_bound) throw std::invalid_argument(std::string(to_string(mode)) + " needs a delay bound");
      if (cost_bound) throw std::invalid_argument(std::string(to_string(mode)) + " takes a delay bound, not a cost bound");
      if (mode == Objective::min_cost) cost.validate(levels);
      else power.validate(levels);
    }
  }
};

/// t = CPI_base + sum_i m_i * miss_rate_i
inline double delay(const std::vector<double>& miss_rates, const ObjectiveSpec& spec) {
  double t = spec.cpi_base;
  for (std::size_t i = 0; i < miss_rates.size(); ++i) t += spec.miss_penalty[i] * miss_rates[i];
  return t;
}

inline std::vector<double> miss_rates_of(const LevelEstimate& est) {
  std::vector<double> r;
  r.reserve(est.levels.size());
  for (const auto& l : est.levels) r.push_back(l.miss_rate);
  return r;
}

inline double delay(const ReuseHistogram& hist, const HierarchyConfig& config, const ObjectiveSpec& spec) {
  return delay(miss_rates_of(estimate(hist, config)), spec);
}

struct ScanRow {
  std::vector<int> exponents;
  std::vector<std::uint64_t> sizes;
  std::vector<double> miss_rates;
  double delay = 0.0;
  double cost = 0.0;
  double power = 0.0;
  bool feasible = false;
};

struct OptimizationResult {
  Objective mode = Objective::min_cost;
  std::vector<ScanRow> table;
  std::optional<std::size_t> best;  // index into table
  double objective_value = NAN;

  bool feasible() const { return best.has_value(); }
  const ScanRow& winner() const { return table.at(*best); }
};

inline double objective_of(const ScanRow& row, Objective mode) {
  switch (mode) {
    case Objective::min_cost: return row.cost;
    case Objective::min_power: return row.power;
    case Objective::min_delay: return row.delay;
  }
  return NAN;
}

inline bool is_feasible(const ScanRow& row, const ObjectiveSpec& spec) {
  return spec.mode == Objective::min_delay ? row.cost <= *spec.cost_bound : row.delay <= *spec.delay_bound;
}

inline std::uint64_t total_size(const ScanRow& row) {
  std::uint64_t s = 0;
  for (auto x : row.sizes) s += x;
  return s;
}

/// True if a should win over b: lower objective, then smaller total size,
/// then lexicographically smaller size tuple.
inline bool better_than(const ScanRow& a, const ScanRow& b, Objective mode) {
  const double oa = objective_of(a, mode), ob = objective_of(b, mode);
  if (oa != ob) return oa < ob;
  const auto sa = total_size(a), sb = total_size(b);
  if (sa != sb) return sa < sb;
  return a.sizes < b.sizes;
}

/// Scans every grid point. `miss_source(config)` returns the per-level
/// estimate for one hierarchy; config carries the sizes, line size and
/// inclusion policy.
template <typename MissSource>
OptimizationResult scan_search_with(MissSource&& miss_source, const SizeGrid& grid, const ObjectiveSpec& spec,
                                    std::uint64_t line_size_bytes, Inclusion inclusion) {
  spec.validate(grid.levels.size());
  OptimizationResult result;
  result.mode = spec.mode;
  const bool want_cost = !spec.cost.empty();
  const bool want_power = !spec.power.empty();
  for (auto& exps : enumerate_grid(grid)) {
    ScanRow row;
    row.sizes = sizes_of(exps);
    row.exponents = std::move(exps);
    HierarchyConfig config{row.sizes, line_size_bytes, inclusion};
    row.miss_rates = miss_rates_of(miss_source(config));
    row.delay = delay(row.miss_rates, spec);
    row.cost = want_cost ? spec.cost.total(row.sizes) : 0.0;
    row.power = want_power ? spec.power.total(row.sizes, row.miss_rates) : 0.0;
    row.feasible = is_feasible(row, spec);
    result.table.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < result.table.size(); ++i) {
    const auto& row = result.table[i];
    if (!row.feasible) continue;
    if (!result.best || better_than(row, result.table[*result.best], spec.mode)) result.best = i;
  }
  if (result.best) result.objective_value = objective_of(result.table[*result.best], spec.mode);
  return result;
}

inline OptimizationResult scan_search(const ReuseHistogram& hist, const SizeGrid& grid, const ObjectiveSpec& spec,
                                      Inclusion inclusion) {
  const MissCurve curve(hist);
  for (const auto& r : grid.levels)
    if ((std::uint64_t{1} << r.lo) < hist.block_size_bytes)
      throw std::invalid_argument("grid sizes must be at least the histogram block size");
  return scan_search_with([&](const HierarchyConfig& c) { return estimate(curve, c); }, grid, spec,
                          hist.block_size_bytes, inclusion);
}

// ---- export ----------------------------------------------------------------

inline void write_scan_header(std::ostream& out, std::size_t levels) {
  for (std::size_t i = 0; i < levels; ++i) out << 'x' << (i + 1) << ',';
  for (std::size_t i = 0; i < levels; ++i) out << "miss" << (i + 1) << ',';
  out << "t,cost,power,feasible\n";
}

inline void write_scan_row(std::ostream& out, const ScanRow& row) {
  const auto old_prec = out.precision(12);
  for (auto s : row.sizes) out << s << ',';
  for (double m : row.miss_rates) out << m << ',';
  out << row.delay << ',' << row.cost << ',' << row.power << ',' << (row.feasible ? 1 : 0) << '\n';
  out.precision(old_prec);
}

inline void write_scan_csv(std::ostream& out, const OptimizationResult& r) {
  const std::size_t levels = r.table.empty() ? 0 : r.table.front().sizes.size();
  write_scan_header(out, levels);
  for (const auto& row : r.table) write_scan_row(out, row);
}

/// Single-row summary of the winner (header only when infeasible).
inline void write_winner_csv(std::ostream& out, const OptimizationResult& r, std::size_t levels) {
  write_scan_header(out, levels);
  if (r.best) write_scan_row(out, r.winner());
}

inline nlohmann::json row_to_json(const ScanRow& row) {
  nlohmann::json j;
  for (std::size_t i = 0; i < row.sizes.size(); ++i) j["x" + std::to_string(i + 1)] = row.sizes[i];
  for (std::size_t i = 0; i < row.miss_rates.size(); ++i) j["miss" + std::to_string(i + 1)] = row.miss_rates[i];
  j["t"] = row.delay;
  j["cost"] = row.cost;
  j["power"] = row.power;
  j["feasible"] = row.feasible;
  return j;
}

inline nlohmann::json result_to_json(const OptimizationResult& r) {
  nlohmann::json j;
  j["mode"] = to_string(r.mode);
  j["feasible"] = r.feasible();
  j["winner"] = r.best ? row_to_json(r.winner()) : nlohmann::json(nullptr);
  j["objective"] = r.best ? nlohmann::json(r.objective_value) : nlohmann::json(nullptr);
  auto& table = j["table"] = nlohmann::json::array();
  for (const auto& row : r.table) table.push_back(row_to_json(row));
  return j;
}

}  // namespace rdcache
