// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. All tolerances are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rdcache/rdcache.hpp"
#include "scan_oracle.hpp"

using namespace rdcache;

namespace {

constexpr std::size_t kMinMattsonTraces = 50;
constexpr int kMaxCapacityExponent = 16;
constexpr double kInclusiveAvgErrorBound = 0.10;
constexpr double kOneLevelScanTolerance = 1e-4;  // times D
constexpr double kClosedFormResidual = 1e-10;
constexpr double kGridCostSlackRel = 1e-9;
constexpr int kRandomAnalyticPoints = 6;
constexpr double kPowerOfTwoSteps = 1.0;
constexpr double kAssocDisparityBound = 0.10;
constexpr double kSpeedupFloor = 20.0;
constexpr std::size_t kDefaultGridCount = 560;
constexpr int kOptimizerInstances = 10;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BlockTrace with_line(BlockTrace t, std::uint64_t line) {
  t.line_size_bytes = line;
  return t;
}

// Shared synthetic suite for the histogram checks: a few large members plus
// randomly parameterized small ones.
const std::vector<BlockTrace>& mattson_suite() {
  static const std::vector<BlockTrace> suite = [] {
    std::vector<BlockTrace> s;
    s.push_back(gen_random(4096, 1'000'000, 101));
    s.push_back(gen_uniform_stack(4096, 1'000'000, 102));
    s.push_back(gen_cyclic(1024, 977));
    s.push_back(gen_random(65536, 100'000, 103));
    s.push_back(gen_uniform_stack(65536, 150'000, 104));
    s.push_back(gen_cyclic(65536, 2));
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 16; ++i) {
      const std::uint64_t u = std::uint64_t{1} << (rng() % 17);
      s.push_back(gen_random(u, 1000 + rng() % 50'000, rng()));
      const std::uint64_t d = std::uint64_t{1} << (rng() % 13);
      s.push_back(gen_uniform_stack(d, d + rng() % 40'000, rng()));
      s.push_back(gen_cyclic(1 + rng() % 5000, 1 + rng() % 20));
    }
    return s;
  }();
  return suite;
}

const std::vector<ReuseHistogram>& mattson_histograms() {
  static const std::vector<ReuseHistogram> hs = [] {
    std::vector<ReuseHistogram> out;
    for (const auto& t : mattson_suite()) out.push_back(histogram_fast(t));
    return out;
  }();
  return hs;
}

Outcome mattson_equivalence() {
  const auto& suite = mattson_suite();
  std::uint64_t checks = 0, mismatches = 0;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    for (int e = 0; e <= kMaxCapacityExponent; ++e) {
      const std::uint64_t cap = std::uint64_t{1} << e;
      SimConfig c;
      c.line_size_bytes = 1;
      c.levels = {{cap, 0, Replacement::lru}};
      const auto r = simulate(suite[i], c);
      ++checks;
      if (r.levels[0].misses != misses_beyond(mattson_histograms()[i], cap)) ++mismatches;
    }
  }
  std::ostringstream d;
  d << suite.size() << " traces x " << (kMaxCapacityExponent + 1) << " capacities, " << checks << " checks, "
    << mismatches << " mismatches (tolerance 0)";
  return {suite.size() >= kMinMattsonTraces && mismatches == 0, d.str()};
}

Outcome engine_equivalence() {
  const auto& suite = mattson_suite();
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < suite.size(); ++i)
    if (!(histogram_naive(suite[i]) == mattson_histograms()[i])) ++mismatches;
  std::ostringstream d;
  d << suite.size() << " traces, " << mismatches << " key-for-key mismatches (tolerance 0)";
  return {mismatches == 0, d.str()};
}

// Reduced grid: 16-byte lines, exponents 4..12 split across levels.
constexpr std::uint64_t kReducedLine = 16;
const std::vector<SizeGrid>& reduced_grids() {
  static const std::vector<SizeGrid> g{SizeGrid{{{4, 11}, {5, 12}}}, SizeGrid{{{4, 10}, {5, 11}, {6, 12}}}};
  return g;
}

const std::vector<BlockTrace>& multilevel_suite() {
  static const std::vector<BlockTrace> s{
      with_line(gen_random(512, 50'000, 201), kReducedLine),
      with_line(gen_random(2048, 50'000, 202), kReducedLine),
      with_line(gen_uniform_stack(300, 50'000, 203), kReducedLine),
      with_line(gen_uniform_stack(1024, 50'000, 204), kReducedLine),
      with_line(gen_cyclic(200, 250), kReducedLine),
  };
  return s;
}

struct SweepStats {
  std::size_t configs = 0;
  std::size_t level_checks = 0;
  std::size_t mismatches = 0;
  double error_sum = 0.0;
  double error_max = 0.0;
  bool all_finite = true;
};

SweepStats sweep(Inclusion inclusion, bool inheritance) {
  SweepStats st;
  for (const auto& t : multilevel_suite()) {
    const MissCurve curve(histogram_fast(t));
    for (const auto& grid : reduced_grids()) {
      for (const auto& exps : enumerate_grid(grid)) {
        const HierarchyConfig h{sizes_of(exps), kReducedLine, inclusion};
        const auto est = estimate(curve, h);
        const auto sim = simulate(t, SimConfig::fully_associative(h, inheritance));
        ++st.configs;
        for (std::size_t i = 0; i < exps.size(); ++i) {
          const auto e = est.levels[i].miss_count, s = sim.levels[i].misses;
          ++st.level_checks;
          if (e != s) ++st.mismatches;
          const double rel = s == 0 ? (e == 0 ? 0.0 : INFINITY)
                                    : std::abs(static_cast<double>(e) - static_cast<double>(s)) / static_cast<double>(s);
          if (!std::isfinite(rel)) st.all_finite = false;
          st.error_sum += rel;
          st.error_max = std::max(st.error_max, rel);
        }
      }
    }
  }
  return st;
}

Outcome exclusive_exactness() {
  const auto st = sweep(Inclusion::exclusive, false);
  std::ostringstream d;
  d << multilevel_suite().size() << " traces, " << st.configs << " 2/3-level configs, " << st.level_checks
    << " level counts, " << st.mismatches << " mismatches (tolerance 0)";
  return {st.mismatches == 0 && st.configs > 0, d.str()};
}

Outcome inheritance_exactness() {
  const auto st = sweep(Inclusion::inclusive, true);
  std::ostringstream d;
  d << multilevel_suite().size() << " traces, " << st.configs << " 2/3-level configs, " << st.level_checks
    << " level counts, " << st.mismatches << " mismatches (tolerance 0)";
  return {st.mismatches == 0 && st.configs > 0, d.str()};
}

Outcome inclusive_error_bound() {
  const auto st = sweep(Inclusion::inclusive, false);
  const double avg = st.error_sum / static_cast<double>(st.level_checks);
  std::ostringstream d;
  d << st.level_checks << " level counts, average relative error " << avg << ", max " << st.error_max << ", "
    << st.mismatches << " inexact (bound: average <= " << kInclusiveAvgErrorBound << ", all finite)";
  return {st.all_finite && avg <= kInclusiveAvgErrorBound, d.str()};
}

Outcome grid_count() {
  const auto n = enumerate_grid(SizeGrid::three_level_default()).size();
  return {n == kDefaultGridCount, std::to_string(n) + " tuples (expected " + std::to_string(kDefaultGridCount) + ")"};
}

// A bound strictly between two neighbouring values of the sorted column, so
// that no row sits exactly on it.
double bound_between(std::vector<double> values, double quantile) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  const std::size_t k = std::min(values.size() - 2, static_cast<std::size_t>(quantile * (values.size() - 1)));
  return 0.5 * (values[k] + values[k + 1]);
}

Outcome scan_optimality() {
  std::mt19937_64 rng(7070);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int instances = 0, disagreements = 0, row_errors = 0, feasible_winners = 0;
  for (int i = 0; i < kOptimizerInstances; ++i) {
    const std::uint64_t u = std::uint64_t{1} << (10 + rng() % 7);
    const auto blocks = (i % 2 == 0) ? gen_random(u, 200'000, rng()) : gen_uniform_stack(u, 200'000, rng());
    auto hist = histogram_fast(blocks);
    hist.block_size_bytes = 64;

    ObjectiveSpec base;
    base.cpi_base = 1.0;
    const double m1 = 2 + 18 * unit(rng);
    const double m2 = m1 * (5 + 10 * unit(rng));
    base.miss_penalty = {m1, m2, m2 * (5 + 10 * unit(rng))};
    const double a3 = 1 + unit(rng);
    const double a2 = a3 * (1 + 3 * unit(rng));
    base.cost.coefficients = {a2 * (1 + 3 * unit(rng)), a2, a3};
    base.power.static_per_byte = {1e-4 * (1 + unit(rng)), 5e-5 * (1 + unit(rng)), 1e-5 * (1 + unit(rng))};
    base.power.dynamic_per_access = {1 + unit(rng), 5 + 5 * unit(rng), 20 + 20 * unit(rng)};
    base.power.memory_per_access = 100 + 100 * unit(rng);

    // Unconstrained pass to place the bounds inside the table's range.
    ObjectiveSpec probe = base;
    probe.mode = Objective::min_cost;
    probe.delay_bound = INFINITY;
    const auto all = scan_search(hist, SizeGrid::three_level_default(), probe, Inclusion::exclusive);
    std::vector<double> delays, costs;
    for (const auto& r : all.table) {
      delays.push_back(r.delay);
      costs.push_back(r.cost);
    }
    const double q = 0.2 + 0.6 * unit(rng);

    for (auto mode : {Objective::min_cost, Objective::min_power, Objective::min_delay}) {
      ObjectiveSpec spec = base;
      spec.mode = mode;
      if (mode == Objective::min_delay) spec.cost_bound = bound_between(costs, q);
      else spec.delay_bound = bound_between(delays, q);
      const auto inclusion = (i % 3 == 0) ? Inclusion::inclusive : Inclusion::exclusive;
      const auto result = scan_search(hist, SizeGrid::three_level_default(), spec, inclusion);
      ++instances;
      for (const auto& row : result.table) {
        const auto chk = oracle::recompute_row(hist, row.sizes, inclusion, spec);
        const bool same = std::abs(row.delay - chk.delay) <= 1e-12 * chk.delay && row.cost == chk.cost &&
                          std::abs(row.power - chk.power) <= 1e-12 * std::max(1.0, chk.power) &&
                          row.feasible == chk.feasible;
        if (!same) ++row_errors;
      }
      if (result.best != oracle::brute_argmin(result)) ++disagreements;
      if (result.feasible()) ++feasible_winners;
    }
  }
  std::ostringstream d;
  d << kOptimizerInstances << " instances x 3 modes = " << instances << " scans over " << kDefaultGridCount
    << " points, " << feasible_winners << " with a feasible winner, " << disagreements
    << " argmin disagreements, " << row_errors << " row recomputation errors (tolerance 0)";
  return {instances == 3 * kOptimizerInstances && disagreements == 0 && row_errors == 0, d.str()};
}

double grid_step_slack(const StepModel& m, double x1, double x2, double h) {
  return m.unit_cost[0] * ((x1 + h) * (x1 + h) - x1 * x1) + m.unit_cost[1] * ((x2 + h) * (x2 + h) - x2 * x2);
}

Outcome analytic_closed_forms() {
  std::mt19937_64 rng(8080);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int failures = 0;
  double worst_one = 0.0, worst_residual = 0.0, worst_stationarity = 0.0;
  std::ostringstream notes;

  // one level: worked example plus random points against a D/1e5 scan
  std::vector<StepModel> ones{StepModel{1000, 1, 5, {1}, {10}}};
  for (int i = 0; i < kRandomAnalyticPoints; ++i) {
    const double m = 1 + 99 * unit(rng);
    ones.push_back(StepModel{100 + 1e5 * unit(rng), 1, 1 + m * unit(rng), {0.1 + 10 * unit(rng)}, {m}});
  }
  for (const auto& m : ones) {
    const auto s = optimal_one_level(m);
    const double h = m.max_distance / 1e5;
    double scan = NAN;
    for (int k = 0; k <= 100000; ++k)
      if (m.delay({k * h}) <= m.target_delay) {
        scan = k * h;
        break;
      }
    const double err = std::abs(scan - s.size) / m.max_distance;
    worst_one = std::max(worst_one, err);
    if (!s.feasible || !(err <= kOneLevelScanTolerance)) ++failures;
  }
  if (optimal_one_level(ones.front()).size != 600.0) ++failures;

  // two level: worked example plus random interior points
  std::vector<StepModel> twos{StepModel{1000, 1, 5, {2, 1}, {4, 8}}};
  while (static_cast<int>(twos.size()) < kRandomAnalyticPoints + 1) {
    const double m1 = 1 + 19 * unit(rng), m2 = 5 + 195 * unit(rng);
    StepModel m{100 + 1e4 * unit(rng), 1, 1 + (m1 + m2) * unit(rng), {0.5 + 4.5 * unit(rng), 0.5 + 4.5 * unit(rng)}, {m1, m2}};
    if (optimal_two_level(m).interior) twos.push_back(m);
  }
  const auto ex = optimal_two_level(twos.front());
  if (!(std::abs(ex.x1 - 222.22) <= 0.01 && std::abs(ex.x2 - 888.89) <= 0.01)) ++failures;
  for (const auto& m : twos) {
    const auto s = optimal_two_level(m);
    const double D = m.max_distance, a1 = m.unit_cost[0], a2 = m.unit_cost[1];
    const double m1 = m.miss_penalty[0], m2 = m.miss_penalty[1];
    const double excess = m.cpi_base + m1 + m2 - m.target_delay;
    const double residual = std::abs((m1 * s.x1 + m2 * s.x2) / D - excess) / excess;
    const double ratio = (a2 * m1) / (a1 * m2);
    const double stationarity = std::abs(s.x1 / s.x2 - ratio) / ratio;
    worst_residual = std::max(worst_residual, residual);
    worst_stationarity = std::max(worst_stationarity, stationarity);
    if (!s.interior || residual > kClosedFormResidual || stationarity > kClosedFormResidual) ++failures;

    const double best = m.cost({s.x1, s.x2});
    const double h = D / 1e3;
    double grid_best = INFINITY;
    for (int i = 0; i <= 1000; ++i)
      for (int j = 0; j <= 1000; ++j)
        if (m.delay({i * h, j * h}) <= m.target_delay) grid_best = std::min(grid_best, m.cost({i * h, j * h}));
    if (!(best <= grid_best * (1 + kGridCostSlackRel))) ++failures;
    if (!(grid_best - best <= grid_step_slack(m, s.x1, s.x2, h) * (1 + kGridCostSlackRel))) ++failures;
  }
  std::ostringstream d;
  d << ones.size() << " one-level points (max |dx|/D " << worst_one << "), " << twos.size()
    << " two-level points (max constraint residual " << worst_residual << ", max stationarity residual "
    << worst_stationarity << "), worked example (" << ex.x1 << ", " << ex.x2 << "), " << failures << " failures";
  return {failures == 0, d.str()};
}

Outcome analytic_scan_consistency() {
  // Flat histogram on [0, 4096) blocks; equal penalties and a1 = 8 a2 put
  // the continuous optimum at x1 = 250, x2 = 2000 blocks.
  constexpr std::uint64_t kDepth = 4096;
  constexpr std::uint64_t kLine = 64;
  auto hist = histogram_fast(gen_uniform_stack(kDepth, 1'000'000, 9));
  hist.block_size_bytes = kLine;

  StepModel model;
  model.max_distance = kDepth;
  model.cpi_base = 1.0;
  model.unit_cost = {8.0, 1.0};
  model.miss_penalty = {40.0, 40.0};
  const double p = 6.25;
  model.target_delay = model.cpi_base + 80.0 - p * (8.0 * 1600.0 + 1.0 * 1600.0) / kDepth;
  const auto closed = optimal_two_level(model);

  ObjectiveSpec spec;
  spec.mode = Objective::min_cost;
  spec.cpi_base = model.cpi_base;
  spec.miss_penalty = model.miss_penalty;
  spec.delay_bound = model.target_delay;
  spec.cost.coefficients = model.unit_cost;  // bytes^2 = 64^2 blocks^2, a common factor
  const auto r = scan_search(hist, SizeGrid{{{10, 20}, {11, 21}}}, spec, Inclusion::inclusive);

  std::ostringstream d;
  d << "continuous optimum (" << closed.x1 * kLine << ", " << closed.x2 * kLine << ") bytes";
  if (!closed.interior || !r.feasible()) {
    d << ", scan " << (r.feasible() ? "feasible" : "infeasible") << ", closed form "
      << (closed.interior ? "interior" : "not interior");
    return {false, d.str()};
  }
  const double log_opt[2] = {std::log2(closed.x1 * kLine), std::log2(closed.x2 * kLine)};
  bool ok = true;
  d << ", scan winner (" << r.winner().sizes[0] << ", " << r.winner().sizes[1] << "), exponent gaps";
  for (int i = 0; i < 2; ++i) {
    const double gap = std::abs(r.winner().exponents[i] - log_opt[i]);
    d << ' ' << gap;
    ok = ok && gap <= kPowerOfTwoSteps;
  }
  d << " (bound " << kPowerOfTwoSteps << " step)";
  return {ok, d.str()};
}

Outcome associativity_insensitivity() {
  const std::vector<BlockTrace> traces{
      with_line(gen_random(1024, 200'000, 301), 64),        with_line(gen_random(4096, 200'000, 302), 64),
      with_line(gen_random(16384, 200'000, 303), 64),       with_line(gen_uniform_stack(1024, 200'000, 304), 64),
      with_line(gen_uniform_stack(4096, 200'000, 305), 64),
  };
  double worst_assoc = 0.0, worst_plru = 0.0, worst_bit = 0.0, worst_tree = 0.0;
  auto one_level = [](std::uint64_t size, std::uint32_t ways, Replacement r) {
    SimConfig c;
    c.line_size_bytes = 64;
    c.levels = {{size, ways, r}};
    return c;
  };
  auto rel = [](double a, double b) { return b == 0 ? (a == 0 ? 0.0 : INFINITY) : std::abs(a - b) / b; };
  for (const auto& t : traces) {
    for (int e = 12; e <= 19; ++e) {
      const std::uint64_t size = std::uint64_t{1} << e;
      const double fa = simulate(t, one_level(size, 0, Replacement::lru)).mpka(0);
      for (std::uint32_t ways : {8u, 16u})
        worst_assoc = std::max(worst_assoc, rel(simulate(t, one_level(size, ways, Replacement::lru)).mpka(0), fa));
      const double lru16 = simulate(t, one_level(size, 16, Replacement::lru)).mpka(0);
      worst_bit = std::max(worst_bit, rel(simulate(t, one_level(size, 16, Replacement::bit_plru)).mpka(0), lru16));
      worst_tree = std::max(worst_tree, rel(simulate(t, one_level(size, 16, Replacement::tree_plru)).mpka(0), lru16));
    }
  }
  worst_plru = std::max(worst_bit, worst_tree);
  std::ostringstream d;
  d << traces.size() << " traces x 8 sizes: max 8/16-way vs fully-associative MPKA disparity " << worst_assoc
    << ", max bit-PLRU vs LRU " << worst_bit << ", max tree-PLRU vs LRU " << worst_tree << " (bound "
    << kAssocDisparityBound << ")";
  return {worst_assoc <= kAssocDisparityBound && worst_plru <= kAssocDisparityBound, d.str()};
}

Outcome speedup_floor() {
  const auto trace = with_line(gen_uniform_stack(16384, 1'000'000, 11), 64);
  ObjectiveSpec spec;
  spec.mode = Objective::min_cost;
  spec.miss_penalty = {10, 100, 1000};
  spec.delay_bound = 50;
  spec.cost.coefficients = {4, 2, 1};

  auto t0 = std::chrono::steady_clock::now();
  const auto hist = histogram_fast(trace);
  const auto result = scan_search(hist, SizeGrid::three_level_default(), spec, Inclusion::exclusive);
  const double fast = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  std::size_t disagreements = 0;
  for (const auto& row : result.table) {
    const auto sim = simulate(trace, SimConfig::fully_associative(HierarchyConfig{row.sizes, 64, Inclusion::exclusive}));
    for (std::size_t i = 0; i < row.sizes.size(); ++i)
      if (rate_of(sim.levels[i].misses, sim.total_accesses) != row.miss_rates[i]) ++disagreements;
  }
  const double slow = seconds_since(t0);
  const double ratio = slow / fast;
  std::ostringstream d;
  d << "histogram + " << result.table.size() << " estimates " << fast << " s, " << result.table.size()
    << " simulations " << slow << " s, speedup " << ratio << "x (floor " << kSpeedupFloor << "x), "
    << disagreements << " level miss-rate disagreements";
  return {ratio >= kSpeedupFloor && result.table.size() == kDefaultGridCount, d.str()};
}

Outcome block_size_normalization() {
  int failures = 0;
  std::ostringstream d;
  for (std::uint64_t ws : {512u, 999u, 1000u, 4096u}) {
    auto addresses = to_addresses(with_line(gen_cyclic(ws, 3), 64));
    const auto h64 = histogram_fast(to_blocks(addresses, 64));
    const auto h128 = histogram_fast(to_blocks(addresses, 128));
    const auto max64 = *h64.max_distance(), max128 = *h128.max_distance();
    const auto b64 = *normalize(h64).max_distance_bytes(), b128 = *normalize(h128).max_distance_bytes();
    const auto byte_gap = b64 > b128 ? b64 - b128 : b128 - b64;
    const bool ok = max128 == max64 / 2 && byte_gap <= 128;
    if (!ok) ++failures;
    d << "D=" << ws << ": max " << max64 << " -> " << max128 << ", bytes " << b64 << " vs " << b128 << "; ";
  }
  d << failures << " failures (halving exact, byte gap <= 128)";
  return {failures == 0, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"Mattson equivalence", mattson_equivalence},
      {"engine equivalence", engine_equivalence},
      {"exclusive multi-level exactness", exclusive_exactness},
      {"inclusive with LRU inheritance exactness", inheritance_exactness},
      {"inclusive error bound", inclusive_error_bound},
      {"grid count", grid_count},
      {"scanning-search optimality", scan_optimality},
      {"analytic closed forms", analytic_closed_forms},
      {"analytic vs scan consistency", analytic_scan_consistency},
      {"associativity insensitivity", associativity_insensitivity},
      {"speedup floor", speedup_floor},
      {"block-size normalization", block_size_normalization},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
