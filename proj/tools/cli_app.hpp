#pragma once

// rdcache command-line front end. Kept in a header so the test suite can
// drive run() in-process.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "rdcache/rdcache.hpp"

namespace rdcache::cli {

using nlohmann::json;

enum ExitCode { ok = 0, failure = 1, infeasible = 2, engine_mismatch = 3 };

// Records parameters, files and per-stage wall time for one invocation.
class Manifest {
 public:
  Manifest(std::string subcommand, std::vector<std::string> argv) {
    j_["tool"] = "rdcache";
    j_["version"] = kVersion;
    j_["subcommand"] = std::move(subcommand);
    j_["argv"] = std::move(argv);
    j_["params"] = json::object();
    j_["inputs"] = json::array();
    j_["outputs"] = json::array();
    j_["stages"] = json::object();
    j_["seed"] = nullptr;
  }

  json& params() { return j_["params"]; }
  json& operator[](const char* key) { return j_[key]; }
  void input(const std::string& p) { j_["inputs"].push_back(p); }
  void output(const std::string& p) { j_["outputs"].push_back(p); }

  template <typename F>
  auto stage(const char* name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
      j_["stages"][name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto r = f();
      finish();
      return r;
    }
  }

  void write_next_to(const std::string& out_path) const {
    std::ofstream f(out_path + ".manifest.json");
    if (!f) throw std::runtime_error("cannot write manifest next to " + out_path);
    f << j_.dump(2) << '\n';
  }

 private:
  json j_;
};

// Writes to the --out file, or stdout when none was given.
template <typename F>
void emit(const std::string& path, std::ostream& fallback, Manifest& m, F&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file " + path);
  write(f);
  if (!f) throw std::runtime_error("write failed: " + path);
  m.output(path);
}

inline TraceFormat parse_format(const std::string& s) {
  if (s == "text") return TraceFormat::text;
  if (s == "binary") return TraceFormat::binary;
  throw std::invalid_argument("unknown trace format '" + s + "' (expected text|binary)");
}

// "10:23,11:24,12:25"
inline SizeGrid parse_grid(const std::string& s) {
  SizeGrid g;
  std::stringstream in(s);
  for (std::string part; std::getline(in, part, ',');) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("grid range '" + part + "' is not lo:hi");
    try {
      g.levels.push_back({std::stoi(part.substr(0, colon)), std::stoi(part.substr(colon + 1))});
    } catch (const std::logic_error&) {
      throw std::invalid_argument("grid range '" + part + "' is not lo:hi");
    }
  }
  if (g.levels.empty()) throw std::invalid_argument("empty grid");
  return g;
}

inline ReuseHistogram load_histogram(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open histogram " + path);
  return read_histogram_csv(f);
}

inline BlockTrace load_blocks(const std::string& path, const std::string& format, std::uint64_t line) {
  return to_blocks(load_trace(path, parse_format(format)), line);
}

inline std::vector<LevelSpec> level_specs(const std::vector<std::uint64_t>& sizes, const std::vector<std::uint32_t>& assoc,
                                          const std::vector<std::string>& repl) {
  auto pick = [](const auto& v, std::size_t i, auto fallback) {
    if (v.empty()) return fallback;
    if (v.size() == 1) return v[0];
    if (i >= v.size()) throw std::invalid_argument("per-level option has fewer values than levels");
    return v[i];
  };
  std::vector<LevelSpec> out;
  for (std::size_t i = 0; i < sizes.size(); ++i)
    out.push_back({sizes[i], pick(assoc, i, std::uint32_t{0}), parse_replacement(pick(repl, i, std::string("lru")))});
  return out;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

namespace detail {

struct Options {
  // shared
  std::string out_path, trace_path, hist_path, format = "text", inclusion = "exclusive";
  std::uint64_t line_bytes = 64;
  std::uint64_t seed = 1;
  // gen
  std::string generator;
  std::uint64_t d = 0, sweeps = 1, n = 0, universe = 0;
  // histogram
  std::string engine = "fast", log2_out;
  bool compare_engines = false;
  // hierarchy / simulate
  std::vector<std::uint64_t> sizes;
  std::vector<std::uint32_t> assoc;
  std::vector<std::string> replacement;
  bool lru_inheritance = false;
  // optimize / compare
  std::string grid = "10:23,11:24,12:25", mode = "min-cost", json_out, summary_out;
  double cpi_base = 1.0;
  std::vector<double> penalty, cost_coeff, static_power, dynamic_power;
  double memory_power = 0.0;
  std::optional<double> delay_bound, cost_bound;
  bool allow_infeasible = false;
  // analytic
  double max_distance = 0.0, target = 0.0, delta = 0.1;
  std::vector<double> unit_cost;
  // replay
  std::string manifest_path;
};

inline int cmd_gen(const Options& o, Manifest& m, std::ostream& out) {
  m["seed"] = o.seed;
  m.params() = {{"generator", o.generator}, {"d", o.d},           {"sweeps", o.sweeps},         {"n", o.n},
                {"universe", o.universe},   {"seed", o.seed},     {"line_bytes", o.line_bytes}, {"format", o.format}};
  if (o.out_path.empty()) throw std::invalid_argument("gen needs --out");
  if (!is_power_of_two(o.line_bytes)) throw std::invalid_argument("--line-bytes must be a power of two");
  const auto blocks = m.stage("generate", [&] {
    if (o.generator == "cyclic") return gen_cyclic(o.d, o.sweeps);
    if (o.generator == "uniform-stack") return gen_uniform_stack(o.d, o.n, o.seed);
    if (o.generator == "random") return gen_random(o.universe, o.n, o.seed);
    throw std::invalid_argument("unknown generator '" + o.generator + "' (expected cyclic|uniform-stack|random)");
  });
  BlockTrace scaled = blocks;
  scaled.line_size_bytes = o.line_bytes;
  m.stage("write", [&] { save_trace(to_addresses(scaled), o.out_path, parse_format(o.format)); });
  m.output(o.out_path);
  out << "wrote " << blocks.blocks.size() << " accesses (" << blocks.num_distinct_blocks << " distinct blocks) to "
      << o.out_path << '\n';
  return ok;
}

inline int cmd_histogram(const Options& o, Manifest& m, std::ostream& out, std::ostream& err) {
  m.params() = {{"trace", o.trace_path},  {"format", o.format}, {"line_bytes", o.line_bytes},
                {"engine", o.engine},     {"compare_engines", o.compare_engines}};
  m.input(o.trace_path);
  const auto trace = m.stage("load", [&] { return load_blocks(o.trace_path, o.format, o.line_bytes); });
  if (o.engine != "fast" && o.engine != "naive") throw std::invalid_argument("--engine must be fast or naive");
  const auto hist = m.stage("histogram", [&] {
    return o.engine == "fast" ? histogram_fast(trace) : histogram_naive(trace);
  });
  if (o.compare_engines) {
    const auto other = m.stage("histogram_check", [&] {
      return o.engine == "fast" ? histogram_naive(trace) : histogram_fast(trace);
    });
    if (!(other == hist)) {
      err << "error: naive and fast histogram engines disagree on " << o.trace_path << '\n';
      return engine_mismatch;
    }
  }
  emit(o.out_path, out, m, [&](std::ostream& s) { write_histogram_csv(s, hist); });
  if (!o.log2_out.empty()) {
    emit(o.log2_out, out, m, [&](std::ostream& s) {
      s << "lo,hi,count\n";
      for (const auto& b : log2_buckets(hist)) s << b.lo << ',' << b.hi << ',' << b.count << '\n';
      s << "cold,," << hist.cold_count << '\n';
    });
  }
  return ok;
}

inline int cmd_estimate(const Options& o, Manifest& m, std::ostream& out) {
  m.params() = {{"histogram", o.hist_path}, {"sizes", o.sizes}, {"inclusion", o.inclusion}};
  m.input(o.hist_path);
  const auto hist = m.stage("load", [&] { return load_histogram(o.hist_path); });
  const HierarchyConfig cfg{o.sizes, hist.block_size_bytes, parse_inclusion(o.inclusion)};
  const auto est = m.stage("estimate", [&] { return estimate(hist, cfg); });
  emit(o.out_path, out, m, [&](std::ostream& s) { write_estimate_csv(s, est); });
  return ok;
}

inline SimConfig sim_config(const Options& o, const std::vector<std::uint64_t>& sizes) {
  SimConfig c;
  c.levels = level_specs(sizes, o.assoc, o.replacement);
  c.line_size_bytes = o.line_bytes;
  c.inclusion = parse_inclusion(o.inclusion);
  c.lru_inheritance = o.lru_inheritance;
  return c;
}

inline int cmd_simulate(const Options& o, Manifest& m, std::ostream& out) {
  m.params() = {{"trace", o.trace_path},     {"format", o.format},       {"line_bytes", o.line_bytes},
                {"sizes", o.sizes},          {"associativity", o.assoc}, {"replacement", o.replacement},
                {"inclusion", o.inclusion},  {"lru_inheritance", o.lru_inheritance}};
  m.input(o.trace_path);
  const auto config = sim_config(o, o.sizes);
  config.validate();
  const auto trace = m.stage("load", [&] { return load_blocks(o.trace_path, o.format, o.line_bytes); });
  const auto r = m.stage("simulate", [&] { return simulate(trace, config); });
  emit(o.out_path, out, m, [&](std::ostream& s) { write_sim_csv(s, r); });
  return ok;
}

inline double relative_error(std::uint64_t estimated, std::uint64_t simulated) {
  if (simulated == 0) return estimated == 0 ? 0.0 : INFINITY;
  const double e = static_cast<double>(estimated), s = static_cast<double>(simulated);
  return std::abs(e - s) / s;
}

inline int cmd_compare(const Options& o, Manifest& m, std::ostream& out) {
  m.params() = {{"trace", o.trace_path},         {"format", o.format},       {"line_bytes", o.line_bytes},
                {"grid", o.grid},                {"associativity", o.assoc}, {"replacement", o.replacement},
                {"inclusion", o.inclusion},      {"lru_inheritance", o.lru_inheritance}};
  m.input(o.trace_path);
  const auto grid = enumerate_grid(parse_grid(o.grid));
  const auto trace = m.stage("load", [&] { return load_blocks(o.trace_path, o.format, o.line_bytes); });
  const auto hist = m.stage("histogram", [&] { return histogram_fast(trace); });
  const MissCurve curve(hist);
  const Inclusion inclusion = parse_inclusion(o.inclusion);

  std::ostringstream table;
  table << "config,level,size_bytes,estimated_misses,simulated_misses,rel_error\n";
  table.precision(12);
  const std::size_t levels = grid.empty() ? 0 : grid.front().size();
  std::vector<double> sum(levels, 0.0), worst(levels, 0.0);
  m.stage("compare", [&] {
    for (std::size_t c = 0; c < grid.size(); ++c) {
      const auto sizes = sizes_of(grid[c]);
      const auto est = estimate(curve, HierarchyConfig{sizes, o.line_bytes, inclusion});
      const auto sim = simulate(trace, sim_config(o, sizes));
      for (std::size_t i = 0; i < levels; ++i) {
        const double e = relative_error(est.levels[i].miss_count, sim.levels[i].misses);
        sum[i] += e;
        worst[i] = std::max(worst[i], e);
        table << c << ',' << (i + 1) << ',' << sizes[i] << ',' << est.levels[i].miss_count << ','
              << sim.levels[i].misses << ',' << e << '\n';
      }
    }
  });
  emit(o.out_path, out, m, [&](std::ostream& s) { s << table.str(); });

  json summary = json::array();
  double all_sum = 0.0, all_max = 0.0;
  for (std::size_t i = 0; i < levels; ++i) {
    const double avg = grid.empty() ? 0.0 : sum[i] / static_cast<double>(grid.size());
    summary.push_back({{"level", i + 1}, {"average_error", avg}, {"max_error", worst[i]}});
    all_sum += sum[i];
    all_max = std::max(all_max, worst[i]);
    out << "L" << (i + 1) << " average_error=" << avg << " max_error=" << worst[i] << '\n';
  }
  const double all_avg = grid.empty() ? 0.0 : all_sum / static_cast<double>(grid.size() * levels);
  out << "configs=" << grid.size() << " average_error=" << all_avg << " max_error=" << all_max << '\n';
  m["summary"] = {{"configs", grid.size()}, {"levels", summary}, {"average_error", all_avg}, {"max_error", all_max}};
  return ok;
}

inline ObjectiveSpec objective_spec(const Options& o, std::size_t levels) {
  ObjectiveSpec s;
  s.mode = parse_objective(o.mode);
  s.cpi_base = o.cpi_base;
  // defaults: penalties 10, 100, 1000, ... and quadratic costs ..., 4, 2, 1
  s.miss_penalty = o.penalty;
  if (s.miss_penalty.empty())
    for (std::size_t i = 0; i < levels; ++i) s.miss_penalty.push_back(std::pow(10.0, static_cast<double>(i + 1)));
  s.cost.coefficients = o.cost_coeff;
  if (s.cost.coefficients.empty() && s.mode != Objective::min_power)
    for (std::size_t i = 0; i < levels; ++i) s.cost.coefficients.push_back(std::ldexp(1.0, static_cast<int>(levels - 1 - i)));
  s.power.static_per_byte = o.static_power;
  s.power.dynamic_per_access = o.dynamic_power;
  s.power.memory_per_access = o.memory_power;
  s.delay_bound = o.delay_bound;
  s.cost_bound = o.cost_bound;
  return s;
}

inline int cmd_optimize(const Options& o, Manifest& m, std::ostream& out, std::ostream& err) {
  const SizeGrid grid = parse_grid(o.grid);
  const ObjectiveSpec spec = objective_spec(o, grid.levels.size());
  m.params() = {{"histogram", o.hist_path},
                {"trace", o.trace_path},
                {"grid", o.grid},
                {"mode", o.mode},
                {"inclusion", o.inclusion},
                {"cpi_base", spec.cpi_base},
                {"miss_penalty", spec.miss_penalty},
                {"cost_coefficients", spec.cost.coefficients},
                {"static_power", spec.power.static_per_byte},
                {"dynamic_power", spec.power.dynamic_per_access},
                {"memory_power", spec.power.memory_per_access},
                {"delay_bound", o.delay_bound ? json(*o.delay_bound) : json(nullptr)},
                {"cost_bound", o.cost_bound ? json(*o.cost_bound) : json(nullptr)},
                {"allow_infeasible", o.allow_infeasible}};
  if (o.hist_path.empty() == o.trace_path.empty())
    throw std::invalid_argument("optimize needs exactly one of --hist (estimator) or --trace (simulation)");
  const Inclusion inclusion = parse_inclusion(o.inclusion);
  OptimizationResult r;
  if (!o.hist_path.empty()) {
    m.input(o.hist_path);
    const auto hist = m.stage("load", [&] { return load_histogram(o.hist_path); });
    r = m.stage("scan", [&] { return scan_search(hist, grid, spec, inclusion); });
  } else {
    m.input(o.trace_path);
    m.params()["line_bytes"] = o.line_bytes;
    m.params()["associativity"] = o.assoc;
    m.params()["replacement"] = o.replacement;
    m.params()["lru_inheritance"] = o.lru_inheritance;
    const auto trace = m.stage("load", [&] { return load_blocks(o.trace_path, o.format, o.line_bytes); });
    auto by_simulation = [&](const HierarchyConfig& c) {
      const auto sim = simulate(trace, sim_config(o, c.levels));
      LevelEstimate e;
      e.total_accesses = sim.total_accesses;
      for (std::size_t i = 0; i < sim.levels.size(); ++i)
        e.levels.push_back({c.levels[i], sim.levels[i].misses, rate_of(sim.levels[i].misses, sim.total_accesses),
                            sim.mpka(i)});
      return e;
    };
    r = m.stage("scan", [&] { return scan_search_with(by_simulation, grid, spec, o.line_bytes, inclusion); });
  }
  emit(o.out_path, out, m, [&](std::ostream& s) { write_scan_csv(s, r); });
  if (!o.json_out.empty()) emit(o.json_out, out, m, [&](std::ostream& s) { s << result_to_json(r).dump(2) << '\n'; });
  if (!o.summary_out.empty())
    emit(o.summary_out, out, m, [&](std::ostream& s) { write_winner_csv(s, r, grid.levels.size()); });
  m["summary"] = {{"feasible", r.feasible()},
                  {"winner", r.best ? row_to_json(r.winner()) : json(nullptr)},
                  {"objective", r.best ? json(r.objective_value) : json(nullptr)}};
  if (!r.feasible()) {
    err << (o.allow_infeasible ? "warning" : "error") << ": no feasible configuration among " << r.table.size()
        << " grid points\n";
    return o.allow_infeasible ? ok : infeasible;
  }
  if (!o.out_path.empty()) {
    out << "winner:";
    for (auto s : r.winner().sizes) out << ' ' << s;
    out << " objective=" << r.objective_value << '\n';
  }
  return ok;
}

inline int cmd_analytic(const Options& o, Manifest& m, std::ostream& out, std::ostream& err) {
  StepModel model;
  model.max_distance = o.max_distance;
  model.cpi_base = o.cpi_base;
  model.target_delay = o.target;
  model.unit_cost = o.unit_cost;
  model.miss_penalty = o.penalty;
  m.params() = {{"D", o.max_distance},       {"cpi_base", o.cpi_base},  {"T", o.target},
                {"unit_cost", o.unit_cost},  {"miss_penalty", o.penalty}, {"delta", o.delta}};
  const auto report = m.stage("solve", [&] { return analytic_report(model, o.delta); });
  emit(o.out_path, out, m, [&](std::ostream& s) { s << report.dump(2) << '\n'; });
  if (!report["solution"]["feasible"].get<bool>()) {
    err << (o.allow_infeasible ? "warning" : "error") << ": target delay is below CPI_base\n";
    return o.allow_infeasible ? ok : infeasible;
  }
  return ok;
}

inline int cmd_replay(const Options& o, std::ostream& out, std::ostream& err) {
  std::ifstream f(o.manifest_path);
  if (!f) throw std::runtime_error("cannot open manifest " + o.manifest_path);
  const auto j = json::parse(f);
  const auto argv = j.at("argv").get<std::vector<std::string>>();
  if (!argv.empty() && argv.front() == "replay") throw std::invalid_argument("manifest records a replay");
  return run(argv, out, err);
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  detail::Options o;
  CLI::App app{"Reuse-distance cache hierarchy estimation, simulation and sizing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  auto add_trace = [&](CLI::App* c, bool required) {
    auto* opt = c->add_option("--trace", o.trace_path, "Address trace file");
    if (required) opt->required();
    c->add_option("--format", o.format, "Trace format: text or binary")->capture_default_str();
    c->add_option("--line-bytes", o.line_bytes, "Cache line size in bytes")->capture_default_str();
  };
  auto add_hierarchy = [&](CLI::App* c) {
    c->add_option("--inclusion", o.inclusion, "exclusive or inclusive")->capture_default_str();
  };
  auto add_sim = [&](CLI::App* c) {
    c->add_option("--assoc", o.assoc, "Ways per level, 0 = fully associative (one value applies to all)")->delimiter(',');
    c->add_option("--replacement", o.replacement, "lru, bit-plru or tree-plru per level")->delimiter(',');
    c->add_flag("--lru-inheritance", o.lru_inheritance, "Inclusive LRU levels order blocks by inner-level recency");
  };
  auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out_path, "Output file (stdout if omitted)"); };

  auto* gen = app.add_subcommand("gen", "Generate a synthetic trace");
  gen->add_option("generator", o.generator, "cyclic, uniform-stack or random")->required();
  gen->add_option("--d", o.d, "Working set (cyclic) or maximum stack depth (uniform-stack)");
  gen->add_option("--sweeps", o.sweeps, "Sweeps over the working set (cyclic)")->capture_default_str();
  gen->add_option("--n", o.n, "Trace length");
  gen->add_option("--universe", o.universe, "Number of distinct blocks (random)");
  gen->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  gen->add_option("--line-bytes", o.line_bytes, "Bytes per generated block")->capture_default_str();
  gen->add_option("--format", o.format, "text or binary")->capture_default_str();
  add_out(gen);

  auto* histo = app.add_subcommand("histogram", "Compute a reuse-distance histogram");
  add_trace(histo, true);
  histo->add_option("--engine", o.engine, "fast or naive")->capture_default_str();
  histo->add_flag("--compare-engines", o.compare_engines, "Run both engines and fail unless they agree");
  histo->add_option("--log2-out", o.log2_out, "Also write log2-bucketed counts for plotting");
  add_out(histo);

  auto* est = app.add_subcommand("estimate", "Per-level miss counts from a histogram");
  est->add_option("--hist", o.hist_path, "Histogram CSV")->required();
  est->add_option("--size-bytes", o.sizes, "Level sizes in bytes, L1 first")->delimiter(',')->required();
  add_hierarchy(est);
  add_out(est);

  auto* sim = app.add_subcommand("simulate", "Trace-driven cache hierarchy simulation");
  add_trace(sim, true);
  sim->add_option("--size-bytes", o.sizes, "Level sizes in bytes, L1 first")->delimiter(',')->required();
  add_hierarchy(sim);
  add_sim(sim);
  add_out(sim);

  auto* cmp = app.add_subcommand("compare", "Estimator vs simulator error over a size grid");
  add_trace(cmp, true);
  cmp->add_option("--grid", o.grid, "Exponent ranges per level, e.g. 10:23,11:24,12:25")->capture_default_str();
  add_hierarchy(cmp);
  add_sim(cmp);
  add_out(cmp);

  auto* opt = app.add_subcommand("optimize", "Scanning search for the best cache sizes");
  opt->add_option("--hist", o.hist_path, "Histogram CSV (estimator-driven scan)");
  add_trace(opt, false);
  add_sim(opt);
  opt->add_option("--grid", o.grid, "Exponent ranges per level")->capture_default_str();
  opt->add_option("--mode", o.mode, "min-cost, min-power or min-delay")->capture_default_str();
  opt->add_option("--cpi-base", o.cpi_base, "Cycles per instruction with a perfect cache")->capture_default_str();
  opt->add_option("--penalty", o.penalty, "Miss penalty per level in cycles (default 10,100,1000,...)")->delimiter(',');
  opt->add_option("--delay-bound", o.delay_bound, "Delay bound T (min-cost, min-power)");
  opt->add_option("--cost-bound", o.cost_bound, "Cost bound C (min-delay)");
  opt->add_option("--cost-coeff", o.cost_coeff, "Quadratic cost coefficient per level (default ...,4,2,1)")->delimiter(',');
  opt->add_option("--static-power", o.static_power, "Static power per byte per level")->delimiter(',');
  opt->add_option("--dynamic-power", o.dynamic_power, "Dynamic power per access per level")->delimiter(',');
  opt->add_option("--memory-power", o.memory_power, "Power per memory access");
  opt->add_option("--json", o.json_out, "Also write the result as JSON");
  opt->add_option("--summary", o.summary_out, "Also write the winning row as CSV");
  opt->add_flag("--allow-infeasible", o.allow_infeasible, "Exit 0 even if nothing meets the bound");
  add_hierarchy(opt);
  add_out(opt);

  auto* ana = app.add_subcommand("analytic", "Closed-form sizing under a step histogram");
  ana->add_option("--d", o.max_distance, "Maximum reuse distance D (blocks)")->required();
  ana->add_option("--cpi-base", o.cpi_base, "CPI_base")->capture_default_str();
  ana->add_option("--target", o.target, "Target delay T")->required();
  ana->add_option("--cost", o.unit_cost, "Unit cost per level (one or two values)")->delimiter(',')->required();
  ana->add_option("--penalty", o.penalty, "Miss penalty per level (one or two values)")->delimiter(',')->required();
  ana->add_option("--delta", o.delta, "Relative perturbation for the sensitivity table")->capture_default_str();
  ana->add_flag("--allow-infeasible", o.allow_infeasible, "Exit 0 even if infeasible");
  add_out(ana);

  auto* rep = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  rep->add_option("manifest", o.manifest_path, "Manifest JSON")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (rep->parsed()) return detail::cmd_replay(o, out, err);
    CLI::App* chosen = app.get_subcommands().front();
    Manifest m(chosen->get_name(), args);
    int code = ok;
    if (chosen == gen) code = detail::cmd_gen(o, m, out);
    else if (chosen == histo) code = detail::cmd_histogram(o, m, out, err);
    else if (chosen == est) code = detail::cmd_estimate(o, m, out);
    else if (chosen == sim) code = detail::cmd_simulate(o, m, out);
    else if (chosen == cmp) code = detail::cmd_compare(o, m, out);
    else if (chosen == opt) code = detail::cmd_optimize(o, m, out, err);
    else if (chosen == ana) code = detail::cmd_analytic(o, m, out, err);
    m["exit_code"] = code;
    if (!o.out_path.empty()) m.write_next_to(o.out_path);
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return failure;
  }
}

}  // namespace rdcache::cli
