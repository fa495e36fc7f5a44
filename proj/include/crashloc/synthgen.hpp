#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "crashloc/callgraph.hpp"
#include "crashloc/error.hpp"
#include "crashloc/evaluation.hpp"
#include "crashloc/expansion.hpp"
#include "crashloc/trace.hpp"
#include "crashloc/trace_io.hpp"

namespace crashloc {

struct SynthConfig {
  std::uint32_t n_entities = 1000;
  double edge_density = 2.0;  // mean out-degree
  std::uint32_t n_faults = 10;
  std::uint32_t fix_points_per_fault = 3;
  std::uint32_t n_stacks_per_fault = 5;
  std::uint32_t stack_truncation = 3;  // innermost frames popped before the crash
  std::uint32_t n_passing_traces = 100;
  double target_coverage_rate = 0.9;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_entities < 8) throw std::invalid_argument("n_entities must be at least 8");
    if (!(edge_density > 0)) throw std::invalid_argument("edge_density must be positive");
    if (n_faults == 0 || fix_points_per_fault == 0 || n_stacks_per_fault == 0 ||
        n_passing_traces == 0)
      throw std::invalid_argument("counts must be positive");
    if (!(target_coverage_rate >= 0 && target_coverage_rate <= 1))
      throw std::invalid_argument("target_coverage_rate must be in [0, 1]");
  }
};

/// A generated benchmark: the four artifact files' contents plus the
/// noise-free failing executions behind each stack.
struct Benchmark {
  EntityTable table;
  CallGraph graph;
  std::vector<StackTrace> stacks;  // each tagged with its fault id
  std::vector<ExecutionTrace> passing;
  GroundTruth truth;
  /// Observed (not expanded) failing execution per stack, index-aligned.
  std::vector<ExecutionTrace> failing_runs;
};

namespace detail {

class SynthGenerator {
 public:
  explicit SynthGenerator(const SynthConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  Benchmark run() {
    Benchmark b;
    build_graph(b);
    std::vector<std::vector<EntityId>> chains;
    for (std::uint32_t f = 0; f < cfg_.n_faults; ++f) chains.push_back(make_fault(b, f));
    build_passing(b, chains);
    return b;
  }

 private:
  std::size_t uniform(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  void build_graph(Benchmark& b) {
    const std::size_t n = cfg_.n_entities;
    const auto width = std::to_string(n - 1).size();
    for (std::size_t i = 0; i < n; ++i) {
      auto digits = std::to_string(i);
      b.table.intern("fn_" + std::string(width - digits.size(), '0') + digits);
    }
    // Random recursive tree from the root keeps every entity reachable;
    // geometric extra out-degree adds sharing, back edges and recursion.
    std::vector<std::vector<std::uint32_t>> out(n);
    std::unordered_set<std::uint64_t> seen;
    auto add = [&](std::size_t a, std::size_t c) {
      if (seen.insert((std::uint64_t{a} << 32) | c).second)
        out[a].push_back(static_cast<std::uint32_t>(c));
    };
    for (std::size_t i = 1; i < n; ++i) add(uniform(0, i - 1), i);
    std::geometric_distribution<std::size_t> degree(1.0 / (1.0 + cfg_.edge_density));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t want = degree(rng_);
      for (std::size_t tries = 0; out[i].size() < want && tries < 4 * want + 4; ++tries) {
        const bool downward = i + 1 < n && chance(0.85);
        add(i, downward ? uniform(i + 1, n - 1) : uniform(0, n - 1));
      }
    }
    std::vector<CallGraph::Edge> edges;
    for (std::size_t a = 0; a < n; ++a)
      for (auto c : out[a]) edges.emplace_back(EntityId{std::uint32_t(a)}, EntityId{c});
    b.graph = CallGraph(n, edges);
  }

  static std::uint64_t edge_key(EntityId a, EntityId c) {
    return (std::uint64_t{a.value} << 32) | c.value;
  }

  /// Random walk of exactly `steps` calls from `start`, or empty on a dead end.
  std::vector<EntityId> walk(const CallGraph& g, EntityId start, std::size_t steps) {
    std::vector<EntityId> path{start};
    for (std::size_t s = 0; s < steps; ++s) {
      const auto next = g.callees(path.back());
      if (next.empty()) return {};
      path.push_back(next[uniform(0, next.size() - 1)]);
    }
    return path;
  }

  /// Shortest call path from `from` to `to` with shuffled tie-breaking.
  std::vector<EntityId> route(const CallGraph& g, EntityId from, EntityId to) {
    std::vector<std::int64_t> parent(g.entity_count(), -2);
    std::vector<EntityId> frontier{from}, next;
    parent[from.value] = -1;
    while (!frontier.empty() && parent[to.value] == -2) {
      next.clear();
      std::shuffle(frontier.begin(), frontier.end(), rng_);
      for (EntityId f : frontier)
        for (EntityId c : g.callees(f))
          if (parent[c.value] == -2) {
            parent[c.value] = f.value;
            next.push_back(c);
          }
      frontier.swap(next);
    }
    if (parent[to.value] == -2) return {};
    std::vector<EntityId> path;
    for (std::int64_t v = to.value; v != -1; v = parent[v]) path.push_back(EntityId{std::uint32_t(v)});
    std::reverse(path.begin(), path.end());
    return path;
  }

  /// Entities a run touches when each call site fires with probability p.
  void explore(const CallGraph& g, const std::vector<char>& allowed, double p,
               std::vector<char>& hit, std::vector<EntityId>& hits,
               const std::unordered_set<std::uint64_t>* blocked = nullptr) {
    std::vector<EntityId> stack{EntityId{0}};
    if (!hit[0]) {
      hit[0] = 1;
      hits.push_back(EntityId{0});
    }
    while (!stack.empty()) {
      const EntityId f = stack.back();
      stack.pop_back();
      for (EntityId c : g.callees(f)) {
        if (hit[c.value] || !allowed[c.value] || !chance(p)) continue;
        if (blocked && blocked->count(edge_key(f, c))) continue;
        hit[c.value] = 1;
        hits.push_back(c);
        stack.push_back(c);
      }
    }
  }

  static constexpr std::size_t kRetries = 200;
  static constexpr double kCallProbability = 0.32;
  static constexpr double kRepeatPath = 0.5;

  std::vector<EntityId> make_fault(Benchmark& b, std::uint32_t index) {
    const auto& g = b.graph;
    const std::size_t s = cfg_.stack_truncation;
    const std::size_t fp = cfg_.fix_points_per_fault;
    const std::size_t h = s + std::max<std::size_t>(fp, 2);  // chain spans k_0..k_h
    std::vector<EntityId> chain;
    for (std::size_t attempt = 0; attempt < kRetries && chain.empty(); ++attempt) {
      chain = walk(g, EntityId{std::uint32_t(uniform(1, g.entity_count() - 1))}, h);
      if (!chain.empty() && std::unordered_set<EntityId>(chain.begin(), chain.end()).size() != chain.size())
        chain.clear();  // keep the fault chain free of repeats
    }
    if (chain.empty()) throw Error("cannot place a fault chain; graph too sparse for this config");

    // Fix window: inside the popped frames when they can hold it, else ending
    // at the deepest chain entity.
    std::size_t end = h;
    if (s >= fp) end = uniform(h - s + fp, h);
    const std::string fault_id = "fault_" + std::to_string(index + 1);
    auto& fixes = b.truth[fault_id];
    for (std::size_t i = end + 1 - fp; i <= end; ++i) {
      fixes.push_back(b.table.name(chain[i]));
      blocked_.insert(edge_key(chain[i - 1], chain[i]));  // the faulty call site
    }

    const std::size_t top = h - s;  // crash frame position in the chain
    std::vector<char> everything(g.entity_count(), 1);
    std::vector<std::vector<EntityId>> prefixes;
    for (std::uint32_t k = 0; k < cfg_.n_stacks_per_fault; ++k) {
      std::vector<EntityId> prefix;
      // Reports in one bucket often repeat an earlier call path verbatim.
      if (!prefixes.empty() && chance(kRepeatPath))
        prefix = prefixes[uniform(0, prefixes.size() - 1)];
      for (std::size_t attempt = 0; attempt < kRetries && prefix.empty(); ++attempt) {
        auto head = walk(g, EntityId{0}, uniform(0, 4));
        if (head.empty()) continue;
        auto tail = route(g, head.back(), chain.front());
        if (tail.empty()) continue;
        head.insert(head.end(), tail.begin() + 1, tail.end());
        prefix = std::move(head);
      }
      if (prefix.empty()) prefix = route(g, EntityId{0}, chain.front());
      if (prefix.empty()) throw Error("fault chain unreachable from the root");
      prefixes.push_back(prefix);

      // Call path root..k_0..k_top; frames listed innermost first.
      std::vector<EntityId> path(prefix.begin(), prefix.end() - 1);
      path.insert(path.end(), chain.begin(), chain.begin() + top + 1);
      StackTrace st;
      st.stack_id = fault_id + "_crash_" + std::to_string(k + 1);
      st.fault_id = fault_id;
      for (auto it = path.rbegin(); it != path.rend(); ++it) st.frames.push_back(b.table.name(*it));
      b.stacks.push_back(std::move(st));

      // The run itself: background activity, the live stack and the popped frames.
      std::vector<char> hit(g.entity_count(), 0);
      std::vector<EntityId> hits;
      explore(g, everything, kCallProbability, hit, hits);
      hits.insert(hits.end(), path.begin(), path.end());
      hits.insert(hits.end(), chain.begin() + top, chain.end());
      b.failing_runs.push_back(make_trace(b.stacks.back().stack_id, std::move(hits),
                                          TraceLabel::fail, TraceOrigin::observed));
    }
    return chain;
  }

  void build_passing(Benchmark& b, const std::vector<std::vector<EntityId>>& chains) {
    const auto& g = b.graph;
    const std::size_t n = g.entity_count();
    const auto target = static_cast<std::size_t>(std::llround(cfg_.target_coverage_rate * double(n)));

    // Testable region: randomized breadth-first growth from the root.
    std::vector<char> allowed(n, 0);
    std::vector<std::int64_t> parent(n, -1);
    std::vector<EntityId> frontier{EntityId{0}}, next;
    allowed[0] = 1;
    std::size_t size = 1;
    while (!frontier.empty() && size < target) {
      next.clear();
      std::shuffle(frontier.begin(), frontier.end(), rng_);
      for (EntityId f : frontier)
        for (EntityId c : g.callees(f))
          if (!allowed[c.value] && size < target) {
            allowed[c.value] = 1;
            parent[c.value] = f.value;
            next.push_back(c);
            ++size;
          }
      frontier.swap(next);
    }

    // Passing runs skip the faulty call sites; a fix entity is still reached
    // through its other callers.
    std::vector<std::vector<EntityId>> runs(cfg_.n_passing_traces);
    std::vector<char> covered(n, 0);
    for (auto& run : runs) {
      std::vector<char> hit(n, 0);
      explore(g, allowed, kCallProbability, hit, run, &blocked_);
      for (EntityId e : run) covered[e.value] = 1;
    }
    // Top up so that every testable entity is exercised by some run.
    for (std::size_t e = 0; e < n; ++e) {
      if (!allowed[e] || covered[e]) continue;
      auto& run = runs[uniform(0, runs.size() - 1)];
      for (std::int64_t v = std::int64_t(e); v != -1; v = parent[v]) {
        run.push_back(EntityId{std::uint32_t(v)});
        covered[v] = 1;
      }
    }
    // A passing run never performs a whole fault chain (that would crash).
    for (auto& run : runs) {
      normalize_hits(run);
      for (const auto& chain : chains) {
        const bool activates = std::all_of(chain.begin(), chain.end(), [&](EntityId e) {
          return std::binary_search(run.begin(), run.end(), e);
        });
        if (activates) run.erase(std::lower_bound(run.begin(), run.end(), chain.back()));
      }
    }
    for (std::size_t i = 0; i < runs.size(); ++i)
      b.passing.push_back(make_trace("pass_" + std::to_string(i + 1), std::move(runs[i]),
                                     TraceLabel::pass));
  }

  SynthConfig cfg_;
  std::mt19937_64 rng_;
  std::unordered_set<std::uint64_t> blocked_;
};

}  // namespace detail

/// Deterministic in `config` (including its seed).
inline Benchmark generate(const SynthConfig& config) {
  config.validate();
  return detail::SynthGenerator(config).run();
}

/// Fraction of entities hit by at least one passing trace.
inline double passing_coverage(const Benchmark& b) {
  std::vector<char> hit(b.table.size(), 0);
  for (const auto& t : b.passing)
    for (EntityId e : t.hits) hit[e.value] = 1;
  return double(std::count(hit.begin(), hit.end(), 1)) / double(b.graph.entity_count());
}

struct BenchmarkPaths {
  std::filesystem::path graph, stacks, passing, ground_truth;

  explicit BenchmarkPaths(const std::filesystem::path& dir)
      : graph(dir / "callgraph.tsv"),
        stacks(dir / "stacks.jsonl"),
        passing(dir / "passing.jsonl"),
        ground_truth(dir / "ground_truth.json") {}
};

/// Writes the call graph, stacks, passing traces and ground truth into `dir`.
inline void write_benchmark(const Benchmark& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const BenchmarkPaths paths(dir);
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(paths.graph);
    write_call_graph(out, b.graph, b.table);
  }
  {
    auto out = open(paths.stacks);
    write_stacks(out, b.stacks);
  }
  {
    auto out = open(paths.passing);
    for (const auto& t : b.passing) {
      nlohmann::json hits = nlohmann::json::array();
      for (EntityId e : t.hits) hits.push_back(b.table.name(e));
      out << nlohmann::json{{"id", t.trace_id}, {"hits", std::move(hits)}}.dump() << '\n';
    }
  }
  {
    auto out = open(paths.ground_truth);
    write_ground_truth(out, b.truth);
  }
}

}  // namespace crashloc
