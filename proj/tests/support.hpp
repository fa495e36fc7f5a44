#pragma once

// Seeded generators and independent reference implementations used by the
// unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "crashloc/crashloc.hpp"

namespace crashloc::testing {

struct RandomGraph {
  EntityTable table;
  CallGraph graph;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // as generated
};

/// Uniform random digraph: each ordered pair (self loops included) is an edge
/// with probability p.
inline RandomGraph random_graph(std::mt19937_64& rng, std::size_t n, double p) {
  RandomGraph g;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("v" + std::to_string(i));
  std::vector<EdgeRecord> records;
  std::bernoulli_distribution coin(p);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (coin(rng)) {
        records.push_back({names[a], names[b]});
        g.edges.emplace_back(a, b);
      }
  for (const auto& nm : names) g.table.intern(nm);  // ids follow indices
  g.graph = build_call_graph(g.table, records, names);
  return g;
}

/// Sparse variant for larger n: about `degree` random callees per node.
inline RandomGraph random_sparse_graph(std::mt19937_64& rng, std::size_t n, double degree) {
  RandomGraph g;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("v" + std::to_string(i));
  std::vector<EdgeRecord> records;
  std::poisson_distribution<int> out(degree);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t a = 0; a < n; ++a) {
    const int k = out(rng);
    for (int j = 0; j < k; ++j) {
      const auto b = pick(rng);
      records.push_back({names[a], names[b]});
      g.edges.emplace_back(a, b);
    }
  }
  for (const auto& nm : names) g.table.intern(nm);  // ids follow indices
  g.graph = build_call_graph(g.table, records, names);
  return g;
}

/// Shortest distances from a seed set by edge relaxation until nothing
/// changes (no queue, no levels). Unreached nodes stay at UINT32_MAX.
inline std::vector<std::uint32_t> relax_distances(
    std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
    const std::vector<std::uint32_t>& seeds) {
  constexpr auto inf = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> d(n, inf);
  for (auto s : seeds) d[s] = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [a, b] : edges)
      if (d[a] != inf && d[a] + 1 < d[b]) {
        d[b] = d[a] + 1;
        changed = true;
      }
  }
  return d;
}

/// Nodes within `depth` calls of the seeds, built as repeated closure:
/// S_0 = seeds, S_{k+1} = S_k plus callees of S_k.
inline std::set<std::uint32_t> closure(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                                       const std::vector<std::uint32_t>& seeds, std::uint32_t depth) {
  std::set<std::uint32_t> s(seeds.begin(), seeds.end());
  for (std::uint32_t k = 0; k < depth; ++k) {
    auto next = s;
    for (const auto& [a, b] : edges)
      if (s.count(a)) next.insert(b);
    if (next == s) break;
    s.swap(next);
  }
  return s;
}

inline std::set<std::uint32_t> hit_set(const ExecutionTrace& t) {
  std::set<std::uint32_t> s;
  for (auto id : t.hits) s.insert(id.value);
  return s;
}

// Straight-line formulas written from their textbook definitions.
inline double ref_ochiai(double ef, double nf, double ep) {
  const double denom = std::sqrt((ef + nf) * (ef + ep));
  if (ef == 0 || denom == 0) return 0.0;
  return ef / denom;
}

inline double ref_tarantula(double ef, double nf, double ep, double np) {
  const double f = (ef + nf) == 0 ? 0.0 : ef / (ef + nf);
  const double p = (ep + np) == 0 ? 0.0 : ep / (ep + np);
  if (f + p == 0) return 0.0;
  return f / (f + p);
}

inline double ref_jaccard(double ef, double nf, double ep) {
  const double denom = ef + nf + ep;
  if (ef == 0 || denom == 0) return 0.0;
  return ef / denom;
}

/// Probability that a random order finds one of 3 fixes in the first m:
/// 1 - (n-m)(n-m-1)(n-m-2) / (n(n-1)(n-2)).
inline double closed_form_k3(std::uint64_t m, std::uint64_t n) {
  const auto a = static_cast<std::int64_t>(n - m);
  const std::int64_t miss = a * (a - 1) * (a - 2);
  const auto nn = static_cast<std::int64_t>(n);
  const std::int64_t all = nn * (nn - 1) * (nn - 2);
  return 1.0 - static_cast<double>(miss) / static_cast<double>(all);
}

/// Monte Carlo estimate: shuffle n entities, k of which are fixes, and see
/// whether any fix lands in the first m.
inline double monte_carlo_guess(std::uint64_t m, std::uint64_t n, std::uint64_t k, int trials,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> perm(n);
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    for (std::uint64_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    bool found = false;
    for (std::uint64_t i = 0; i < m && !found; ++i) found = perm[i] < k;
    hits += found ? 1 : 0;
  }
  return static_cast<double>(hits) / trials;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("crashloc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunResult {
  int status = -1;
  std::string out;
};

/// Runs a shell command and captures its stdout.
inline RunResult run_command(const std::string& command) {
  RunResult r;
  FILE* pipe = ::popen(command.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = ::pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

}  // namespace crashloc::testing
