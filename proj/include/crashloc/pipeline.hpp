#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crashloc/callgraph.hpp"
#include "crashloc/evaluation.hpp"
#include "crashloc/expansion.hpp"
#include "crashloc/ranking.hpp"
#include "crashloc/spectra.hpp"

namespace crashloc {

struct LocalizeOptions {
  std::uint32_t depth = 3;
  Metric metric = Metric::ochiai;
  bool use_h1 = true;
  bool use_h2 = true;
  BetaMode beta_mode = BetaMode::offset;
  MatchOptions match;
  bool dedupe_stacks = false;
  unsigned threads = 1;

  ScoringOptions scoring() const { return {metric, use_h1, use_h2, beta_mode, depth, threads}; }
};

struct Localization {
  SuspiciousnessReport report;
  ExpansionResult expansion;
};

/// Stack expansion, spectra construction and scoring in one call. Throws
/// `Error` when no stack could be expanded.
inline Localization localize(const CallGraph& graph, const EntityTable& table,
                             std::span<const StackTrace> stacks,
                             std::span<const ExecutionTrace> passing,
                             const LocalizeOptions& options) {
  std::vector<StackTrace> deduped;
  if (options.dedupe_stacks) {
    deduped = dedupe_stacks(stacks);
    stacks = deduped;
  }
  Localization out;
  out.expansion = expand_all(graph, table, stacks, options.depth, {options.match, options.threads});
  if (out.expansion.traces.empty()) throw Error("no stack trace could be expanded");
  auto spectra = build_spectra(out.expansion.traces, {passing.begin(), passing.end()});
  out.report = score_all(spectra, table, options.scoring(), out.expansion.depth_maps);
  return out;
}

/// Stacks of one crashing fault together with its fix locations.
struct FaultCase {
  std::string fault_id;
  std::vector<StackTrace> stacks;
  std::vector<std::string> fixes;
};

/// Buckets stacks by their fault tag. Untagged stacks are accepted only when
/// the ground truth names a single fault. Faults without stacks are kept so
/// they count against recall.
inline std::vector<FaultCase> group_by_fault(std::span<const StackTrace> stacks,
                                             const GroundTruth& truth) {
  std::map<std::string, FaultCase> cases;
  for (const auto& [id, fixes] : truth) cases[id] = FaultCase{id, {}, fixes};
  for (const auto& s : stacks) {
    std::string id;
    if (s.fault_id) {
      id = *s.fault_id;
    } else if (truth.size() == 1) {
      id = truth.begin()->first;
    } else {
      throw InputError("stack '" + s.stack_id + "' has no fault tag and the ground truth names " +
                       std::to_string(truth.size()) + " faults");
    }
    const auto it = cases.find(id);
    if (it == cases.end())
      throw InputError("stack '" + s.stack_id + "' names fault '" + id +
                       "' which is not in the ground truth");
    it->second.stacks.push_back(s);
  }
  std::vector<FaultCase> out;
  for (auto& [id, c] : cases) out.push_back(std::move(c));
  return out;
}

/// One localization per fault, ranked against that fault's fix set.
inline std::vector<FaultOutcome> evaluate_faults(const CallGraph& graph, const EntityTable& table,
                                                 std::span<const FaultCase> faults,
                                                 std::span<const ExecutionTrace> passing,
                                                 const LocalizeOptions& options) {
  std::vector<FaultOutcome> outcomes;
  for (const auto& f : faults) {
    FaultOutcome o{f.fault_id, std::nullopt, 0};
    if (!f.stacks.empty()) {
      try {
        const auto loc = localize(graph, table, f.stacks, passing, options);
        o = evaluate_fault(loc.report, f.fault_id, f.fixes);
      } catch (const InputError&) {
        throw;
      } catch (const Error&) {
        // every stack unresolvable: the fault cannot be located
      }
    }
    outcomes.push_back(std::move(o));
  }
  return outcomes;
}

struct DepthTuning {
  std::uint32_t d_max = 0;
  std::vector<DepthScore> scores;
  std::uint32_t optimal = 0;
};

/// Scores each candidate depth by precision, recall and F-measure and picks
/// the best. Depths beyond d_max add nothing and are skipped. With
/// `normalize_precision` the summed precision is divided by the fault count.
inline DepthTuning tune_depth(const CallGraph& graph, const EntityTable& table,
                              std::span<const FaultCase> faults,
                              std::span<const ExecutionTrace> passing,
                              std::span<const std::uint32_t> depths, std::uint32_t d_max,
                              LocalizeOptions options, bool normalize_precision = false) {
  if (depths.empty()) throw std::invalid_argument("empty depth range");
  if (d_max == 0) throw std::invalid_argument("d_max must be positive");
  DepthTuning result;
  result.d_max = d_max;
  for (std::uint32_t d : depths) {
    if (d > d_max) continue;
    options.depth = d;
    const auto outcomes = evaluate_faults(graph, table, faults, passing, options);
    DepthScore s;
    s.depth = d;
    s.precision = precision(outcomes, d, d_max);
    if (normalize_precision && !outcomes.empty()) s.precision /= static_cast<double>(outcomes.size());
    s.recall = recall(outcomes);
    s.f = f_measure(s.precision, s.recall);
    result.scores.push_back(s);
  }
  if (result.scores.empty()) throw Error("every candidate depth exceeds d_max");
  result.optimal = select_optimal_depth(result.scores);
  return result;
}

}  // namespace crashloc
