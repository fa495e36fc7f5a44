#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "crashloc/callgraph.hpp"
#include "crashloc/detail/parallel.hpp"
#include "crashloc/trace.hpp"
#include "crashloc/trace_io.hpp"

namespace crashloc {

/// Approximate failing trace for one crash stack: every entity within
/// `depth` call steps of a stack frame, as an (unordered) hit set.
inline ExecutionTrace expand_stack_trace(const CallGraph& graph, const ResolvedStack& stack,
                                         std::uint32_t depth, DepthMap* depths_out = nullptr) {
  DepthMap depths = compute_call_depths(graph, stack, depth);
  std::vector<EntityId> hits;
  hits.reserve(depths.size());
  for (const auto& e : depths.entries()) hits.push_back(e.entity);
  auto trace = make_trace(stack.stack_id, std::move(hits), TraceLabel::fail, TraceOrigin::expanded);
  if (depths_out) *depths_out = std::move(depths);
  return trace;
}

inline ExecutionTrace expand_stack_trace(const CallGraph& graph, const EntityTable& table,
                                         const StackTrace& stack, std::uint32_t depth,
                                         MatchOptions match = {}) {
  return expand_stack_trace(graph, FrameResolver(graph, table, match).resolve(stack), depth);
}

struct ExpandOptions {
  MatchOptions match;
  unsigned threads = 1;
};

struct ExpansionFailure {
  std::string stack_id;
  std::string message;
};

/// Failing traces and their depth maps, index-aligned, in input order.
struct ExpansionResult {
  std::vector<ExecutionTrace> traces;
  std::vector<DepthMap> depth_maps;
  std::vector<ExpansionFailure> failures;
  /// Frames skipped because the call graph does not know them.
  std::vector<std::string> warnings;
};

/// Expands every stack. A stack that cannot be expanded is reported in
/// `failures` and the rest are still processed.
inline ExpansionResult expand_all(const CallGraph& graph, const EntityTable& table,
                                  std::span<const StackTrace> stacks, std::uint32_t depth,
                                  const ExpandOptions& options = {}) {
  if (stacks.empty()) throw Error("no stack traces to expand");
  const FrameResolver resolver(graph, table, options.match);

  struct Slot {
    ResolvedStack resolved;
    ExecutionTrace trace;
    DepthMap depths;
    std::string error;
  };
  std::vector<Slot> slots(stacks.size());
  detail::parallel_for(stacks.size(), options.threads, [&](std::size_t i) {
    Slot& slot = slots[i];
    slot.resolved = resolver.resolve(stacks[i]);
    try {
      slot.trace = expand_stack_trace(graph, slot.resolved, depth, &slot.depths);
    } catch (const Error& e) {
      slot.error = e.what();
    }
  });

  ExpansionResult result;
  for (auto& slot : slots) {
    for (const auto& frame : slot.resolved.unresolved)
      result.warnings.push_back("stack " + slot.resolved.stack_id + ": frame '" + frame +
                                "' is not in the call graph; skipped");
    if (!slot.error.empty()) {
      result.failures.push_back({slot.resolved.stack_id, slot.error});
      continue;
    }
    result.traces.push_back(std::move(slot.trace));
    result.depth_maps.push_back(std::move(slot.depths));
  }
  return result;
}

/// Expansion fixpoint over a set of stacks: the largest per-stack depth at
/// which expansion stops growing. Stacks with no resolvable frame are ignored.
inline std::uint32_t dataset_fixpoint(const CallGraph& graph, const EntityTable& table,
                                      std::span<const StackTrace> stacks, MatchOptions match = {}) {
  const FrameResolver resolver(graph, table, match);
  std::uint32_t d_max = 0;
  for (const auto& s : stacks) {
    const auto resolved = resolver.resolve(s);
    if (resolved.seeds.empty()) continue;
    d_max = std::max(d_max, expansion_fixpoint(graph, resolved));
  }
  return d_max;
}

/// Drops stacks whose frame sequence repeats an earlier stack.
inline std::vector<StackTrace> dedupe_stacks(std::span<const StackTrace> stacks) {
  std::set<std::vector<std::string>> seen;
  std::vector<StackTrace> out;
  for (const auto& s : stacks)
    if (seen.insert(s.frames).second) out.push_back(s);
  return out;
}

/// Stack-trace JSON Lines: `{"id": "...", "frames": ["<top>", ...]}` plus an
/// optional `"fault"` bucket id.
inline std::vector<StackTrace> read_stacks(std::istream& in, const std::string& source) {
  std::vector<StackTrace> stacks;
  std::string line;
  std::size_t lineno = 0;
  while (detail::read_line(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto obj = detail::parse_json_line(line, source, lineno);
    if (!obj.is_object()) throw InputError(source, lineno, "record must be a JSON object");
    StackTrace st;
    st.stack_id = detail::require_string(obj, "id", source, lineno);
    st.frames = detail::require_string_array(obj, "frames", source, lineno);
    if (obj.contains("fault")) st.fault_id = detail::require_string(obj, "fault", source, lineno);
    stacks.push_back(std::move(st));
  }
  if (in.bad()) throw InputError(source, 0, "read failure");
  if (stacks.empty()) throw InputError(source, 0, "no stack records");
  return stacks;
}

inline void write_stacks(std::ostream& out, std::span<const StackTrace> stacks) {
  for (const auto& s : stacks) {
    nlohmann::json obj{{"id", s.stack_id}, {"frames", s.frames}};
    if (s.fault_id) obj["fault"] = *s.fault_id;
    out << obj.dump() << '\n';
  }
}

/// Depth-map sidecar: `{"id": "<stack>", "depths": {"<entity>": <depth>, ...}}`.
inline void write_depth_maps(std::ostream& out, std::span<const DepthMap> maps,
                             const EntityTable& table) {
  for (const auto& m : maps) {
    nlohmann::json depths = nlohmann::json::object();
    for (const auto& e : m.entries()) depths[table.name(e.entity)] = e.depth;
    out << nlohmann::json{{"id", m.stack_id()}, {"depths", std::move(depths)}}.dump() << '\n';
  }
}

/// Entity names must already be known to `table`.
inline std::vector<DepthMap> read_depth_maps(std::istream& in, const EntityTable& table,
                                             const std::string& source) {
  std::vector<DepthMap> maps;
  std::string line;
  std::size_t lineno = 0;
  while (detail::read_line(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto obj = detail::parse_json_line(line, source, lineno);
    if (!obj.is_object()) throw InputError(source, lineno, "record must be a JSON object");
    auto id = detail::require_string(obj, "id", source, lineno);
    const auto it = obj.find("depths");
    if (it == obj.end() || !it->is_object())
      throw InputError(source, lineno, "field \"depths\" must be an object");
    std::vector<DepthMap::Entry> entries;
    for (const auto& [name, value] : it->items()) {
      const auto entity = table.find(name);
      if (!entity) throw InputError(source, lineno, "unknown entity '" + name + "'");
      if (!value.is_number_unsigned())
        throw InputError(source, lineno, "depth of '" + name + "' must be a non-negative integer");
      entries.push_back({*entity, value.get<std::uint32_t>()});
    }
    maps.emplace_back(std::move(id), std::move(entries));
  }
  if (in.bad()) throw InputError(source, 0, "read failure");
  return maps;
}

}  // namespace crashloc
