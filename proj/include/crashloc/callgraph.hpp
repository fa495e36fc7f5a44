#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "crashloc/detail/text.hpp"
#include "crashloc/entity.hpp"
#include "crashloc/error.hpp"
#include "crashloc/stack.hpp"

namespace crashloc {

struct EdgeRecord {
  std::string caller;
  std::string callee;
};

/// Static call graph over interned entities. Immutable once built; callees
/// of each caller keep their first-insertion order.
class CallGraph {
 public:
  using Edge = std::pair<EntityId, EntityId>;

  CallGraph() = default;

  /// `edges` must be duplicate-free and reference ids below `entity_count`.
  CallGraph(std::size_t entity_count, std::span<const Edge> edges)
      : offsets_(entity_count + 1, 0) {
    for (const auto& [caller, callee] : edges) {
      if (caller.value >= entity_count || callee.value >= entity_count)
        throw std::invalid_argument("edge endpoint is not a registered entity");
      ++offsets_[caller.value + 1];
    }
    for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
    targets_.resize(edges.size());
    std::vector<std::uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& [caller, callee] : edges) targets_[cursor[caller.value]++] = callee;
  }

  std::size_t entity_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t edge_count() const noexcept { return targets_.size(); }

  /// True for ids registered when the graph was built. Entities interned later
  /// (e.g. names only seen in passing traces) are outside the graph.
  bool contains(EntityId id) const noexcept { return id.value < entity_count(); }

  std::span<const EntityId> callees(EntityId caller) const noexcept {
    if (!contains(caller)) return {};
    return {targets_.data() + offsets_[caller.value],
            targets_.data() + offsets_[caller.value + 1]};
  }

  bool has_edge(EntityId caller, EntityId callee) const noexcept {
    const auto out = callees(caller);
    return std::find(out.begin(), out.end(), callee) != out.end();
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(targets_.size());
    for (std::uint32_t c = 0; c < entity_count(); ++c)
      for (EntityId callee : callees(EntityId{c})) out.emplace_back(EntityId{c}, callee);
    return out;
  }

 private:
  std::vector<std::uint32_t> offsets_;
  std::vector<EntityId> targets_;
};

/// Accumulates entities and call pairs, collapsing duplicate edges.
class CallGraphBuilder {
 public:
  explicit CallGraphBuilder(EntityTable& table) : table_(&table) {}

  EntityId add_entity(std::string_view name) {
    touched_ = true;
    return table_->intern(name);
  }

  void add_edge(std::string_view caller, std::string_view callee) {
    const EntityId from = add_entity(caller);
    const EntityId to = add_entity(callee);
    const auto key = (std::uint64_t{from.value} << 32) | to.value;
    if (seen_.insert(key).second) edges_.emplace_back(from, to);
  }

  /// Throws `Error("empty graph")` when nothing was registered.
  CallGraph build() const {
    if (!touched_) throw Error("empty graph");
    return CallGraph(table_->size(), edges_);
  }

 private:
  EntityTable* table_;
  bool touched_ = false;
  std::vector<CallGraph::Edge> edges_;
  std::unordered_set<std::uint64_t> seen_;
};

inline CallGraph build_call_graph(EntityTable& table, std::span<const EdgeRecord> edges,
                                  std::span<const std::string> extra_entities = {}) {
  CallGraphBuilder builder(table);
  for (const auto& e : edges) builder.add_edge(e.caller, e.callee);
  for (const auto& name : extra_entities) builder.add_entity(name);
  return builder.build();
}

/// Parses the TAB-separated call-graph format: `caller<TAB>callee` per line,
/// `@entity<TAB>name` to register an isolated node, `#` comments.
inline CallGraph read_call_graph(std::istream& in, EntityTable& table,
                                 const std::string& source = "<call-graph>") {
  CallGraphBuilder builder(table);
  std::string line;
  std::size_t lineno = 0;
  while (detail::read_line(in, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 2)
      throw InputError(source, lineno, "expected exactly two TAB-separated fields");
    const auto lhs = detail::trim(fields[0]);
    const auto rhs = detail::trim(fields[1]);
    if (lhs.empty() || rhs.empty()) throw InputError(source, lineno, "empty entity name");
    if (lhs == "@entity")
      builder.add_entity(rhs);
    else
      builder.add_edge(lhs, rhs);
  }
  if (in.bad()) throw InputError(source, 0, "read failure");
  try {
    return builder.build();
  } catch (const Error&) {
    throw InputError(source, 0, "empty graph");
  }
}

/// Writes every entity as an `@entity` line in id order, then all edges, so
/// re-reading into an empty table reproduces ids and adjacency order exactly.
inline void write_call_graph(std::ostream& out, const CallGraph& graph, const EntityTable& table) {
  out << "# crashloc call graph: " << graph.entity_count() << " entities, " << graph.edge_count()
      << " edges\n";
  for (std::uint32_t i = 0; i < graph.entity_count(); ++i)
    out << "@entity\t" << table.name(EntityId{i}) << '\n';
  for (const auto& [caller, callee] : graph.edges())
    out << table.name(caller) << '\t' << table.name(callee) << '\n';
}

/// Call depth of each entity reachable from one stack, keyed by entity id.
class DepthMap {
 public:
  struct Entry {
    EntityId entity;
    std::uint32_t depth;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  DepthMap() = default;
  DepthMap(std::string stack_id, std::vector<Entry> entries)
      : stack_id_(std::move(stack_id)), entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.entity < b.entity; });
  }

  const std::string& stack_id() const noexcept { return stack_id_; }
  std::span<const Entry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  std::optional<std::uint32_t> depth_of(EntityId id) const {
    const auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                                     [](const Entry& e, EntityId v) { return e.entity < v; });
    if (it == entries_.end() || it->entity != id) return std::nullopt;
    return it->depth;
  }

  bool contains(EntityId id) const { return depth_of(id).has_value(); }

  std::uint32_t max_depth() const noexcept {
    std::uint32_t m = 0;
    for (const auto& e : entries_) m = std::max(m, e.depth);
    return m;
  }

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  std::string stack_id_;
  std::vector<Entry> entries_;
};

/// Stack frames mapped onto graph entities. Seeds are deduplicated and keep
/// frame order; frames naming nothing in the graph land in `unresolved`.
struct ResolvedStack {
  std::string stack_id;
  std::vector<EntityId> seeds;
  std::vector<std::string> unresolved;
};

/// Maps frame strings to graph entities, exact or parameter-stripped.
class FrameResolver {
 public:
  FrameResolver(const CallGraph& graph, const EntityTable& table, MatchOptions options = {})
      : graph_(&graph), table_(&table), options_(options) {
    if (options_.strip_params) {
      for (std::uint32_t i = 0; i < graph.entity_count(); ++i) {
        const EntityId id{i};
        stripped_[std::string(strip_params(table.name(id)))].push_back(id);
      }
    }
  }

  ResolvedStack resolve(const StackTrace& stack) const {
    ResolvedStack out{stack.stack_id, {}, {}};
    std::unordered_set<EntityId> seen;
    auto add = [&](EntityId id) {
      if (seen.insert(id).second) out.seeds.push_back(id);
    };
    for (const auto& frame : stack.frames) {
      bool matched = false;
      if (options_.strip_params) {
        if (auto it = stripped_.find(std::string(strip_params(frame))); it != stripped_.end()) {
          for (EntityId id : it->second) add(id);
          matched = true;
        }
      } else if (auto id = table_->find(frame); id && graph_->contains(*id)) {
        add(*id);
        matched = true;
      }
      if (!matched) out.unresolved.push_back(frame);
    }
    return out;
  }

 private:
  const CallGraph* graph_;
  const EntityTable* table_;
  MatchOptions options_;
  std::unordered_map<std::string, std::vector<EntityId>> stripped_;
};

inline constexpr std::uint32_t kUnbounded = std::numeric_limits<std::uint32_t>::max();

/// Multi-source breadth-first search along caller->callee edges. Level k is
/// built from the callees of level k-1; each entity keeps its first (least)
/// depth. Stops after `horizon` levels or when a level comes up empty.
inline DepthMap compute_call_depths(const CallGraph& graph, const ResolvedStack& stack,
                                    std::uint32_t horizon) {
  if (stack.seeds.empty()) throw Error("empty seed set");
  std::vector<std::uint32_t> depth(graph.entity_count(), kUnbounded);
  std::vector<DepthMap::Entry> entries;
  std::vector<EntityId> frontier;
  for (EntityId s : stack.seeds) {
    if (!graph.contains(s)) throw std::invalid_argument("seed is not a graph entity");
    if (depth[s.value] == kUnbounded) {
      depth[s.value] = 0;
      frontier.push_back(s);
      entries.push_back({s, 0});
    }
  }
  std::vector<EntityId> next;
  for (std::uint32_t k = 1; k <= horizon && !frontier.empty(); ++k) {
    next.clear();
    for (EntityId f : frontier) {
      for (EntityId callee : graph.callees(f)) {
        if (depth[callee.value] != kUnbounded) continue;
        depth[callee.value] = k;
        next.push_back(callee);
        entries.push_back({callee, k});
      }
    }
    frontier.swap(next);
    if (k == kUnbounded) break;
  }
  return DepthMap(stack.stack_id, std::move(entries));
}

inline DepthMap compute_call_depths(const CallGraph& graph, const EntityTable& table,
                                    const StackTrace& stack, std::uint32_t horizon,
                                    MatchOptions options = {}) {
  return compute_call_depths(graph, FrameResolver(graph, table, options).resolve(stack), horizon);
}

/// Smallest depth at which expanding `stack` stops adding entities.
inline std::uint32_t expansion_fixpoint(const CallGraph& graph, const ResolvedStack& stack) {
  return compute_call_depths(graph, stack, kUnbounded).max_depth();
}

}  // namespace crashloc
