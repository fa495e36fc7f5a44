#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "crashloc/entity.hpp"

namespace crashloc {

enum class TraceLabel { pass, fail };
enum class TraceOrigin { observed, expanded };

inline std::string_view to_string(TraceLabel label) {
  return label == TraceLabel::pass ? "pass" : "fail";
}
inline std::string_view to_string(TraceOrigin origin) {
  return origin == TraceOrigin::observed ? "observed" : "expanded";
}

/// One row of the program spectra: the set of entities a run hit.
struct ExecutionTrace {
  std::string trace_id;
  std::vector<EntityId> hits;  // sorted, unique
  TraceLabel label = TraceLabel::pass;
  TraceOrigin origin = TraceOrigin::observed;

  bool hit(EntityId id) const { return std::binary_search(hits.begin(), hits.end(), id); }

  friend bool operator==(const ExecutionTrace&, const ExecutionTrace&) = default;
};

inline void normalize_hits(std::vector<EntityId>& hits) {
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
}

inline ExecutionTrace make_trace(std::string id, std::vector<EntityId> hits, TraceLabel label,
                                 TraceOrigin origin = TraceOrigin::observed) {
  normalize_hits(hits);
  return ExecutionTrace{std::move(id), std::move(hits), label, origin};
}

}  // namespace crashloc
