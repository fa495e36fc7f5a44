#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "crashloc/detail/text.hpp"
#include "crashloc/entity.hpp"
#include "crashloc/error.hpp"
#include "crashloc/trace.hpp"

namespace crashloc {

namespace detail {

inline nlohmann::json parse_json_line(const std::string& line, const std::string& source,
                                      std::size_t lineno) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(source, lineno, std::string("invalid JSON: ") + e.what());
  }
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                   const std::string& source, std::size_t lineno) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string() || it->get_ref<const std::string&>().empty())
    throw InputError(source, lineno, std::string("missing or empty string field \"") + key + "\"");
  return it->get<std::string>();
}

inline std::vector<std::string> require_string_array(const nlohmann::json& obj, const char* key,
                                                     const std::string& source,
                                                     std::size_t lineno) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_array() || it->empty())
    throw InputError(source, lineno, std::string("field \"") + key + "\" must be a non-empty array");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string() || v.get_ref<const std::string&>().empty())
      throw InputError(source, lineno,
                       std::string("field \"") + key + "\" must hold non-empty strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace detail

/// Reads JSON Lines trace records `{"id": ..., "hits": [...]}` with optional
/// `"label"` ("pass"/"fail") and `"origin"` ("observed"/"expanded") fields.
/// Hit names are interned into `table`; duplicate hits collapse.
inline std::vector<ExecutionTrace> read_traces(std::istream& in, EntityTable& table,
                                               const std::string& source,
                                               TraceLabel default_label = TraceLabel::pass) {
  std::vector<ExecutionTrace> traces;
  std::string line;
  std::size_t lineno = 0;
  while (detail::read_line(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto obj = detail::parse_json_line(line, source, lineno);
    if (!obj.is_object()) throw InputError(source, lineno, "record must be a JSON object");
    auto id = detail::require_string(obj, "id", source, lineno);
    const auto names = detail::require_string_array(obj, "hits", source, lineno);

    TraceLabel label = default_label;
    if (auto it = obj.find("label"); it != obj.end()) {
      if (*it == "pass")
        label = TraceLabel::pass;
      else if (*it == "fail")
        label = TraceLabel::fail;
      else
        throw InputError(source, lineno, "label must be \"pass\" or \"fail\"");
    }
    TraceOrigin origin = TraceOrigin::observed;
    if (auto it = obj.find("origin"); it != obj.end()) {
      if (*it == "observed")
        origin = TraceOrigin::observed;
      else if (*it == "expanded")
        origin = TraceOrigin::expanded;
      else
        throw InputError(source, lineno, "origin must be \"observed\" or \"expanded\"");
    }
    if (origin == TraceOrigin::expanded && label != TraceLabel::fail)
      throw InputError(source, lineno, "expanded traces must be labeled fail");

    std::vector<EntityId> hits;
    hits.reserve(names.size());
    for (const auto& n : names) hits.push_back(table.intern(n));
    traces.push_back(make_trace(std::move(id), std::move(hits), label, origin));
  }
  if (in.bad()) throw InputError(source, 0, "read failure");
  if (traces.empty()) throw InputError(source, 0, "no trace records");
  return traces;
}

/// One JSON object per line; hit names in entity-id order.
inline void write_traces(std::ostream& out, std::span<const ExecutionTrace> traces,
                         const EntityTable& table) {
  for (const auto& t : traces) {
    nlohmann::json hits = nlohmann::json::array();
    for (EntityId id : t.hits) hits.push_back(table.name(id));
    nlohmann::json obj{{"id", t.trace_id},
                       {"label", std::string(to_string(t.label))},
                       {"origin", std::string(to_string(t.origin))},
                       {"hits", std::move(hits)}};
    out << obj.dump() << '\n';
  }
}

}  // namespace crashloc
