#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crashloc {

/// Crash call stack as reported: frames[0] is the crash signature (top frame).
struct StackTrace {
  std::string stack_id;
  std::vector<std::string> frames;
  /// Fault bucket the report belongs to, when the producer knows it.
  std::optional<std::string> fault_id;

  friend bool operator==(const StackTrace&, const StackTrace&) = default;
};

/// How frame strings are matched against call-graph names.
struct MatchOptions {
  /// Compare only the text before the first '(' on both sides.
  bool strip_params = false;
};

/// "ns::Foo::bar(int, char*)" -> "ns::Foo::bar". Names without '(' pass through.
inline std::string_view strip_params(std::string_view name) {
  const auto paren = name.find('(');
  if (paren == std::string_view::npos) return name;
  auto head = name.substr(0, paren);
  while (!head.empty() && head.back() == ' ') head.remove_suffix(1);
  return head;
}

}  // namespace crashloc
