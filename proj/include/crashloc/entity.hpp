#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace crashloc {

/// Dense index of an interned code entity (function or statement label).
struct EntityId {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(EntityId, EntityId) = default;
};

namespace detail {
struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};
}  // namespace detail

/// Bijection between entity names and contiguous ids, assigned in
/// first-appearance order.
class EntityTable {
 public:
  EntityId intern(std::string_view name) {
    if (name.empty()) throw std::invalid_argument("entity name must be non-empty");
    if (auto it = index_.find(name); it != index_.end()) return it->second;
    const EntityId id{static_cast<std::uint32_t>(names_.size())};
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }

  std::optional<EntityId> find(std::string_view name) const {
    if (auto it = index_.find(name); it != index_.end()) return it->second;
    return std::nullopt;
  }

  const std::string& name(EntityId id) const { return names_.at(id.value); }

  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, EntityId, detail::StringHash, std::equal_to<>> index_;
};

}  // namespace crashloc

template <>
struct std::hash<crashloc::EntityId> {
  std::size_t operator()(crashloc::EntityId id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
