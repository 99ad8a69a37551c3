#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>

namespace manet {

/// Tagged integer identifier. Two ids with different tags do not convert
/// into each other, which keeps node and connection indices apart.
template <typename Tag>
struct StrongId
{
  std::uint32_t value{std::numeric_limits<std::uint32_t>::max ()};

  constexpr StrongId () = default;
  constexpr explicit StrongId (std::uint32_t v) : value (v) {}

  constexpr bool IsValid () const { return value != std::numeric_limits<std::uint32_t>::max (); }
  constexpr auto operator<=> (const StrongId &) const = default;
};

struct NodeTag;
struct ConnectionTag;

using NodeId = StrongId<NodeTag>;
using ConnectionId = StrongId<ConnectionTag>;

/// Simulated seconds.
using SimTime = double;

}  // namespace manet

template <typename Tag>
struct std::hash<manet::StrongId<Tag>>
{
  std::size_t operator() (manet::StrongId<Tag> id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
