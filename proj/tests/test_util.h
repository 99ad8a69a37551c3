#pragma once

#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "manet/network.h"

namespace manet::test {

/// Stationary node placement for hand-built scenarios.
struct NodeSpot
{
  double x;
  double y;
  double range{250.0};
};

inline World
StaticWorld (const std::vector<NodeSpot> &spots, Arena arena = {})
{
  World w (arena, MobilityConfig{0.0, 0.0, 10.0}, 1);
  for (const NodeSpot &s : spots)
    w.AddScriptedNode (Position{s.x, s.y}, s.range, MobilityState{});
  return w;
}

inline NetworkConfig
QuietConfig (ProtocolKind protocol)
{
  NetworkConfig cfg;
  cfg.protocol = protocol;
  cfg.debugInvariants = true;
  cfg.checkLoops = true;
  return cfg;
}

inline std::unique_ptr<Network>
MakeStaticNetwork (ProtocolKind protocol, const std::vector<NodeSpot> &spots, double capacity = 1e6,
                   std::optional<NetworkConfig> cfg = std::nullopt)
{
  return std::make_unique<Network> (cfg ? *cfg : QuietConfig (protocol), StaticWorld (spots),
                                    std::vector<double> (spots.size (), capacity), 7);
}

/// Hop distance by breadth-first search over the symmetric unit-disc graph.
inline std::optional<std::size_t>
BfsHops (const std::vector<NodeSpot> &spots, std::size_t src, std::size_t dest)
{
  const std::size_t n = spots.size ();
  auto linked = [&] (std::size_t a, std::size_t b) {
    const double dx = spots[a].x - spots[b].x;
    const double dy = spots[a].y - spots[b].y;
    const double d2 = dx * dx + dy * dy;
    return d2 <= spots[a].range * spots[a].range && d2 <= spots[b].range * spots[b].range;
  };
  std::vector<std::size_t> dist (n, std::numeric_limits<std::size_t>::max ());
  std::deque<std::size_t> q{src};
  dist[src] = 0;
  while (!q.empty ())
    {
      const std::size_t u = q.front ();
      q.pop_front ();
      for (std::size_t v = 0; v < n; ++v)
        if (v != u && dist[v] == std::numeric_limits<std::size_t>::max () && linked (u, v))
          {
            dist[v] = dist[u] + 1;
            q.push_back (v);
          }
    }
  if (dist[dest] == std::numeric_limits<std::size_t>::max ())
    return std::nullopt;
  return dist[dest];
}

}  // namespace manet::test
