#pragma once

#include <list>
#include <map>
#include <optional>
#include <unordered_set>
#include <vector>

#include "manet/routing.h"

namespace manet {

/// Path cache of one DSR node. Every stored path starts at the owner; a
/// lookup for any node on a stored path returns the truncated prefix.
/// Least-recently-used paths are evicted beyond `capacity`.
class RouteCache
{
public:
  explicit RouteCache (std::size_t capacity = 64) : m_capacity (capacity) {}

  void Insert (std::vector<NodeId> path);
  /// Shortest cached route from the owner to `dest`, skipping routes that
  /// touch any node in `avoid` (other than the owner). Marks it used.
  std::optional<std::vector<NodeId>> Find (NodeId dest, const std::vector<NodeId> &avoid = {});
  /// Remove every path containing the directed link from -> to.
  void PurgeLink (NodeId from, NodeId to);

  std::size_t Size () const { return m_paths.size (); }
  std::size_t Capacity () const { return m_capacity; }
  bool Contains (const std::vector<NodeId> &path) const;

private:
  std::size_t m_capacity;
  std::list<std::vector<NodeId>> m_paths;  ///< front = most recently used
};

/**
 * Simplified DSR: source routes carried in packets, path caches with LRU
 * eviction, replies from the target for every request copy and from
 * intermediate caches, and ROUTE_ERROR back to the source on a failed hop.
 */
class DsrProtocol : public RoutingProtocol
{
public:
  explicit DsrProtocol (Network &net);

  std::string_view Name () const override { return "dsr"; }
  void StartConnection (ConnectionId conn) override;
  void Receive (NodeId at, NodeId from, const ControlMessage &msg) override;
  ForwardDecision NextHop (NodeId at, DataPacket &pkt) override;
  bool OnLinkBreak (NodeId node, NodeId lost, const DataPacket *pkt) override;
  std::optional<std::size_t> RouteHops (NodeId at, ConnectionId conn) const override;

  RouteCache &Cache (NodeId node) { return m_nodes.at (node.value).cache; }
  /// Reply from `node`'s cache to a request that arrived with
  /// `rreq.accumulatedRoute`; nullopt when the cache has no loop-free route.
  std::optional<ControlMessage> ReplyFromCache (NodeId node, const ControlMessage &rreq);

protected:
  void SendRequest (Discovery &d) override;
  bool CollectsMultipleReplies () const override { return true; }
  std::vector<ConnectionId> ConnectionsUsingLink (NodeId node, NodeId next) const override;

private:
  struct NodeState
  {
    std::uint32_t rreqCounter{0};
    RouteCache cache;
    std::unordered_set<std::uint64_t> seen;
  };

  void HandleRreq (NodeId at, NodeId from, const ControlMessage &msg);
  void HandleRrep (NodeId at, const ControlMessage &msg);
  void HandleRouteError (NodeId at, const ControlMessage &msg);
  void SourceRouteBroken (ConnectionId conn, NodeId from, NodeId to);
  void SendReplyAlong (NodeId at, ControlMessage rrep);

  std::vector<NodeState> m_nodes;
  std::map<std::pair<std::uint32_t, std::uint32_t>, SimTime> m_lastError;
};

}  // namespace manet
