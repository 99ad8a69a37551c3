#pragma once

#include <deque>
#include <map>
#include <unordered_set>

#include "manet/connection_mgr.h"
#include "manet/routing.h"

namespace manet {

struct RouteEntry
{
  NodeId dest;
  NodeId nextHop;
  std::uint32_t hopCount{1};
  std::uint32_t destSeqNo{0};
  SimTime expiresAt{0.0};
  bool valid{false};
};

/**
 * AODV with flooding route discovery and destination-only replies. Routing
 * state is kept per (destination, connection) so that every connection's
 * admitted path stays pinned even when two connections share a destination.
 */
class AodvProtocol : public RoutingProtocol
{
public:
  explicit AodvProtocol (Network &net);

  std::string_view Name () const override { return "aodv"; }
  void Receive (NodeId at, NodeId from, const ControlMessage &msg) override;
  ForwardDecision NextHop (NodeId at, DataPacket &pkt) override;
  bool OnLinkBreak (NodeId node, NodeId lost, const DataPacket *pkt) override;
  void OnDataForwarded (NodeId at, NodeId next, const DataPacket &pkt) override;
  std::optional<std::size_t> RouteHops (NodeId at, ConnectionId conn) const override;
  bool CheckLoopFree () const override;
  void OnRouteCommitted (ConnectionId conn, const std::vector<NodeId> &path) override;

  /// Forwarding entry `at` uses for data of `conn`; null when none.
  const RouteEntry *Lookup (NodeId at, ConnectionId conn) const;
  /// Follow forwarding entries of `conn` from `from`; nullopt on a gap or a
  /// cycle.
  std::optional<std::vector<NodeId>> WalkRoute (NodeId from, ConnectionId conn) const;

protected:
  struct RouteKey
  {
    std::uint32_t dest;
    std::uint32_t conn;
    auto operator<=> (const RouteKey &) const = default;
  };

  struct NodeState
  {
    std::uint32_t seqNo{0};
    std::uint32_t rreqCounter{0};
    std::map<RouteKey, RouteEntry> learned;        ///< discovery state (reverse and forward)
    std::map<std::uint32_t, RouteEntry> active;    ///< data forwarding, keyed by connection
    std::unordered_set<std::uint64_t> seen;
    std::map<std::uint32_t, SimTime> lastFailureNotice;
  };

  void SendRequest (Discovery &d) override;
  bool CollectsMultipleReplies () const override { return false; }
  std::vector<ConnectionId> ConnectionsUsingLink (NodeId node, NodeId next) const override;

  void HandleRreq (NodeId at, NodeId from, const ControlMessage &msg);
  void HandleRrep (NodeId at, NodeId from, const ControlMessage &msg);
  virtual void HandleRouteFailure (NodeId at, NodeId from, const ControlMessage &msg);
  /// A packet reached `at`, which has no usable route for it.
  virtual ForwardDecision HandleNoRoute (NodeId at, DataPacket &pkt);
  /// Per-connection reaction at `node` to a detected break toward `lost`.
  virtual void HandleBrokenRoute (NodeId node, NodeId lost, ConnectionId conn);

  /// Originate a route failure at `at` and send it one hop upstream.
  void SendFailureUpstream (NodeId at, ConnectionId conn);
  /// Invalidate the forwarding entries of `node` that use `lost`; returns the
  /// affected connections.
  std::vector<ConnectionId> InvalidateLink (NodeId node, NodeId lost);
  bool UpdateRoute (NodeId at, NodeId dest, ConnectionId conn, NodeId nextHop, std::uint32_t hops,
                    std::uint32_t seqNo);
  const RouteEntry *Learned (NodeId at, NodeId dest, ConnectionId conn) const;
  /// Walk discovery-learned forward entries from `from` to `dest`.
  std::optional<std::vector<NodeId>> WalkLearned (NodeId from, NodeId dest, ConnectionId conn) const;
  bool Usable (const RouteEntry &e) const;
  bool FailureNoticeAllowed (NodeId at, ConnectionId conn);
  /// Whether `at` may forward a request for `conn` originated by `origin`.
  bool RequestAdmissible (NodeId at, const ControlMessage &msg) const;

  std::vector<NodeState> m_nodes;
};

/**
 * AODV extended with multi-connection route maintenance:
 *  - a source whose own link breaks re-establishes all of its live
 *    connections, serially by priority or in parallel;
 *  - an on-path node adjacent to a break repairs locally, acting as source
 *    for the rest of the route, and buffers packets while it does;
 *  - a failed local repair sends ROUTE_FAILURE to the source, which then
 *    rediscovers from scratch;
 *  - admission renegotiates bandwidth and may evict lower-priority traffic.
 */
class NewProtocol : public AodvProtocol
{
public:
  explicit NewProtocol (Network &net);

  std::string_view Name () const override { return "new"; }
  bool OnLinkBreak (NodeId node, NodeId lost, const DataPacket *pkt) override;
  void OnConnectionClosed (ConnectionId conn) override;

  Reestablisher &Batches () { return m_reestablisher; }
  bool RepairPending (NodeId at, ConnectionId conn) const;
  std::size_t BufferedAt (NodeId at, ConnectionId conn) const;

protected:
  void HandleRouteFailure (NodeId at, NodeId from, const ControlMessage &msg) override;
  ForwardDecision HandleNoRoute (NodeId at, DataPacket &pkt) override;
  void HandleBrokenRoute (NodeId node, NodeId lost, ConnectionId conn) override;

private:
  using BufferKey = std::pair<std::uint32_t, std::uint32_t>;  // (node, conn)

  void SourceMoved (NodeId src, const std::vector<ConnectionId> &broken);
  void StartLocalRepair (NodeId initiator, ConnectionId conn);
  void HandOffDownstream (NodeId node, NodeId lost, ConnectionId conn);
  Reestablisher::Launcher MakeLauncher ();
  void SendFailureToSource (NodeId at, ConnectionId conn);
  bool Hold (NodeId at, const DataPacket &pkt);
  void Flush (NodeId at, ConnectionId conn);
  void DropBuffer (NodeId at, ConnectionId conn);
  void DropBuffersOf (ConnectionId conn);

  Reestablisher m_reestablisher;
  std::map<BufferKey, std::deque<DataPacket>> m_buffers;
  std::map<BufferKey, bool> m_repairing;
};

}  // namespace manet
