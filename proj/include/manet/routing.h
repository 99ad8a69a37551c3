#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "manet/config.h"
#include "manet/ids.h"
#include "manet/messages.h"

namespace manet {

class Network;

using DiscoveryHandle = std::uint64_t;

enum class DiscoveryKind : std::uint8_t
{
  kSource,       ///< counts as a connection request
  kLocalRepair,  ///< started by an on-path node; does not count
};

enum class DiscoveryStatus : std::uint8_t
{
  kSuccess,
  kUnreachable,
  kCancelled,
};

struct DiscoveryResult
{
  DiscoveryHandle handle{0};
  DiscoveryStatus status{DiscoveryStatus::kUnreachable};
  std::size_t hops{0};
};

using DiscoveryCallback = std::function<void (const DiscoveryResult &)>;

struct ForwardDecision
{
  enum class Kind : std::uint8_t
  {
    kForward,
    kNoRoute,  ///< packet is lost; the protocol already reacted
    kHeld,     ///< the protocol buffered the packet
  };
  Kind kind{Kind::kNoRoute};
  NodeId next;
};

/**
 * Shared machinery of the reactive protocols: discovery bookkeeping with
 * retries and the reply-wait window, HELLO beaconing with loss detection,
 * and the hooks the data plane calls into.
 */
class RoutingProtocol
{
public:
  explicit RoutingProtocol (Network &net);
  virtual ~RoutingProtocol () = default;
  RoutingProtocol (const RoutingProtocol &) = delete;
  RoutingProtocol &operator= (const RoutingProtocol &) = delete;

  virtual std::string_view Name () const = 0;

  /// Schedule the HELLO timers of every node.
  void Start ();
  /// One HELLO tick of `node`: beacon, then declare silent neighbors lost.
  void ProcessHelloTimers (NodeId node);
  /// Neighbors `node` currently considers alive.
  std::vector<NodeId> HeardNeighbors (NodeId node) const;

  /// Initial discovery when a connection starts.
  virtual void StartConnection (ConnectionId conn);

  /// Flood a route request for `conn` from its source. Counts one connection
  /// request. Throws when a discovery for (src, conn) is already pending.
  DiscoveryHandle InitiateDiscovery (NodeId src, NodeId dest, ConnectionId conn, DiscoveryCallback cb = {});
  /// Repair discovery run by an on-path node for the rest of the route.
  /// `prefix` is the committed path from the source up to `initiator`.
  /// Does not count as a connection request.
  DiscoveryHandle InitiateRepair (NodeId initiator, ConnectionId conn, std::vector<NodeId> prefix,
                                  DiscoveryCallback cb = {});
  bool DiscoveryPending (NodeId initiator, ConnectionId conn) const;
  bool AnyDiscoveryPending (ConnectionId conn) const;
  void CancelDiscoveries (ConnectionId conn, std::optional<NodeId> except = std::nullopt);

  virtual void Receive (NodeId at, NodeId from, const ControlMessage &msg) = 0;
  virtual ForwardDecision NextHop (NodeId at, DataPacket &pkt) = 0;
  /// Link (node -> lost) failed. `pkt` is the packet that hit the break, if
  /// any; returns true when the protocol keeps it.
  virtual bool OnLinkBreak (NodeId node, NodeId lost, const DataPacket *pkt) = 0;
  virtual void OnDataForwarded (NodeId /*at*/, NodeId /*next*/, const DataPacket & /*pkt*/) {}
  virtual void OnConnectionClosed (ConnectionId conn);
  /// Called after `path` became the committed route of `conn`.
  virtual void OnRouteCommitted (ConnectionId /*conn*/, const std::vector<NodeId> & /*path*/) {}

  /// Hop count of the route `at` would use for (dest, conn); nullopt when
  /// none. Used by tests and the loop checker.
  virtual std::optional<std::size_t> RouteHops (NodeId at, ConnectionId conn) const = 0;
  /// True when no next-hop chain for any live connection revisits a node.
  virtual bool CheckLoopFree () const { return true; }

protected:
  struct Discovery
  {
    DiscoveryHandle handle{0};
    DiscoveryKind kind{DiscoveryKind::kSource};
    NodeId initiator;
    NodeId dest;
    ConnectionId conn;
    std::vector<NodeId> prefix;  ///< committed path up to and including initiator
    int attempts{0};
    int maxAttempts{1};
    std::uint32_t rreqId{0};
    bool committed{false};
    std::size_t committedHops{0};
    DiscoveryCallback done;
  };

  DiscoveryHandle Launch (Discovery d);
  /// A reply reached the initiator carrying the full source-to-dest path.
  /// Returns true when the path was committed.
  bool OnCandidate (DiscoveryHandle h, const std::vector<NodeId> &fullPath);
  Discovery *FindDiscovery (NodeId initiator, ConnectionId conn);
  Discovery *FindDiscovery (DiscoveryHandle h);
  void Finish (DiscoveryHandle h, DiscoveryStatus status);

  /// Send (or resend) the route request of `d`.
  virtual void SendRequest (Discovery &d) = 0;
  /// Whether more than one reply per request can arrive; when false the
  /// discovery completes at its first committed reply.
  virtual bool CollectsMultipleReplies () const = 0;
  /// Connections whose route at `node` uses `next` as next hop.
  virtual std::vector<ConnectionId> ConnectionsUsingLink (NodeId node, NodeId next) const = 0;
  /// The source lost its route for `conn`: release and rediscover.
  void RestartFromSource (ConnectionId conn);

  Network &m_net;

private:
  void ScheduleTimeout (DiscoveryHandle h, int attempt);

  std::map<DiscoveryHandle, Discovery> m_discoveries;
  DiscoveryHandle m_nextHandle{1};
  /// heard[n][m] = last time n received a HELLO from m
  std::vector<std::map<std::uint32_t, SimTime>> m_heard;
};

std::unique_ptr<RoutingProtocol> MakeRoutingProtocol (ProtocolKind kind, Network &net);

}  // namespace manet
