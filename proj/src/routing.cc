#include "manet/routing.h"

#include "manet/aodv.h"
#include "manet/dsr.h"
#include "manet/network.h"

namespace manet {

RoutingProtocol::RoutingProtocol (Network &net) : m_net (net), m_heard (net.GetWorld ().NodeCount ()) {}

void
RoutingProtocol::Start ()
{
  const RoutingConfig &cfg = m_net.Config ().routing;
  if (!cfg.helloEnabled)
    return;
  // Random phases so beacons do not all fire in the same instant.
  RngStream phases (m_net.Seed (), "hello");
  for (std::uint32_t n = 0; n < m_heard.size (); ++n)
    {
      const double phase = phases.Uniform (0.0, cfg.helloInterval);
      m_net.Sim ().Schedule (phase, EventKind::kTimerExpiry, [this, n] { ProcessHelloTimers (NodeId{n}); });
    }
}

void
RoutingProtocol::ProcessHelloTimers (NodeId node)
{
  const RoutingConfig &cfg = m_net.Config ().routing;
  const SimTime now = m_net.Now ();

  m_net.Originate (ControlKind::kHello);
  ++m_net.Metrics ().controlTransmissions[static_cast<std::size_t> (ControlKind::kHello)];
  for (NodeId m : m_net.GetWorld ().Neighbors (node, now))
    m_heard[m.value][node.value] = now;

  std::vector<NodeId> lost;
  auto &table = m_heard[node.value];
  for (auto it = table.begin (); it != table.end ();)
    {
      if (now - it->second >= cfg.allowedMisses * cfg.helloInterval)
        {
          lost.push_back (NodeId{it->first});
          it = table.erase (it);
        }
      else
        ++it;
    }
  for (NodeId m : lost)
    if (!ConnectionsUsingLink (node, m).empty ())
      OnLinkBreak (node, m, nullptr);

  m_net.Sim ().ScheduleIn (cfg.helloInterval, EventKind::kTimerExpiry, [this, node] { ProcessHelloTimers (node); });
}

std::vector<NodeId>
RoutingProtocol::HeardNeighbors (NodeId node) const
{
  std::vector<NodeId> out;
  for (const auto &[m, t] : m_heard.at (node.value))
    out.push_back (NodeId{m});
  return out;
}

void
RoutingProtocol::StartConnection (ConnectionId conn)
{
  const Connection &c = m_net.Connections ().Get (conn);
  if (c.IsClosed ())
    return;
  InitiateDiscovery (c.src, c.dest, conn, [this, conn] (const DiscoveryResult &r) {
    if (r.status == DiscoveryStatus::kUnreachable)
      m_net.Connections ().Teardown (conn, TeardownReason::kUnreachable);
  });
}

DiscoveryHandle
RoutingProtocol::InitiateDiscovery (NodeId src, NodeId dest, ConnectionId conn, DiscoveryCallback cb)
{
  if (src == dest)
    throw SimulationError ("discovery toward self");
  if (DiscoveryPending (src, conn))
    throw SimulationError ("discovery already pending for this connection");
  CancelDiscoveries (conn);
  ++m_net.Metrics ().connectionRequests;
  const Connection &c = m_net.Connections ().Get (conn);
  m_net.Log ().Append (LogKind::kDiscoveryStart, conn.value, src.value, 0, c.priority);

  Discovery d;
  d.kind = DiscoveryKind::kSource;
  d.initiator = src;
  d.dest = dest;
  d.conn = conn;
  d.prefix = {src};
  d.maxAttempts = 1 + m_net.Config ().routing.rreqRetries;
  d.done = std::move (cb);
  return Launch (std::move (d));
}

DiscoveryHandle
RoutingProtocol::InitiateRepair (NodeId initiator, ConnectionId conn, std::vector<NodeId> prefix, DiscoveryCallback cb)
{
  if (DiscoveryPending (initiator, conn))
    throw SimulationError ("repair already pending at this node");
  const Connection &c = m_net.Connections ().Get (conn);
  if (prefix.empty () || prefix.back () != initiator || initiator == c.dest)
    throw SimulationError ("malformed repair prefix");
  m_net.Log ().Append (LogKind::kLocalRepair, conn.value, initiator.value, 0, c.priority);

  Discovery d;
  d.kind = DiscoveryKind::kLocalRepair;
  d.initiator = initiator;
  d.dest = c.dest;
  d.conn = conn;
  d.prefix = std::move (prefix);
  d.maxAttempts = 1 + m_net.Config ().routing.repairRetries;
  d.done = std::move (cb);
  return Launch (std::move (d));
}

DiscoveryHandle
RoutingProtocol::Launch (Discovery d)
{
  const DiscoveryHandle h = m_nextHandle++;
  d.handle = h;
  d.attempts = 1;
  Discovery &stored = m_discoveries.emplace (h, std::move (d)).first->second;
  SendRequest (stored);
  ScheduleTimeout (h, 1);
  return h;
}

void
RoutingProtocol::ScheduleTimeout (DiscoveryHandle h, int attempt)
{
  m_net.Sim ().ScheduleIn (m_net.Config ().routing.discoveryTimeout, EventKind::kTimerExpiry, [this, h, attempt] {
    Discovery *d = FindDiscovery (h);
    if (d == nullptr || d->attempts != attempt || d->committed)
      return;
    if (d->attempts < d->maxAttempts)
      {
        ++d->attempts;
        SendRequest (*d);
        ScheduleTimeout (h, d->attempts);
        return;
      }
    Finish (h, DiscoveryStatus::kUnreachable);
  });
}

bool
RoutingProtocol::OnCandidate (DiscoveryHandle h, const std::vector<NodeId> &fullPath)
{
  Discovery *d = FindDiscovery (h);
  if (d == nullptr)
    return false;
  const std::size_t hops = fullPath.size () - 1;
  if (d->committed && hops >= d->committedHops)
    return false;
  if (!m_net.CommitRoute (d->conn, fullPath))
    return false;
  const bool first = !d->committed;
  d->committed = true;
  d->committedHops = hops;
  if (!CollectsMultipleReplies ())
    Finish (h, DiscoveryStatus::kSuccess);
  else if (first)
    m_net.Sim ().ScheduleIn (m_net.Config ().routing.replyWait, EventKind::kTimerExpiry, [this, h] {
      if (FindDiscovery (h) != nullptr)
        Finish (h, DiscoveryStatus::kSuccess);
    });
  return true;
}

void
RoutingProtocol::Finish (DiscoveryHandle h, DiscoveryStatus status)
{
  auto it = m_discoveries.find (h);
  if (it == m_discoveries.end ())
    return;
  Discovery d = std::move (it->second);
  m_discoveries.erase (it);
  if (d.kind == DiscoveryKind::kSource)
    {
      const Connection &c = m_net.Connections ().Get (d.conn);
      m_net.Log ().Append (LogKind::kDiscoveryEnd, d.conn.value, d.initiator.value, 0, c.priority,
                           status == DiscoveryStatus::kSuccess ? 1 : 0);
    }
  if (!d.done)
    return;
  // Completion runs as its own event so callers never re-enter a handler.
  DiscoveryResult result{h, status, d.committedHops};
  m_net.Sim ().ScheduleIn (0.0, EventKind::kTimerExpiry,
                           [done = std::move (d.done), result] { done (result); });
}

RoutingProtocol::Discovery *
RoutingProtocol::FindDiscovery (NodeId initiator, ConnectionId conn)
{
  for (auto &[h, d] : m_discoveries)
    if (d.initiator == initiator && d.conn == conn)
      return &d;
  return nullptr;
}

RoutingProtocol::Discovery *
RoutingProtocol::FindDiscovery (DiscoveryHandle h)
{
  auto it = m_discoveries.find (h);
  return it == m_discoveries.end () ? nullptr : &it->second;
}

bool
RoutingProtocol::DiscoveryPending (NodeId initiator, ConnectionId conn) const
{
  for (const auto &[h, d] : m_discoveries)
    if (d.initiator == initiator && d.conn == conn)
      return true;
  return false;
}

bool
RoutingProtocol::AnyDiscoveryPending (ConnectionId conn) const
{
  for (const auto &[h, d] : m_discoveries)
    if (d.conn == conn)
      return true;
  return false;
}

void
RoutingProtocol::CancelDiscoveries (ConnectionId conn, std::optional<NodeId> except)
{
  std::vector<DiscoveryHandle> victims;
  for (const auto &[h, d] : m_discoveries)
    if (d.conn == conn && (!except || d.initiator != *except))
      victims.push_back (h);
  for (DiscoveryHandle h : victims)
    Finish (h, DiscoveryStatus::kCancelled);
}

void
RoutingProtocol::OnConnectionClosed (ConnectionId conn)
{
  CancelDiscoveries (conn);
}

void
RoutingProtocol::RestartFromSource (ConnectionId conn)
{
  const Connection &c = m_net.Connections ().Get (conn);
  if (c.IsClosed () || DiscoveryPending (c.src, conn))
    return;
  m_net.Connections ().BeginRepair (conn);
  InitiateDiscovery (c.src, c.dest, conn, [this, conn] (const DiscoveryResult &r) {
    if (r.status == DiscoveryStatus::kUnreachable)
      m_net.Connections ().Teardown (conn, TeardownReason::kUnreachable);
  });
}

std::unique_ptr<RoutingProtocol>
MakeRoutingProtocol (ProtocolKind kind, Network &net)
{
  switch (kind)
    {
    case ProtocolKind::kAodv:
      return std::make_unique<AodvProtocol> (net);
    case ProtocolKind::kDsr:
      return std::make_unique<DsrProtocol> (net);
    case ProtocolKind::kNew:
      return std::make_unique<NewProtocol> (net);
    }
  throw SimulationError ("unknown protocol");
}

}  // namespace manet
