#include "manet/aodv.h"

#include <algorithm>
#include <unordered_set>

#include "manet/network.h"

namespace manet {

namespace {

std::uint64_t
SeenKey (NodeId origin, std::uint32_t rreqId)
{
  return (static_cast<std::uint64_t> (origin.value) << 32) | rreqId;
}

std::optional<std::size_t>
IndexOf (const std::vector<NodeId> &path, NodeId n)
{
  auto it = std::find (path.begin (), path.end (), n);
  if (it == path.end ())
    return std::nullopt;
  return static_cast<std::size_t> (it - path.begin ());
}

}  // namespace

AodvProtocol::AodvProtocol (Network &net) : RoutingProtocol (net), m_nodes (net.GetWorld ().NodeCount ()) {}

// ---------------------------------------------------------------------------
// table helpers

bool
AodvProtocol::Usable (const RouteEntry &e) const
{
  return e.valid && m_net.Now () <= e.expiresAt;
}

const RouteEntry *
AodvProtocol::Lookup (NodeId at, ConnectionId conn) const
{
  const auto &active = m_nodes.at (at.value).active;
  auto it = active.find (conn.value);
  return it == active.end () ? nullptr : &it->second;
}

const RouteEntry *
AodvProtocol::Learned (NodeId at, NodeId dest, ConnectionId conn) const
{
  const auto &learned = m_nodes.at (at.value).learned;
  auto it = learned.find (RouteKey{dest.value, conn.value});
  return it == learned.end () ? nullptr : &it->second;
}

bool
AodvProtocol::UpdateRoute (NodeId at, NodeId dest, ConnectionId conn, NodeId nextHop, std::uint32_t hops,
                           std::uint32_t seqNo)
{
  RouteEntry &e = m_nodes[at.value].learned[RouteKey{dest.value, conn.value}];
  const bool fresher = !Usable (e) || seqNo > e.destSeqNo || (seqNo == e.destSeqNo && hops < e.hopCount);
  if (!fresher)
    return false;
  e = RouteEntry{dest, nextHop, hops, seqNo, m_net.Now () + m_net.Config ().routing.routeLifetime, true};
  return true;
}

std::optional<std::vector<NodeId>>
AodvProtocol::WalkLearned (NodeId from, NodeId dest, ConnectionId conn) const
{
  std::vector<NodeId> out{from};
  std::unordered_set<NodeId> visited{from};
  NodeId cur = from;
  while (cur != dest)
    {
      const RouteEntry *e = Learned (cur, dest, conn);
      if (e == nullptr || !Usable (*e) || !visited.insert (e->nextHop).second)
        return std::nullopt;
      cur = e->nextHop;
      out.push_back (cur);
    }
  return out;
}

std::optional<std::vector<NodeId>>
AodvProtocol::WalkRoute (NodeId from, ConnectionId conn) const
{
  const NodeId dest = m_net.Connections ().Get (conn).dest;
  std::vector<NodeId> out{from};
  std::unordered_set<NodeId> visited{from};
  NodeId cur = from;
  while (cur != dest)
    {
      const RouteEntry *e = Lookup (cur, conn);
      if (e == nullptr || !Usable (*e) || !visited.insert (e->nextHop).second)
        return std::nullopt;
      cur = e->nextHop;
      out.push_back (cur);
    }
  return out;
}

std::optional<std::size_t>
AodvProtocol::RouteHops (NodeId at, ConnectionId conn) const
{
  const RouteEntry *e = Lookup (at, conn);
  if (e == nullptr || !Usable (*e))
    return std::nullopt;
  return e->hopCount;
}

bool
AodvProtocol::CheckLoopFree () const
{
  for (const Connection &c : m_net.Connections ().All ())
    {
      if (!c.IsLive ())
        continue;
      std::unordered_set<NodeId> visited{c.src};
      NodeId cur = c.src;
      while (cur != c.dest)
        {
          const RouteEntry *e = Lookup (cur, c.id);
          if (e == nullptr || !Usable (*e))
            break;
          if (!visited.insert (e->nextHop).second)
            return false;
          cur = e->nextHop;
        }
    }
  return true;
}

void
AodvProtocol::OnRouteCommitted (ConnectionId conn, const std::vector<NodeId> &path)
{
  const NodeId dest = path.back ();
  const SimTime expires = m_net.Now () + m_net.Config ().routing.routeLifetime;
  const std::uint32_t destSeq = m_nodes[dest.value].seqNo;
  const std::uint32_t hops = static_cast<std::uint32_t> (path.size () - 1);
  for (std::uint32_t i = 0; i + 1 < path.size (); ++i)
    m_nodes[path[i].value].active[conn.value] = RouteEntry{dest, path[i + 1], hops - i, destSeq, expires, true};
}

std::vector<ConnectionId>
AodvProtocol::ConnectionsUsingLink (NodeId node, NodeId next) const
{
  std::vector<ConnectionId> out;
  for (const auto &[id, e] : m_nodes.at (node.value).active)
    {
      const ConnectionId conn{id};
      if (!e.valid || e.nextHop != next)
        continue;
      // stale entries left from an older path still forward but are not repaired
      const Connection &c = m_net.Connections ().Get (conn);
      if (c.IsLive () && std::find (c.path.begin (), c.path.end (), node) != c.path.end ())
        out.push_back (conn);
    }
  return out;
}

std::vector<ConnectionId>
AodvProtocol::InvalidateLink (NodeId node, NodeId lost)
{
  std::vector<ConnectionId> affected = ConnectionsUsingLink (node, lost);
  for (ConnectionId c : affected)
    {
      m_nodes[node.value].active[c.value].valid = false;
      m_net.Log ().Append (LogKind::kLinkBreak, c.value, node.value, 0, m_net.Connections ().Get (c).priority,
                           static_cast<int> (lost.value));
    }
  return affected;
}

bool
AodvProtocol::FailureNoticeAllowed (NodeId at, ConnectionId conn)
{
  auto &last = m_nodes[at.value].lastFailureNotice;
  const SimTime now = m_net.Now ();
  auto it = last.find (conn.value);
  if (it != last.end () && now - it->second < m_net.Config ().routing.failureNoticeInterval)
    return false;
  last[conn.value] = now;
  return true;
}

// ---------------------------------------------------------------------------
// discovery

void
AodvProtocol::SendRequest (Discovery &d)
{
  NodeState &s = m_nodes[d.initiator.value];
  ++s.rreqCounter;
  ++s.seqNo;
  d.rreqId = s.rreqCounter;
  s.seen.insert (SeenKey (d.initiator, d.rreqId));

  ControlMessage msg;
  msg.kind = ControlKind::kRreq;
  msg.rreqId = d.rreqId;
  msg.origin = d.initiator;
  msg.target = d.dest;
  msg.originSeqNo = s.seqNo;
  if (const RouteEntry *e = Learned (d.initiator, d.dest, d.conn))
    msg.destSeqNo = e->destSeqNo;
  msg.connection = d.conn;
  // Nodes already on the committed prefix may not be reused.
  msg.accumulatedRoute = d.prefix;
  m_net.Originate (ControlKind::kRreq);
  m_net.Broadcast (d.initiator, msg);
}

bool
AodvProtocol::RequestAdmissible (NodeId at, const ControlMessage &msg) const
{
  const ConnectionManager &conns = m_net.Connections ();
  const Connection &c = conns.Get (*msg.connection);
  if (c.IsClosed ())
    return false;
  if (std::find (msg.accumulatedRoute.begin (), msg.accumulatedRoute.end (), at) != msg.accumulatedRoute.end ())
    return false;
  if (conns.Ledger (at).GrantOf (c.id))
    return true;
  return conns.PreviewAdmit (at, c).Admitted ();
}

void
AodvProtocol::Receive (NodeId at, NodeId from, const ControlMessage &msg)
{
  switch (msg.kind)
    {
    case ControlKind::kRreq:
      HandleRreq (at, from, msg);
      break;
    case ControlKind::kRrep:
      HandleRrep (at, from, msg);
      break;
    case ControlKind::kRouteFailure:
      HandleRouteFailure (at, from, msg);
      break;
    case ControlKind::kHello:
      break;
    }
}

void
AodvProtocol::HandleRreq (NodeId at, NodeId from, const ControlMessage &msg)
{
  if (m_net.Config ().routing.requireBidirectional && !m_net.GetWorld ().Bidirectional (at, from, m_net.Now ()))
    return;
  NodeState &s = m_nodes[at.value];
  if (!s.seen.insert (SeenKey (msg.origin, msg.rreqId)).second)
    return;
  if (!RequestAdmissible (at, msg))
    return;

  const std::uint32_t hops = msg.hopCount + 1;
  const ConnectionId conn = *msg.connection;
  UpdateRoute (at, msg.origin, conn, from, hops, msg.originSeqNo);

  if (at == msg.target)
    {
      // Only the first copy is answered; it travelled the fewest hops.
      ++s.seqNo;
      ControlMessage rrep;
      rrep.kind = ControlKind::kRrep;
      rrep.rreqId = msg.rreqId;
      rrep.origin = msg.origin;
      rrep.target = at;
      rrep.destSeqNo = s.seqNo;
      rrep.connection = conn;
      m_net.Originate (ControlKind::kRrep);
      m_net.Unicast (at, from, rrep);
      return;
    }

  ControlMessage fwd = msg;
  fwd.hopCount = hops;
  m_net.Broadcast (at, fwd);
}

void
AodvProtocol::HandleRrep (NodeId at, NodeId from, const ControlMessage &msg)
{
  const ConnectionId conn = *msg.connection;
  const std::uint32_t hops = msg.hopCount + 1;
  UpdateRoute (at, msg.target, conn, from, hops, msg.destSeqNo);

  if (at == msg.origin)
    {
      Discovery *d = FindDiscovery (at, conn);
      if (d == nullptr || d->rreqId != msg.rreqId)
        return;
      std::optional<std::vector<NodeId>> suffix = WalkLearned (from, msg.target, conn);
      if (!suffix)
        return;
      std::vector<NodeId> full = d->prefix;
      full.insert (full.end (), suffix->begin (), suffix->end ());
      OnCandidate (d->handle, full);
      return;
    }

  const RouteEntry *rev = Learned (at, msg.origin, conn);
  if (rev == nullptr || !Usable (*rev))
    return;
  ControlMessage fwd = msg;
  fwd.hopCount = hops;
  m_net.Unicast (at, rev->nextHop, fwd);
}

// ---------------------------------------------------------------------------
// maintenance

void
AodvProtocol::SendFailureUpstream (NodeId at, ConnectionId conn)
{
  const Connection &c = m_net.Connections ().Get (conn);
  std::optional<std::size_t> idx = IndexOf (c.path, at);
  if (!idx || *idx == 0)
    return;
  ControlMessage msg;
  msg.kind = ControlKind::kRouteFailure;
  msg.origin = at;
  msg.target = c.dest;
  msg.connection = conn;
  msg.brokenFrom = at;
  m_net.Originate (ControlKind::kRouteFailure);
  m_net.Unicast (at, c.path[*idx - 1], msg);
}

bool
AodvProtocol::OnLinkBreak (NodeId node, NodeId lost, const DataPacket * /*pkt*/)
{
  for (ConnectionId c : InvalidateLink (node, lost))
    HandleBrokenRoute (node, lost, c);
  return false;
}

void
AodvProtocol::HandleBrokenRoute (NodeId node, NodeId /*lost*/, ConnectionId conn)
{
  const Connection &c = m_net.Connections ().Get (conn);
  if (node == c.src)
    RestartFromSource (conn);
  else
    SendFailureUpstream (node, conn);
}

void
AodvProtocol::HandleRouteFailure (NodeId at, NodeId from, const ControlMessage &msg)
{
  const ConnectionId conn = *msg.connection;
  const Connection &c = m_net.Connections ().Get (conn);
  if (c.IsClosed ())
    return;
  RouteEntry *e = nullptr;
  auto &active = m_nodes[at.value].active;
  if (auto it = active.find (conn.value); it != active.end ())
    e = &it->second;
  if (e == nullptr || !e->valid || e->nextHop != from)
    return;
  e->valid = false;
  // Each precursor regenerates the error for its own upstream.
  if (at == c.src)
    RestartFromSource (conn);
  else
    SendFailureUpstream (at, conn);
}

ForwardDecision
AodvProtocol::NextHop (NodeId at, DataPacket &pkt)
{
  const Connection &c = m_net.Connections ().Get (pkt.flow);
  if (c.IsClosed ())
    return {};
  const RouteEntry *e = Lookup (at, pkt.flow);
  if (e != nullptr && Usable (*e))
    return ForwardDecision{ForwardDecision::Kind::kForward, e->nextHop};
  return HandleNoRoute (at, pkt);
}

ForwardDecision
AodvProtocol::HandleNoRoute (NodeId at, DataPacket &pkt)
{
  const Connection &c = m_net.Connections ().Get (pkt.flow);
  if (at == c.src)
    {
      if (c.state == ConnState::kActive)
        RestartFromSource (c.id);
    }
  else if (FailureNoticeAllowed (at, c.id))
    SendFailureUpstream (at, c.id);
  return {};
}

void
AodvProtocol::OnDataForwarded (NodeId at, NodeId /*next*/, const DataPacket &pkt)
{
  auto &active = m_nodes[at.value].active;
  if (auto it = active.find (pkt.flow.value); it != active.end () && it->second.valid)
    it->second.expiresAt = m_net.Now () + m_net.Config ().routing.routeLifetime;
}

// ---------------------------------------------------------------------------
// NEW

NewProtocol::NewProtocol (Network &net) : AodvProtocol (net), m_reestablisher (net.Connections (), &net.Log ()) {}

bool
NewProtocol::RepairPending (NodeId at, ConnectionId conn) const
{
  return m_repairing.contains (BufferKey{at.value, conn.value});
}

std::size_t
NewProtocol::BufferedAt (NodeId at, ConnectionId conn) const
{
  auto it = m_buffers.find (BufferKey{at.value, conn.value});
  return it == m_buffers.end () ? 0 : it->second.size ();
}

bool
NewProtocol::OnLinkBreak (NodeId node, NodeId lost, const DataPacket *pkt)
{
  std::vector<ConnectionId> atSource;
  for (ConnectionId c : InvalidateLink (node, lost))
    {
      if (m_net.Connections ().Get (c).src == node)
        atSource.push_back (c);
      else
        HandleBrokenRoute (node, lost, c);
    }
  if (!atSource.empty ())
    SourceMoved (node, atSource);
  if (pkt != nullptr && RepairPending (node, pkt->flow))
    return Hold (node, *pkt);
  return false;
}

Reestablisher::Launcher
NewProtocol::MakeLauncher ()
{
  return [this] (ConnectionId id, Reestablisher::Done done) {
    const Connection &c = m_net.Connections ().Get (id);
    if (c.IsClosed () || DiscoveryPending (c.src, id))
      {
        done ();
        return;
      }
    InitiateDiscovery (c.src, c.dest, id, [this, id, done] (const DiscoveryResult &r) {
      // A connection that still has a working route keeps it.
      if (r.status == DiscoveryStatus::kUnreachable && m_net.Connections ().Get (id).state == ConnState::kRepairing)
        m_net.Connections ().Teardown (id, TeardownReason::kUnreachable);
      done ();
    });
  };
}

void
NewProtocol::SourceMoved (NodeId src, const std::vector<ConnectionId> &broken)
{
  ConnectionManager &conns = m_net.Connections ();
  for (ConnectionId c : broken)
    {
      CancelDiscoveries (c);
      DropBuffersOf (c);
      conns.BeginRepair (c);
    }
  const ReestablishMode mode = m_net.Config ().routing.reestablishMode;
  if (m_reestablisher.BatchRunning (src))
    m_reestablisher.Reestablish (src, broken, mode, MakeLauncher ());
  else
    m_reestablisher.ReestablishAll (src, mode, MakeLauncher ());
}

void
NewProtocol::HandleBrokenRoute (NodeId node, NodeId lost, ConnectionId conn)
{
  const Connection &c = m_net.Connections ().Get (conn);
  if (c.IsClosed ())
    return;
  if (node == c.src)
    {
      SourceMoved (node, {conn});
      return;
    }
  if (DiscoveryPending (c.src, conn) || RepairPending (node, conn))
    return;
  if (m_net.Config ().routing.repairInitiator == RepairInitiator::kDownstream)
    HandOffDownstream (node, lost, conn);
  else
    StartLocalRepair (node, conn);
}

void
NewProtocol::StartLocalRepair (NodeId initiator, ConnectionId conn)
{
  ConnectionManager &conns = m_net.Connections ();
  const Connection &c = conns.Get (conn);
  auto it = std::find (c.path.begin (), c.path.end (), initiator);
  if (it == c.path.end () || initiator == c.dest)
    return;
  std::vector<NodeId> prefix (c.path.begin (), it + 1);
  std::vector<NodeId> downstream (it + 1, c.path.end ());
  conns.ReleaseAt (conn, downstream);

  const BufferKey key{initiator.value, conn.value};
  m_repairing[key] = true;
  InitiateRepair (initiator, conn, std::move (prefix), [this, initiator, conn, key] (const DiscoveryResult &r) {
    m_repairing.erase (key);
    if (r.status == DiscoveryStatus::kSuccess)
      {
        Flush (initiator, conn);
        return;
      }
    DropBuffer (initiator, conn);
    if (r.status == DiscoveryStatus::kUnreachable)
      SendFailureToSource (initiator, conn);
  });
}

void
NewProtocol::HandOffDownstream (NodeId node, NodeId lost, ConnectionId conn)
{
  // Literal reading: the request is handed to the node past the break, which
  // then runs the discovery as a source.
  World &world = m_net.GetWorld ();
  if (!world.CanTransmit (node, lost, m_net.Now ()))
    {
      SendFailureToSource (node, conn);
      return;
    }
  m_net.Originate (ControlKind::kRreq);
  ++m_net.Metrics ().controlTransmissions[static_cast<std::size_t> (ControlKind::kRreq)];
  m_net.Sim ().ScheduleIn (m_net.Config ().routing.controlLatency, EventKind::kMessageArrival,
                           [this, node, lost, conn] {
                             const Connection &c = m_net.Connections ().Get (conn);
                             if (c.IsClosed () || lost == c.dest || DiscoveryPending (lost, conn)
                                 || std::find (c.path.begin (), c.path.end (), lost) == c.path.end ())
                               {
                                 SendFailureToSource (node, conn);
                                 return;
                               }
                             StartLocalRepair (lost, conn);
                           });
}

void
NewProtocol::SendFailureToSource (NodeId at, ConnectionId conn)
{
  const Connection &c = m_net.Connections ().Get (conn);
  if (c.IsClosed ())
    return;
  if (at == c.src)
    {
      RestartFromSource (conn);
      return;
    }
  std::optional<std::size_t> idx = IndexOf (c.path, at);
  if (!idx)
    return;
  ControlMessage msg;
  msg.kind = ControlKind::kRouteFailure;
  msg.origin = at;
  msg.target = c.dest;
  msg.connection = conn;
  msg.brokenFrom = at;
  m_net.Originate (ControlKind::kRouteFailure);
  m_net.Unicast (at, c.path[*idx - 1], msg);
}

void
NewProtocol::HandleRouteFailure (NodeId at, NodeId /*from*/, const ControlMessage &msg)
{
  const ConnectionId conn = *msg.connection;
  const Connection &c = m_net.Connections ().Get (conn);
  if (c.IsClosed () || std::find (c.path.begin (), c.path.end (), msg.origin) == c.path.end ())
    return;
  if (at == c.src)
    {
      RestartFromSource (conn);
      return;
    }
  // Relayed unchanged toward the source.
  std::optional<std::size_t> idx = IndexOf (c.path, at);
  if (!idx || *idx == 0)
    return;
  m_net.Unicast (at, c.path[*idx - 1], msg);
}

ForwardDecision
NewProtocol::HandleNoRoute (NodeId at, DataPacket &pkt)
{
  const Connection &c = m_net.Connections ().Get (pkt.flow);
  if (RepairPending (at, c.id))
    {
      if (Hold (at, pkt))
        return ForwardDecision{ForwardDecision::Kind::kHeld, NodeId{}};
      return {};
    }
  if (at == c.src)
    {
      if (c.state == ConnState::kActive)
        RestartFromSource (c.id);
    }
  else if (FailureNoticeAllowed (at, c.id))
    SendFailureToSource (at, c.id);
  return {};
}

bool
NewProtocol::Hold (NodeId at, const DataPacket &pkt)
{
  auto &buf = m_buffers[BufferKey{at.value, pkt.flow.value}];
  if (buf.size () >= m_net.Config ().routing.repairBufferCapacity)
    return false;
  buf.push_back (pkt);
  return true;
}

void
NewProtocol::Flush (NodeId at, ConnectionId conn)
{
  auto it = m_buffers.find (BufferKey{at.value, conn.value});
  if (it == m_buffers.end ())
    return;
  std::deque<DataPacket> held = std::move (it->second);
  m_buffers.erase (it);
  for (DataPacket &pkt : held)
    m_net.Traffic ().Transmit (at, std::move (pkt));
}

void
NewProtocol::DropBuffer (NodeId at, ConnectionId conn)
{
  auto it = m_buffers.find (BufferKey{at.value, conn.value});
  if (it == m_buffers.end ())
    return;
  m_net.CountDrop ("pkt_repair_failed", it->second.size ());
  m_buffers.erase (it);
}

void
NewProtocol::DropBuffersOf (ConnectionId conn)
{
  for (auto it = m_buffers.begin (); it != m_buffers.end ();)
    {
      if (it->first.second == conn.value)
        {
          m_net.CountDrop ("pkt_repair_failed", it->second.size ());
          it = m_buffers.erase (it);
        }
      else
        ++it;
    }
}

void
NewProtocol::OnConnectionClosed (ConnectionId conn)
{
  AodvProtocol::OnConnectionClosed (conn);
  DropBuffersOf (conn);
  for (auto it = m_repairing.begin (); it != m_repairing.end ();)
    it = it->first.second == conn.value ? m_repairing.erase (it) : std::next (it);
}

}  // namespace manet
