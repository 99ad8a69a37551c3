#include "manet/dsr.h"

#include <algorithm>

#include "manet/network.h"

namespace manet {

namespace {

std::uint64_t
SeenKey (NodeId origin, std::uint32_t rreqId)
{
  return (static_cast<std::uint64_t> (origin.value) << 32) | rreqId;
}

bool
Contains (const std::vector<NodeId> &v, NodeId n)
{
  return std::find (v.begin (), v.end (), n) != v.end ();
}

bool
HasLink (const std::vector<NodeId> &path, NodeId from, NodeId to)
{
  for (std::size_t i = 0; i + 1 < path.size (); ++i)
    if (path[i] == from && path[i + 1] == to)
      return true;
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// RouteCache

void
RouteCache::Insert (std::vector<NodeId> path)
{
  if (path.size () < 2)
    return;
  {
    std::vector<NodeId> sorted = path;
    std::sort (sorted.begin (), sorted.end ());
    if (std::adjacent_find (sorted.begin (), sorted.end ()) != sorted.end ())
      return;
  }
  auto same = std::find (m_paths.begin (), m_paths.end (), path);
  if (same != m_paths.end ())
    m_paths.erase (same);
  m_paths.push_front (std::move (path));
  while (m_paths.size () > m_capacity)
    m_paths.pop_back ();
}

std::optional<std::vector<NodeId>>
RouteCache::Find (NodeId dest, const std::vector<NodeId> &avoid)
{
  auto best = m_paths.end ();
  std::size_t bestLen = 0;
  for (auto it = m_paths.begin (); it != m_paths.end (); ++it)
    {
      auto pos = std::find (it->begin () + 1, it->end (), dest);
      if (pos == it->end ())
        continue;
      const std::size_t len = static_cast<std::size_t> (pos - it->begin ()) + 1;
      bool clash = false;
      for (auto n = it->begin () + 1; n != pos + 1 && !clash; ++n)
        clash = manet::Contains (avoid, *n);
      if (clash)
        continue;
      if (best == m_paths.end () || len < bestLen)
        {
          best = it;
          bestLen = len;
        }
    }
  if (best == m_paths.end ())
    return std::nullopt;
  std::vector<NodeId> out (best->begin (), best->begin () + static_cast<std::ptrdiff_t> (bestLen));
  m_paths.splice (m_paths.begin (), m_paths, best);
  return out;
}

void
RouteCache::PurgeLink (NodeId from, NodeId to)
{
  m_paths.remove_if ([&] (const std::vector<NodeId> &p) { return HasLink (p, from, to); });
}

bool
RouteCache::Contains (const std::vector<NodeId> &path) const
{
  return std::find (m_paths.begin (), m_paths.end (), path) != m_paths.end ();
}

// ---------------------------------------------------------------------------
// DsrProtocol

DsrProtocol::DsrProtocol (Network &net) : RoutingProtocol (net)
{
  m_nodes.resize (net.GetWorld ().NodeCount ());
  for (NodeState &s : m_nodes)
    s.cache = RouteCache (net.Config ().routing.dsrCacheCapacity);
}

void
DsrProtocol::StartConnection (ConnectionId conn)
{
  const Connection &c = m_net.Connections ().Get (conn);
  if (c.IsClosed ())
    return;
  // A cached route is tried before flooding.
  if (std::optional<std::vector<NodeId>> cached = Cache (c.src).Find (c.dest))
    if (m_net.CommitRoute (conn, *cached))
      return;
  RoutingProtocol::StartConnection (conn);
}

void
DsrProtocol::SendRequest (Discovery &d)
{
  NodeState &s = m_nodes[d.initiator.value];
  ++s.rreqCounter;
  d.rreqId = s.rreqCounter;
  s.seen.insert (SeenKey (d.initiator, d.rreqId));

  ControlMessage msg;
  msg.kind = ControlKind::kRreq;
  msg.rreqId = d.rreqId;
  msg.origin = d.initiator;
  msg.target = d.dest;
  msg.connection = d.conn;
  msg.accumulatedRoute = {d.initiator};
  m_net.Originate (ControlKind::kRreq);
  m_net.Broadcast (d.initiator, msg);
}

void
DsrProtocol::Receive (NodeId at, NodeId from, const ControlMessage &msg)
{
  switch (msg.kind)
    {
    case ControlKind::kRreq:
      HandleRreq (at, from, msg);
      break;
    case ControlKind::kRrep:
      HandleRrep (at, msg);
      break;
    case ControlKind::kRouteFailure:
      HandleRouteError (at, msg);
      break;
    case ControlKind::kHello:
      break;
    }
}

void
DsrProtocol::HandleRreq (NodeId at, NodeId from, const ControlMessage &msg)
{
  if (m_net.Config ().routing.requireBidirectional && !m_net.GetWorld ().Bidirectional (at, from, m_net.Now ()))
    return;
  if (Contains (msg.accumulatedRoute, at))
    return;
  const ConnectionManager &conns = m_net.Connections ();
  const Connection &c = conns.Get (*msg.connection);
  if (c.IsClosed ())
    return;
  NodeState &s = m_nodes[at.value];
  const bool target = at == msg.target;
  // The target answers every copy; everyone else handles a request once.
  if (!target && !s.seen.insert (SeenKey (msg.origin, msg.rreqId)).second)
    return;
  if (!conns.Ledger (at).GrantOf (c.id) && !conns.PreviewAdmit (at, c).Admitted ())
    return;

  std::vector<NodeId> route = msg.accumulatedRoute;
  route.push_back (at);
  {
    std::vector<NodeId> back (route.rbegin (), route.rend ());
    s.cache.Insert (std::move (back));
  }

  if (target)
    {
      ControlMessage rrep;
      rrep.kind = ControlKind::kRrep;
      rrep.rreqId = msg.rreqId;
      rrep.origin = msg.origin;
      rrep.target = at;
      rrep.connection = msg.connection;
      rrep.accumulatedRoute = std::move (route);
      rrep.routeIndex = static_cast<std::uint32_t> (rrep.accumulatedRoute.size () - 1);
      m_net.Originate (ControlKind::kRrep);
      SendReplyAlong (at, std::move (rrep));
      return;
    }

  if (m_net.Config ().routing.dsrCacheReplies)
    if (std::optional<ControlMessage> rrep = ReplyFromCache (at, msg))
      {
        m_net.Originate (ControlKind::kRrep);
        SendReplyAlong (at, std::move (*rrep));
        return;
      }

  ControlMessage fwd = msg;
  fwd.hopCount = msg.hopCount + 1;
  fwd.accumulatedRoute = std::move (route);
  m_net.Broadcast (at, fwd);
}

std::optional<ControlMessage>
DsrProtocol::ReplyFromCache (NodeId node, const ControlMessage &rreq)
{
  std::optional<std::vector<NodeId>> suffix = Cache (node).Find (rreq.target, rreq.accumulatedRoute);
  if (!suffix)
    return std::nullopt;
  ControlMessage rrep;
  rrep.kind = ControlKind::kRrep;
  rrep.rreqId = rreq.rreqId;
  rrep.origin = rreq.origin;
  rrep.target = rreq.target;
  rrep.connection = rreq.connection;
  rrep.accumulatedRoute = rreq.accumulatedRoute;
  rrep.routeIndex = static_cast<std::uint32_t> (rrep.accumulatedRoute.size ());
  rrep.accumulatedRoute.insert (rrep.accumulatedRoute.end (), suffix->begin (), suffix->end ());
  return rrep;
}

void
DsrProtocol::SendReplyAlong (NodeId at, ControlMessage rrep)
{
  if (rrep.routeIndex == 0)
    {
      HandleRrep (at, rrep);
      return;
    }
  const NodeId prev = rrep.accumulatedRoute[rrep.routeIndex - 1];
  --rrep.routeIndex;
  m_net.Unicast (at, prev, rrep);
}

void
DsrProtocol::HandleRrep (NodeId at, const ControlMessage &msg)
{
  const std::vector<NodeId> &route = msg.accumulatedRoute;
  const std::size_t idx = msg.routeIndex;
  if (idx >= route.size () || route[idx] != at)
    return;
  m_nodes[at.value].cache.Insert (std::vector<NodeId> (route.begin () + static_cast<std::ptrdiff_t> (idx), route.end ()));

  if (idx > 0)
    {
      SendReplyAlong (at, msg);
      return;
    }
  const ConnectionId conn = *msg.connection;
  Discovery *d = FindDiscovery (at, conn);
  if (d == nullptr || d->rreqId != msg.rreqId)
    return;
  OnCandidate (d->handle, route);
}

ForwardDecision
DsrProtocol::NextHop (NodeId at, DataPacket &pkt)
{
  const Connection &c = m_net.Connections ().Get (pkt.flow);
  if (c.IsClosed ())
    return {};
  if (at == c.src && pkt.routeIndex == 0)
    {
      if (c.path.size () < 2)
        return {};
      pkt.sourceRoute = std::make_shared<const std::vector<NodeId>> (c.path);
    }
  if (!pkt.sourceRoute)
    return {};
  const std::vector<NodeId> &route = *pkt.sourceRoute;
  if (pkt.routeIndex + 1 >= route.size () || route[pkt.routeIndex] != at)
    return {};
  ++pkt.routeIndex;
  return ForwardDecision{ForwardDecision::Kind::kForward, route[pkt.routeIndex]};
}

std::vector<ConnectionId>
DsrProtocol::ConnectionsUsingLink (NodeId node, NodeId next) const
{
  std::vector<ConnectionId> out;
  for (const Connection &c : m_net.Connections ().All ())
    if (c.IsLive () && c.state == ConnState::kActive && HasLink (c.path, node, next))
      out.push_back (c.id);
  return out;
}

std::optional<std::size_t>
DsrProtocol::RouteHops (NodeId at, ConnectionId conn) const
{
  const Connection &c = m_net.Connections ().Get (conn);
  if (at != c.src || c.state != ConnState::kActive)
    return std::nullopt;
  return c.path.size () - 1;
}

bool
DsrProtocol::OnLinkBreak (NodeId node, NodeId lost, const DataPacket * /*pkt*/)
{
  m_nodes[node.value].cache.PurgeLink (node, lost);
  for (ConnectionId conn : ConnectionsUsingLink (node, lost))
    {
      const Connection &c = m_net.Connections ().Get (conn);
      m_net.Log ().Append (LogKind::kLinkBreak, conn.value, node.value, 0, c.priority, static_cast<int> (lost.value));
      if (node == c.src)
        {
          SourceRouteBroken (conn, node, lost);
          continue;
        }
      const SimTime now = m_net.Now ();
      const auto key = std::make_pair (node.value, conn.value);
      if (auto prev = m_lastError.find (key);
          prev != m_lastError.end () && now - prev->second < m_net.Config ().routing.failureNoticeInterval)
        continue;
      m_lastError[key] = now;
      auto it = std::find (c.path.begin (), c.path.end (), node);
      ControlMessage err;
      err.kind = ControlKind::kRouteFailure;
      err.origin = node;
      err.target = c.src;
      err.connection = conn;
      err.accumulatedRoute.assign (c.path.begin (), it + 1);
      err.routeIndex = static_cast<std::uint32_t> (err.accumulatedRoute.size () - 1);
      err.brokenFrom = node;
      err.brokenTo = lost;
      m_net.Originate (ControlKind::kRouteFailure);
      --err.routeIndex;
      m_net.Unicast (node, err.accumulatedRoute[err.routeIndex], err);
    }
  return false;
}

void
DsrProtocol::HandleRouteError (NodeId at, const ControlMessage &msg)
{
  const std::size_t idx = msg.routeIndex;
  if (idx >= msg.accumulatedRoute.size () || msg.accumulatedRoute[idx] != at)
    return;
  m_nodes[at.value].cache.PurgeLink (msg.brokenFrom, msg.brokenTo);
  if (idx == 0)
    {
      SourceRouteBroken (*msg.connection, msg.brokenFrom, msg.brokenTo);
      return;
    }
  ControlMessage fwd = msg;
  --fwd.routeIndex;
  m_net.Unicast (at, fwd.accumulatedRoute[fwd.routeIndex], fwd);
}

void
DsrProtocol::SourceRouteBroken (ConnectionId conn, NodeId from, NodeId to)
{
  const Connection &c = m_net.Connections ().Get (conn);
  if (c.IsClosed () || c.state != ConnState::kActive || !HasLink (c.path, from, to) || DiscoveryPending (c.src, conn))
    return;
  RouteCache &cache = Cache (c.src);
  cache.PurgeLink (from, to);
  // Next best cached route first; the cache is not validated against the
  // current topology.
  while (std::optional<std::vector<NodeId>> alt = cache.Find (c.dest))
    {
      if (m_net.CommitRoute (conn, *alt))
        return;
      // Rejected by admission: forget routes through that first hop.
      cache.PurgeLink ((*alt)[0], (*alt)[1]);
    }
  RestartFromSource (conn);
}

}  // namespace manet
