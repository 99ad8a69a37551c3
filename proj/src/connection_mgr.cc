#include "manet/connection_mgr.h"

#include <algorithm>
#include <memory>
#include <numeric>

#include "manet/metrics.h"
#include "manet/sim_engine.h"

namespace manet {

namespace {

constexpr double kEps = 1e-9;

}  // namespace

std::string_view
ToString (Priority p)
{
  return p == Priority::kRealtime ? "REALTIME" : "BULK";
}

std::string_view
ToString (ConnState s)
{
  switch (s)
    {
    case ConnState::kDiscovering: return "DISCOVERING";
    case ConnState::kActive: return "ACTIVE";
    case ConnState::kRepairing: return "REPAIRING";
    case ConnState::kDropped: return "DROPPED";
    case ConnState::kFailed: return "FAILED";
    }
  return "?";
}

double
NodeBandwidthLedger::Used () const
{
  double used = 0.0;
  for (const auto &[id, bw] : m_grants)
    used += bw;
  return used;
}

std::optional<double>
NodeBandwidthLedger::GrantOf (ConnectionId c) const
{
  auto it = m_grants.find (c);
  if (it == m_grants.end ())
    return std::nullopt;
  return it->second;
}

std::vector<ConnectionId>
SelectDropsFrom (std::span<const DropCandidate> candidates, double needed, Priority incoming)
{
  std::vector<DropCandidate> eligible;
  for (const DropCandidate &c : candidates)
    if (c.priority < incoming)
      eligible.push_back (c);
  std::sort (eligible.begin (), eligible.end (), [] (const DropCandidate &a, const DropCandidate &b) {
    if (a.priority != b.priority)
      return a.priority < b.priority;
    if (a.bandwidth != b.bandwidth)
      return a.bandwidth > b.bandwidth;
    return a.id < b.id;
  });
  std::vector<ConnectionId> chosen;
  double freed = 0.0;
  for (const DropCandidate &c : eligible)
    {
      if (freed >= needed)
        break;
      chosen.push_back (c.id);
      freed += c.bandwidth;
    }
  if (freed < needed)
    return {};
  return chosen;
}

ConnectionManager::ConnectionManager (std::vector<double> capacities, AdmissionPolicy policy) : m_policy (policy)
{
  m_ledgers.reserve (capacities.size ());
  for (double cap : capacities)
    {
      if (!(cap >= 0.0))
        throw SimulationError ("node capacity must be non-negative");
      m_ledgers.emplace_back (cap);
    }
}

ConnectionId
ConnectionManager::Add (Connection spec)
{
  if (spec.src == spec.dest)
    throw SimulationError ("connection endpoints must differ");
  if (spec.src.value >= m_ledgers.size () || spec.dest.value >= m_ledgers.size ())
    throw SimulationError ("connection endpoint is not a node");
  if (!(spec.minBw >= 0.0) || spec.minBw > spec.demandedBw)
    throw SimulationError ("connection needs 0 <= min_bw <= demanded_bw");
  spec.id = ConnectionId{static_cast<std::uint32_t> (m_connections.size ())};
  spec.allocatedBw = 0.0;
  spec.state = ConnState::kDiscovering;
  spec.path.clear ();
  m_connections.push_back (std::move (spec));
  return m_connections.back ().id;
}

Connection &
ConnectionManager::Get (ConnectionId id)
{
  if (id.value >= m_connections.size ())
    throw SimulationError ("unknown connection");
  return m_connections[id.value];
}

const Connection &
ConnectionManager::Get (ConnectionId id) const
{
  if (id.value >= m_connections.size ())
    throw SimulationError ("unknown connection");
  return m_connections[id.value];
}

std::vector<ConnectionId>
ConnectionManager::SelectDrops (NodeId node, double needed, Priority incoming) const
{
  if (!(needed > 0.0))
    throw SimulationError ("SelectDrops requires needed > 0");
  std::vector<DropCandidate> candidates;
  for (const auto &[id, bw] : m_ledgers.at (node.value).Grants ())
    candidates.push_back (DropCandidate{id, m_connections[id.value].priority, bw});
  return SelectDropsFrom (candidates, needed, incoming);
}

AdmitResult
ConnectionManager::PreviewAdmit (NodeId node, const Connection &conn) const
{
  const NodeBandwidthLedger &ledger = m_ledgers.at (node.value);
  const double free = ledger.Free ();
  if (free + kEps >= conn.demandedBw)
    return AdmitResult{AdmitOutcome::kGranted, conn.demandedBw, {}};
  if (m_policy == AdmissionPolicy::kStrict)
    return AdmitResult{};
  if (free + kEps >= conn.minBw && free > 0.0)
    return AdmitResult{AdmitOutcome::kRenegotiated, std::min (free, conn.demandedBw), {}};

  const double needed = conn.minBw - std::max (free, 0.0);
  std::vector<ConnectionId> drops = SelectDrops (node, needed, conn.priority);
  if (drops.empty ())
    return AdmitResult{};
  double freed = 0.0;
  for (ConnectionId d : drops)
    freed += *ledger.GrantOf (d);
  const double available = free + freed;
  const double bw = std::min (available, conn.demandedBw);
  const AdmitOutcome outcome = bw + kEps >= conn.demandedBw ? AdmitOutcome::kGranted : AdmitOutcome::kRenegotiated;
  return AdmitResult{outcome, bw, std::move (drops)};
}

AdmitResult
ConnectionManager::Admit (NodeId node, ConnectionId id)
{
  Connection &conn = Get (id);
  if (m_ledgers.at (node.value).GrantOf (id))
    throw SimulationError ("connection already granted at node");
  AdmitResult result = PreviewAdmit (node, conn);
  if (!result.Admitted ())
    return result;
  for (ConnectionId victim : result.drops)
    {
      const Connection &v = Get (victim);
      if (v.priority >= conn.priority)
        ++m_priorityViolations;
      if (m_log)
        m_log->Append (LogKind::kPolicyDrop, victim.value, node.value, 0, v.priority,
                       static_cast<int> (conn.priority));
      Teardown (victim, TeardownReason::kPolicy);
    }
  // Renegotiation hands out the whole residual, up to demand.
  const double free = m_ledgers[node.value].Free ();
  result.bandwidth = std::min (std::max (free, 0.0), conn.demandedBw);
  result.outcome = result.bandwidth + kEps >= conn.demandedBw ? AdmitOutcome::kGranted : AdmitOutcome::kRenegotiated;
  m_ledgers[node.value].Set (id, result.bandwidth);
  MarkDirty (node);
  return result;
}

bool
ConnectionManager::CommitPath (ConnectionId id, std::span<const NodeId> path)
{
  Connection &conn = Get (id);
  if (conn.IsClosed () || path.size () < 2 || path.front () != conn.src || path.back () != conn.dest)
    return false;
  {
    std::vector<NodeId> sorted (path.begin (), path.end ());
    std::sort (sorted.begin (), sorted.end ());
    if (std::adjacent_find (sorted.begin (), sorted.end ()) != sorted.end ())
      return false;
  }

  for (NodeId n : path)
    {
      if (m_ledgers.at (n.value).GrantOf (id))
        continue;
      if (!PreviewAdmit (n, conn).Admitted ())
        return false;
    }

  std::vector<NodeId> granted;
  for (NodeId n : path)
    {
      if (m_ledgers[n.value].GrantOf (id))
        continue;
      AdmitResult r = Admit (n, id);
      if (!r.Admitted ())
        {
          ReleaseAt (id, granted);
          return false;
        }
      granted.push_back (n);
    }

  double bottleneck = conn.demandedBw;
  for (NodeId n : path)
    bottleneck = std::min (bottleneck, *m_ledgers[n.value].GrantOf (id));
  if (bottleneck + kEps < conn.minBw)
    {
      ReleaseAt (id, granted);
      return false;
    }

  // Trim to the bottleneck and release anything held off the new path.
  for (std::uint32_t i = 0; i < m_ledgers.size (); ++i)
    {
      NodeBandwidthLedger &ledger = m_ledgers[i];
      if (!ledger.GrantOf (id))
        continue;
      if (std::find (path.begin (), path.end (), NodeId{i}) == path.end ())
        ledger.Release (id);
      else
        ledger.Set (id, bottleneck);
      MarkDirty (NodeId{i});
    }
  conn.path.assign (path.begin (), path.end ());
  conn.allocatedBw = bottleneck;
  conn.state = ConnState::kActive;
  m_dirtyConns.insert (id.value);
  return true;
}

void
ConnectionManager::ReleaseAt (ConnectionId conn, std::span<const NodeId> nodes)
{
  for (NodeId n : nodes)
    {
      m_ledgers.at (n.value).Release (conn);
      MarkDirty (n);
    }
}

void
ConnectionManager::ReleaseAll (ConnectionId conn)
{
  for (std::uint32_t i = 0; i < m_ledgers.size (); ++i)
    if (m_ledgers[i].GrantOf (conn))
      {
        m_ledgers[i].Release (conn);
        MarkDirty (NodeId{i});
      }
}

void
ConnectionManager::BeginRepair (ConnectionId id)
{
  Connection &conn = Get (id);
  if (conn.IsClosed ())
    return;
  ReleaseAll (id);
  conn.allocatedBw = 0.0;
  conn.state = ConnState::kRepairing;
  m_dirtyConns.insert (id.value);
}

void
ConnectionManager::Teardown (ConnectionId id, TeardownReason reason)
{
  Connection &conn = Get (id);
  if (conn.IsClosed ())
    return;
  ReleaseAll (id);
  conn.allocatedBw = 0.0;
  conn.state = reason == TeardownReason::kPolicy ? ConnState::kDropped : ConnState::kFailed;
  m_dirtyConns.insert (id.value);
  if (m_log)
    m_log->Append (LogKind::kTeardown, id.value, conn.src.value, 0, conn.priority, static_cast<int> (reason));
  if (m_onTeardown)
    m_onTeardown (conn, reason);
}

std::vector<ConnectionId>
ConnectionManager::ReestablishmentOrder (NodeId node) const
{
  std::vector<ConnectionId> out;
  for (const Connection &c : m_connections)
    if (c.src == node && c.IsLive ())
      out.push_back (c.id);
  std::stable_sort (out.begin (), out.end (), [this] (ConnectionId a, ConnectionId b) {
    const Priority pa = m_connections[a.value].priority;
    const Priority pb = m_connections[b.value].priority;
    if (pa != pb)
      return pa > pb;
    return a < b;
  });
  return out;
}

bool
ConnectionManager::CheckInvariants (bool full)
{
  bool ok = true;
  auto checkNode = [&] (std::uint32_t i) {
    const NodeBandwidthLedger &l = m_ledgers[i];
    if (l.Used () > l.Capacity () + kEps * std::max (1.0, l.Capacity ()))
      ok = false;
  };
  auto checkConn = [&] (std::uint32_t i) {
    const Connection &c = m_connections[i];
    if (c.state == ConnState::kActive)
      {
        if (c.allocatedBw + kEps < c.minBw || c.allocatedBw > c.demandedBw + kEps)
          ok = false;
      }
    else if (c.allocatedBw != 0.0)
      ok = false;
  };
  if (full)
    {
      for (std::uint32_t i = 0; i < m_ledgers.size (); ++i)
        checkNode (i);
      for (std::uint32_t i = 0; i < m_connections.size (); ++i)
        checkConn (i);
    }
  else
    {
      for (std::uint32_t i : m_dirtyNodes)
        checkNode (i);
      for (std::uint32_t i : m_dirtyConns)
        checkConn (i);
    }
  m_dirtyNodes.clear ();
  m_dirtyConns.clear ();
  return ok;
}

// ---------------------------------------------------------------------------

std::vector<ConnectionId>
Reestablisher::ReestablishAll (NodeId moved, ReestablishMode mode, const Launcher &launch)
{
  return Reestablish (moved, m_conns.ReestablishmentOrder (moved), mode, launch);
}

std::vector<ConnectionId>
Reestablisher::Reestablish (NodeId moved, std::vector<ConnectionId> conns, ReestablishMode mode,
                            const Launcher &launch)
{
  std::stable_sort (conns.begin (), conns.end (), [this] (ConnectionId a, ConnectionId b) {
    const Priority pa = m_conns.Get (a).priority;
    const Priority pb = m_conns.Get (b).priority;
    if (pa != pb)
      return pa > pb;
    return a < b;
  });
  conns.erase (std::unique (conns.begin (), conns.end ()), conns.end ());
  if (conns.empty ())
    return conns;

  if (BatchRunning (moved))
    {
      auto &[deferredMode, deferred] = m_deferred[moved.value];
      deferredMode = mode;
      for (ConnectionId c : conns)
        if (!IsQueued (c))
          deferred.push_back (c);
      m_deferredLaunch[moved.value] = launch;
      return conns;
    }

  Batch batch;
  batch.node = moved;
  batch.mode = mode;
  batch.order = conns;
  batch.launch = launch;
  StartBatch (std::move (batch));
  return conns;
}

bool
Reestablisher::IsQueued (ConnectionId c) const
{
  for (const auto &[node, batch] : m_running)
    for (std::size_t i = batch.next; i < batch.order.size (); ++i)
      if (batch.order[i] == c)
        return true;
  for (const auto &[node, entry] : m_deferred)
    if (std::find (entry.second.begin (), entry.second.end (), c) != entry.second.end ())
      return true;
  return false;
}

void
Reestablisher::StartBatch (Batch batch)
{
  batch.id = m_nextBatch++;
  const std::uint32_t node = batch.node.value;
  if (m_log)
    for (ConnectionId c : batch.order)
      m_log->Append (LogKind::kBatchStart, c.value, node, batch.id, m_conns.Get (c).priority);
  m_running[node] = std::move (batch);
  Batch &b = m_running[node];
  if (b.mode == ReestablishMode::kParallel)
    {
      const std::uint64_t id = b.id;
      const std::vector<ConnectionId> order = b.order;
      const Launcher launch = b.launch;
      b.next = order.size ();
      b.outstanding = order.size ();
      for (ConnectionId c : order)
        {
          if (m_log)
            m_log->Append (LogKind::kBatchDiscoveryStart, c.value, node, id, m_conns.Get (c).priority);
          auto fired = std::make_shared<bool> (false);
          launch (c, [this, node, id, c, fired] {
            if (*fired)
              return;
            *fired = true;
            OnDone (node, id, c);
          });
        }
      return;
    }
  LaunchNext (node);
}

void
Reestablisher::LaunchNext (std::uint32_t node)
{
  auto it = m_running.find (node);
  if (it == m_running.end ())
    return;
  Batch &b = it->second;
  if (b.outstanding > 0)
    return;
  if (b.next >= b.order.size ())
    {
      m_running.erase (it);
      auto d = m_deferred.find (node);
      if (d != m_deferred.end ())
        {
          Batch follow;
          follow.node = NodeId{node};
          follow.mode = d->second.first;
          // Connections that closed meanwhile are skipped.
          for (ConnectionId c : d->second.second)
            if (m_conns.Get (c).IsLive ())
              follow.order.push_back (c);
          follow.launch = m_deferredLaunch[node];
          m_deferred.erase (d);
          m_deferredLaunch.erase (node);
          if (!follow.order.empty ())
            StartBatch (std::move (follow));
        }
      return;
    }
  const ConnectionId c = b.order[b.next++];
  const std::uint64_t id = b.id;
  ++b.outstanding;
  if (m_log)
    m_log->Append (LogKind::kBatchDiscoveryStart, c.value, node, id, m_conns.Get (c).priority);
  auto fired = std::make_shared<bool> (false);
  const Launcher launch = b.launch;
  launch (c, [this, node, id, c, fired] {
    if (*fired)
      return;
    *fired = true;
    OnDone (node, id, c);
  });
}

void
Reestablisher::OnDone (std::uint32_t node, std::uint64_t batchId, ConnectionId conn)
{
  auto it = m_running.find (node);
  if (it == m_running.end () || it->second.id != batchId)
    return;
  if (m_log)
    m_log->Append (LogKind::kBatchDiscoveryEnd, conn.value, node, batchId, m_conns.Get (conn).priority);
  Batch &b = it->second;
  if (b.outstanding > 0)
    --b.outstanding;
  LaunchNext (node);
}

}  // namespace manet
