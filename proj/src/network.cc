#include "manet/network.h"

#include <cmath>
#include <string>

namespace manet {

std::string_view
ToString (ProtocolKind p)
{
  switch (p)
    {
    case ProtocolKind::kAodv:
      return "aodv";
    case ProtocolKind::kDsr:
      return "dsr";
    case ProtocolKind::kNew:
      return "new";
    }
  return "?";
}

ProtocolKind
ParseProtocol (std::string_view name)
{
  if (name == "aodv")
    return ProtocolKind::kAodv;
  if (name == "dsr")
    return ProtocolKind::kDsr;
  if (name == "new")
    return ProtocolKind::kNew;
  throw std::invalid_argument ("unknown protocol '" + std::string (name) + "' (expected aodv, dsr or new)");
}

Network::Network (NetworkConfig config, World world, std::vector<double> capacities, std::uint64_t seed)
  : m_config (config),
    m_seed (seed),
    m_world (std::move (world)),
    m_conns (std::move (capacities),
             config.protocol == ProtocolKind::kNew ? AdmissionPolicy::kNegotiated : AdmissionPolicy::kStrict)
{
  if (m_conns.NodeCount () != m_world.NodeCount ())
    throw std::invalid_argument ("one capacity per node is required");
  m_log.SetClock ([this] { return m_sim.Now (); });
  m_log.SetEnabled (m_config.logEnabled);
  m_conns.SetLog (&m_log);
  m_routing = MakeRoutingProtocol (m_config.protocol, *this);
  m_traffic = std::make_unique<TrafficAgent> (*this, m_config.traffic);

  m_conns.SetTeardownListener ([this] (const Connection &c, TeardownReason reason) {
    m_metrics.dropsByReason[reason == TeardownReason::kPolicy ? "conn_policy" : "conn_unreachable"] += 1;
    m_routing->OnConnectionClosed (c.id);
    m_traffic->StopFlow (c.id);
  });

  if (m_config.debugInvariants || m_config.checkLoops)
    m_sim.SetPostEventHook ([this] { AfterEvent (); });
}

Network::~Network () = default;

void
Network::AfterEvent ()
{
  if (m_config.debugInvariants && !m_conns.CheckInvariants ())
    ++m_invariantViolations;
  if (m_config.checkLoops && !m_routing->CheckLoopFree ())
    ++m_loopViolations;
}

ConnectionId
Network::AddConnection (const ConnectionSpec &spec)
{
  const std::size_t n = m_world.NodeCount ();
  if (spec.src.value >= n || spec.dest.value >= n)
    throw std::invalid_argument ("connection endpoint is not a node");
  if (spec.src == spec.dest)
    throw std::invalid_argument ("connection source equals destination");
  if (!(spec.start >= 0.0) || !(spec.stop > spec.start))
    throw std::invalid_argument ("connection needs 0 <= start < stop");

  Connection c;
  c.src = spec.src;
  c.dest = spec.dest;
  c.priority = spec.priority;
  c.demandedBw = spec.demandedBw;
  c.minBw = spec.minBw;
  const ConnectionId id = m_conns.Add (c);
  m_specs.push_back (spec);
  m_metrics.perFlow[id.value] = FlowStats{};
  m_traffic->Register (id, spec.flow);
  return id;
}

void
Network::Start ()
{
  if (m_started)
    throw SimulationError ("network already started");
  m_started = true;
  m_routing->Start ();
  for (std::uint32_t i = 0; i < m_specs.size (); ++i)
    {
      const ConnectionId id{i};
      const ConnectionSpec &spec = m_specs[i];
      m_sim.Schedule (spec.start, EventKind::kTimerExpiry, [this, id] { m_routing->StartConnection (id); });
      if (std::isfinite (spec.stop))
        m_sim.Schedule (spec.stop, EventKind::kTimerExpiry, [this, id] { m_traffic->StopEmitting (id); });
    }
}

void
Network::RunUntil (SimTime end)
{
  if (!m_started)
    Start ();
  m_sim.RunUntil (end);
}

void
Network::Finish ()
{
  m_metrics.runDuration = m_sim.Now ();
  if (!m_conns.CheckInvariants (true))
    ++m_invariantViolations;
}

void
Network::Originate (ControlKind kind)
{
  ++m_metrics.controlOriginated[static_cast<std::size_t> (kind)];
}

void
Network::Broadcast (NodeId from, const ControlMessage &msg)
{
  ++m_metrics.controlTransmissions[static_cast<std::size_t> (msg.kind)];
  std::vector<NodeId> receivers = m_world.Neighbors (from, m_sim.Now ());
  if (receivers.empty ())
    return;
  auto shared = std::make_shared<const ControlMessage> (msg);
  m_sim.ScheduleIn (m_config.routing.controlLatency, EventKind::kMessageArrival,
                    [this, from, receivers = std::move (receivers), shared] {
                      for (NodeId r : receivers)
                        m_routing->Receive (r, from, *shared);
                    });
}

bool
Network::Unicast (NodeId from, NodeId to, const ControlMessage &msg)
{
  if (!m_world.CanTransmit (from, to, m_sim.Now ()))
    return false;
  ++m_metrics.controlTransmissions[static_cast<std::size_t> (msg.kind)];
  m_sim.ScheduleIn (m_config.routing.controlLatency, EventKind::kMessageArrival,
                    [this, from, to, msg] { m_routing->Receive (to, from, msg); });
  return true;
}

bool
Network::CommitRoute (ConnectionId conn, const std::vector<NodeId> &path)
{
  if (!m_conns.CommitPath (conn, path))
    return false;
  m_routing->OnRouteCommitted (conn, path);
  m_traffic->OnConnectionActive (conn);
  return true;
}

void
Network::CountDrop (std::string_view reason, std::uint64_t n)
{
  if (n == 0)
    return;
  auto it = m_metrics.dropsByReason.find (reason);
  if (it == m_metrics.dropsByReason.end ())
    m_metrics.dropsByReason.emplace (std::string (reason), n);
  else
    it->second += n;
}

}  // namespace manet
