#include "manet/traffic.h"

#include "manet/network.h"

namespace manet {

TrafficAgent::TrafficAgent (Network &net, TrafficConfig config) : m_net (net), m_config (config) {}

TrafficAgent::Flow &
TrafficAgent::FlowOf (ConnectionId conn)
{
  return m_flows[conn.value];
}

void
TrafficAgent::Register (ConnectionId conn, FlowKind kind)
{
  FlowOf (conn).kind = kind;
}

std::uint64_t
TrafficAgent::Emitted (ConnectionId conn) const
{
  auto it = m_flows.find (conn.value);
  return it == m_flows.end () ? 0 : it->second.nextSeq;
}

double
TrafficAgent::EmitInterval (ConnectionId conn) const
{
  auto it = m_flows.find (conn.value);
  if (it == m_flows.end () || it->second.lastRate <= 0.0)
    return 0.0;
  return m_config.packetBits / (it->second.lastRate * 1000.0);
}

double
TrafficAgent::HopDelay (const DataPacket &pkt) const
{
  const double tx = pkt.bandwidth > 0.0 ? pkt.sizeBits / (pkt.bandwidth * 1000.0) : 0.0;
  return tx + m_config.hopLatency;
}

void
TrafficAgent::OnConnectionActive (ConnectionId conn)
{
  Flow &f = FlowOf (conn);
  if (f.stopped)
    return;
  f.lastRate = m_net.Connections ().Get (conn).allocatedBw;
  if (!f.started && !f.draining)
    {
      f.started = true;
      ScheduleEmission (conn, m_net.Now ());
    }
  if (f.kind == FlowKind::kReliable)
    m_net.Sim ().ScheduleIn (0.0, EventKind::kTrafficEmission, [this, conn] { PumpWindow (conn); });
}

void
TrafficAgent::StopFlow (ConnectionId conn)
{
  Flow &f = FlowOf (conn);
  f.stopped = true;
  ++f.emitToken;
  f.window.clear ();
  f.backlog.clear ();
}

void
TrafficAgent::StopEmitting (ConnectionId conn)
{
  Flow &f = FlowOf (conn);
  f.draining = true;
  ++f.emitToken;
}

void
TrafficAgent::ScheduleEmission (ConnectionId conn, SimTime at)
{
  const std::uint64_t token = FlowOf (conn).emitToken;
  m_net.Sim ().Schedule (at, EventKind::kTrafficEmission, [this, conn, token] { Emit (conn, token); });
}

void
TrafficAgent::Emit (ConnectionId conn, std::uint64_t token)
{
  Flow &f = FlowOf (conn);
  if (f.stopped || f.draining || token != f.emitToken)
    return;
  const Connection &c = m_net.Connections ().Get (conn);
  if (c.IsClosed ())
    return;
  const bool active = c.state == ConnState::kActive;
  if (active)
    f.lastRate = c.allocatedBw;

  const std::uint64_t seq = f.nextSeq++;
  MetricsLedger &m = m_net.Metrics ();
  ++m.dataSent;
  ++m.perFlow[conn.value].sent;

  if (f.kind == FlowKind::kDatagram)
    {
      if (active)
        SendFromSource (conn, seq);
      else
        m_net.CountDrop ("pkt_repairing");
    }
  else if (f.backlog.size () >= m_config.bufferCapacity)
    m_net.CountDrop ("pkt_buffer_overflow");
  else
    {
      f.backlog.push_back (seq);
      PumpWindow (conn);
    }

  if (f.lastRate > 0.0)
    ScheduleEmission (conn, m_net.Now () + m_config.packetBits / (f.lastRate * 1000.0));
}

DataPacket
TrafficAgent::MakePacket (ConnectionId conn, std::uint64_t seq) const
{
  const Connection &c = m_net.Connections ().Get (conn);
  DataPacket pkt;
  pkt.flow = conn;
  pkt.seqNo = seq;
  pkt.createdAt = m_net.Now ();
  pkt.sizeBits = m_config.packetBits;
  pkt.bandwidth = c.allocatedBw;
  pkt.ttl = m_config.ttl;
  pkt.prevHop = c.src;
  return pkt;
}

void
TrafficAgent::SendFromSource (ConnectionId conn, std::uint64_t seq)
{
  Transmit (m_net.Connections ().Get (conn).src, MakePacket (conn, seq));
}

void
TrafficAgent::Transmit (NodeId at, DataPacket pkt)
{
  RoutingProtocol &routing = m_net.Routing ();
  const ForwardDecision d = routing.NextHop (at, pkt);
  if (d.kind == ForwardDecision::Kind::kHeld)
    return;
  if (d.kind == ForwardDecision::Kind::kNoRoute)
    {
      m_net.CountDrop ("pkt_no_route");
      return;
    }
  const SimTime now = m_net.Now ();
  if (!m_net.GetWorld ().CanTransmit (at, d.next, now))
    {
      if (!routing.OnLinkBreak (at, d.next, &pkt))
        m_net.CountDrop ("pkt_link_break");
      return;
    }
  routing.OnDataForwarded (at, d.next, pkt);
  pkt.prevHop = at;
  const NodeId next = d.next;
  m_net.Sim ().Schedule (now + HopDelay (pkt), EventKind::kMessageArrival,
                         [this, next, pkt = std::move (pkt)] () mutable { Arrive (next, std::move (pkt)); });
}

void
TrafficAgent::Arrive (NodeId at, DataPacket pkt)
{
  const Connection &c = m_net.Connections ().Get (pkt.flow);
  if (at == c.dest)
    {
      Deliver (at, pkt);
      return;
    }
  if (--pkt.ttl <= 0)
    {
      ++m_net.Metrics ().ttlDiscards;
      m_net.CountDrop ("pkt_ttl");
      return;
    }
  Transmit (at, std::move (pkt));
}

void
TrafficAgent::Deliver (NodeId at, const DataPacket &pkt)
{
  const Connection &c = m_net.Connections ().Get (pkt.flow);
  if (at != c.dest)
    throw SimulationError ("packet delivered to a node other than its destination");
  Flow &f = FlowOf (pkt.flow);
  if (f.delivered.size () <= pkt.seqNo)
    f.delivered.resize (pkt.seqNo + 1, false);
  if (!f.delivered[pkt.seqNo])
    {
      f.delivered[pkt.seqNo] = true;
      MetricsLedger &m = m_net.Metrics ();
      ++m.dataReceived;
      m.bitsReceived += pkt.sizeBits;
      FlowStats &fs = m.perFlow[pkt.flow.value];
      ++fs.received;
      fs.bitsReceived += pkt.sizeBits;
    }
  if (f.kind != FlowKind::kReliable)
    return;
  const int hops = m_config.ttl - pkt.ttl + 1;
  const ConnectionId conn = pkt.flow;
  const std::uint64_t seq = pkt.seqNo;
  m_net.Sim ().ScheduleIn (hops * m_config.hopLatency, EventKind::kMessageArrival,
                           [this, conn, seq] { OnAck (conn, seq); });
}

// ---------------------------------------------------------------------------
// reliable sender

double
TrafficAgent::Rto (const Flow &f) const
{
  return f.haveRtt ? 4.0 * f.srtt : m_config.initialRto;
}

void
TrafficAgent::PumpWindow (ConnectionId conn)
{
  Flow &f = FlowOf (conn);
  if (f.stopped || m_net.Connections ().Get (conn).state != ConnState::kActive)
    return;
  while (f.window.size () < static_cast<std::size_t> (m_config.window) && !f.backlog.empty ())
    {
      const std::uint64_t seq = f.backlog.front ();
      f.backlog.pop_front ();
      f.window[seq] = InFlight{m_net.Now (), 0, false, 0};
      ArmTimer (conn, seq);
      SendFromSource (conn, seq);
    }
}

void
TrafficAgent::ArmTimer (ConnectionId conn, std::uint64_t seq)
{
  Flow &f = FlowOf (conn);
  const std::uint64_t token = m_nextToken++;
  f.window.at (seq).timerToken = token;
  m_net.Sim ().ScheduleIn (Rto (f), EventKind::kTimerExpiry, [this, conn, seq, token] { OnTimeout (conn, seq, token); });
}

void
TrafficAgent::OnTimeout (ConnectionId conn, std::uint64_t seq, std::uint64_t token)
{
  Flow &f = FlowOf (conn);
  auto it = f.window.find (seq);
  if (f.stopped || it == f.window.end () || it->second.timerToken != token)
    return;
  const Connection &c = m_net.Connections ().Get (conn);
  if (c.IsClosed ())
    return;
  if (c.state != ConnState::kActive)
    {
      // No route to retry on; wait without spending a retry.
      ArmTimer (conn, seq);
      return;
    }
  if (it->second.retries >= m_config.maxRetries)
    {
      f.window.erase (it);
      m_net.CountDrop ("pkt_retry_exhausted");
      PumpWindow (conn);
      return;
    }
  ++it->second.retries;
  it->second.retransmitted = true;
  it->second.lastSent = m_net.Now ();
  ArmTimer (conn, seq);
  SendFromSource (conn, seq);
}

void
TrafficAgent::OnAck (ConnectionId conn, std::uint64_t seq)
{
  Flow &f = FlowOf (conn);
  auto it = f.window.find (seq);
  if (it == f.window.end ())
    return;
  // Karn: retransmitted packets give no RTT sample.
  if (!it->second.retransmitted)
    {
      const double sample = m_net.Now () - it->second.lastSent;
      f.srtt = f.haveRtt ? 0.875 * f.srtt + 0.125 * sample : sample;
      f.haveRtt = true;
    }
  f.window.erase (it);
  PumpWindow (conn);
}

}  // namespace manet
