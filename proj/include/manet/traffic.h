#pragma once

#include <deque>
#include <map>
#include <vector>

#include "manet/config.h"
#include "manet/messages.h"

namespace manet {

class Network;

/**
 * Per-connection packet sources and the hop-by-hop data plane. DATAGRAM
 * flows emit at the allocated rate and lose whatever cannot be forwarded.
 * RELIABLE flows keep a fixed send window with timeout retransmission;
 * acknowledgements travel back abstractly (path length times the per-hop
 * latency) and are never lost.
 */
class TrafficAgent
{
public:
  TrafficAgent (Network &net, TrafficConfig config);

  void Register (ConnectionId conn, FlowKind kind);
  /// Connection became ACTIVE (first time or after a repair).
  void OnConnectionActive (ConnectionId conn);
  /// Connection closed; the flow stops emitting.
  void StopFlow (ConnectionId conn);
  /// Application stop: no new packets, queued reliable packets still go out.
  void StopEmitting (ConnectionId conn);

  /// Forward `pkt`, currently at node `at`, one hop further.
  void Transmit (NodeId at, DataPacket pkt);

  /// Seconds one hop takes for `pkt`.
  double HopDelay (const DataPacket &pkt) const;
  /// Current emission interval for `conn`; 0 when the flow has no rate yet.
  double EmitInterval (ConnectionId conn) const;
  const TrafficConfig &Config () const { return m_config; }
  std::uint64_t Emitted (ConnectionId conn) const;

private:
  struct InFlight
  {
    SimTime lastSent{0.0};
    int retries{0};
    bool retransmitted{false};
    std::uint64_t timerToken{0};
  };

  struct Flow
  {
    FlowKind kind{FlowKind::kDatagram};
    bool started{false};
    bool stopped{false};
    bool draining{false};
    std::uint64_t emitToken{0};
    std::uint64_t nextSeq{0};
    double lastRate{0.0};  ///< kbps
    std::vector<bool> delivered;
    // RELIABLE sender state
    std::deque<std::uint64_t> backlog;
    std::map<std::uint64_t, InFlight> window;
    double srtt{0.0};
    bool haveRtt{false};
  };

  Flow &FlowOf (ConnectionId conn);
  void ScheduleEmission (ConnectionId conn, SimTime at);
  void Emit (ConnectionId conn, std::uint64_t token);
  DataPacket MakePacket (ConnectionId conn, std::uint64_t seq) const;
  void SendFromSource (ConnectionId conn, std::uint64_t seq);
  void PumpWindow (ConnectionId conn);
  void ArmTimer (ConnectionId conn, std::uint64_t seq);
  void OnTimeout (ConnectionId conn, std::uint64_t seq, std::uint64_t token);
  void OnAck (ConnectionId conn, std::uint64_t seq);
  void Arrive (NodeId at, DataPacket pkt);
  void Deliver (NodeId at, const DataPacket &pkt);
  double Rto (const Flow &f) const;

  Network &m_net;
  TrafficConfig m_config;
  std::map<std::uint32_t, Flow> m_flows;
  std::uint64_t m_nextToken{1};
};

}  // namespace manet
