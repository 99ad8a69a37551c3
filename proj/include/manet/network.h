#pragma once

#include <limits>
#include <memory>
#include <string_view>
#include <vector>

#include "manet/config.h"
#include "manet/connection_mgr.h"
#include "manet/messages.h"
#include "manet/metrics.h"
#include "manet/routing.h"
#include "manet/sim_engine.h"
#include "manet/traffic.h"
#include "manet/world.h"

namespace manet {

struct ConnectionSpec
{
  NodeId src;
  NodeId dest;
  Priority priority{Priority::kBulk};
  double demandedBw{0.0};
  double minBw{0.0};
  SimTime start{0.0};
  SimTime stop{std::numeric_limits<double>::infinity ()};
  FlowKind flow{FlowKind::kDatagram};
};

/**
 * One simulation instance: engine, world, connection table, routing
 * protocol and data plane wired together. The radio is an ideal disc;
 * a broadcast reaches every node within the sender's range after the
 * configured control latency.
 */
class Network
{
public:
  Network (NetworkConfig config, World world, std::vector<double> capacities, std::uint64_t seed);
  ~Network ();
  Network (const Network &) = delete;
  Network &operator= (const Network &) = delete;

  ConnectionId AddConnection (const ConnectionSpec &spec);

  /// Arms HELLO timers and connection start events. Call once.
  void Start ();
  void RunUntil (SimTime end);
  /// Stamps the run duration and runs a full invariant sweep.
  void Finish ();

  SimTime Now () const { return m_sim.Now (); }
  Simulator &Sim () { return m_sim; }
  World &GetWorld () { return m_world; }
  ConnectionManager &Connections () { return m_conns; }
  const ConnectionManager &Connections () const { return m_conns; }
  MetricsLedger &Metrics () { return m_metrics; }
  const MetricsLedger &Metrics () const { return m_metrics; }
  RunLog &Log () { return m_log; }
  RoutingProtocol &Routing () { return *m_routing; }
  TrafficAgent &Traffic () { return *m_traffic; }
  const NetworkConfig &Config () const { return m_config; }
  std::uint64_t Seed () const { return m_seed; }

  /// Count one newly originated control message.
  void Originate (ControlKind kind);
  /// One radio transmission to every node in range of `from`.
  void Broadcast (NodeId from, const ControlMessage &msg);
  /// One radio transmission to `to`; false (nothing sent) when out of range.
  bool Unicast (NodeId from, NodeId to, const ControlMessage &msg);

  /// CommitPath, forwarding-state install, then flow (re)activation.
  bool CommitRoute (ConnectionId conn, const std::vector<NodeId> &path);
  void CountDrop (std::string_view reason, std::uint64_t n = 1);

  std::uint64_t InvariantViolations () const { return m_invariantViolations; }
  std::uint64_t LoopViolations () const { return m_loopViolations; }

private:
  void AfterEvent ();

  NetworkConfig m_config;
  std::uint64_t m_seed;
  Simulator m_sim;
  World m_world;
  ConnectionManager m_conns;
  MetricsLedger m_metrics;
  RunLog m_log;
  std::unique_ptr<RoutingProtocol> m_routing;
  std::unique_ptr<TrafficAgent> m_traffic;
  std::vector<ConnectionSpec> m_specs;
  bool m_started{false};
  std::uint64_t m_invariantViolations{0};
  std::uint64_t m_loopViolations{0};
};

}  // namespace manet
