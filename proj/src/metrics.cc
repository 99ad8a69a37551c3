#include "manet/metrics.h"

#include <set>

#include "manet/sim_engine.h"

namespace manet {

std::string_view
ToString (ControlKind k)
{
  switch (k)
    {
    case ControlKind::kRreq: return "RREQ";
    case ControlKind::kRrep: return "RREP";
    case ControlKind::kRouteFailure: return "ROUTE_FAILURE";
    case ControlKind::kHello: return "HELLO";
    }
  return "?";
}

double
Pdr (const MetricsLedger &ledger)
{
  if (ledger.dataSent == 0)
    return 1.0;
  return static_cast<double> (ledger.dataReceived) / static_cast<double> (ledger.dataSent);
}

double
OverheadPerRequest (const MetricsLedger &ledger, bool includeHello, OverheadUnit unit)
{
  if (ledger.connectionRequests == 0)
    return 0.0;
  const auto &counts = unit == OverheadUnit::kOrigination ? ledger.controlOriginated : ledger.controlTransmissions;
  std::uint64_t total = 0;
  for (std::size_t k = 0; k < kControlKinds; ++k)
    if (includeHello || k != static_cast<std::size_t> (ControlKind::kHello))
      total += counts[k];
  return static_cast<double> (total) / static_cast<double> (ledger.connectionRequests);
}

double
Throughput (const MetricsLedger &ledger)
{
  if (!(ledger.runDuration > 0.0))
    throw SimulationError ("throughput needs a positive run duration");
  return static_cast<double> (ledger.bitsReceived) / ledger.runDuration;
}

std::map<std::uint32_t, double>
PerConnectionThroughput (const MetricsLedger &ledger)
{
  if (!(ledger.runDuration > 0.0))
    throw SimulationError ("throughput needs a positive run duration");
  std::map<std::uint32_t, double> out;
  for (const auto &[id, stats] : ledger.perFlow)
    out[id] = static_cast<double> (stats.bitsReceived) / ledger.runDuration;
  return out;
}

std::string_view
ToString (LogKind k)
{
  switch (k)
    {
    case LogKind::kDiscoveryStart: return "discovery_start";
    case LogKind::kDiscoveryEnd: return "discovery_end";
    case LogKind::kBatchStart: return "batch_start";
    case LogKind::kBatchDiscoveryStart: return "batch_discovery_start";
    case LogKind::kBatchDiscoveryEnd: return "batch_discovery_end";
    case LogKind::kLinkBreak: return "link_break";
    case LogKind::kLocalRepair: return "local_repair";
    case LogKind::kTeardown: return "teardown";
    case LogKind::kPolicyDrop: return "policy_drop";
    }
  return "?";
}

void
RunLog::Append (LogKind kind, std::uint32_t conn, std::uint32_t node, std::uint64_t batch, Priority priority,
                int detail)
{
  if (!m_enabled)
    return;
  m_records.push_back (LogRecord{m_clock ? m_clock () : 0.0, kind, conn, node, batch, priority, detail});
}

std::size_t
CountSerialOrderViolations (const std::vector<LogRecord> &records)
{
  // batch -> REALTIME members that have not finished their discovery yet.
  // Members are announced by one kBatchStart record each.
  std::map<std::uint64_t, std::set<std::uint32_t>> pendingRealtime;
  std::size_t violations = 0;
  for (const LogRecord &r : records)
    {
      switch (r.kind)
        {
        case LogKind::kBatchStart:
          if (r.priority == Priority::kRealtime)
            pendingRealtime[r.batch].insert (r.conn);
          break;
        case LogKind::kBatchDiscoveryStart:
          if (r.priority == Priority::kBulk && !pendingRealtime[r.batch].empty ())
            ++violations;
          break;
        case LogKind::kBatchDiscoveryEnd:
          if (r.priority == Priority::kRealtime)
            pendingRealtime[r.batch].erase (r.conn);
          break;
        default:
          break;
        }
    }
  return violations;
}

std::size_t
CountPriorityInversions (const std::vector<LogRecord> &records)
{
  std::size_t n = 0;
  for (const LogRecord &r : records)
    if (r.kind == LogKind::kPolicyDrop && r.priority == Priority::kRealtime
        && r.detail == static_cast<int> (Priority::kBulk))
      ++n;
  return n;
}

}  // namespace manet
