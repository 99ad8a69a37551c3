#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "manet/connection_mgr.h"
#include "manet/ids.h"

namespace manet {

enum class ControlKind : std::uint8_t
{
  kRreq = 0,
  kRrep = 1,
  kRouteFailure = 2,
  kHello = 3,
};
inline constexpr std::size_t kControlKinds = 4;

std::string_view ToString (ControlKind k);

struct FlowStats
{
  std::uint64_t sent{0};
  std::uint64_t received{0};
  std::uint64_t bitsReceived{0};
  bool operator== (const FlowStats &) const = default;
};

/**
 * Counters for one run. Control traffic is tracked twice: once per message
 * originated (a flood or a relayed unicast counts one) and once per
 * transmission (every broadcast or hop counts one).
 */
struct MetricsLedger
{
  std::uint64_t dataSent{0};
  std::uint64_t dataReceived{0};
  std::uint64_t bitsReceived{0};
  std::array<std::uint64_t, kControlKinds> controlOriginated{};
  std::array<std::uint64_t, kControlKinds> controlTransmissions{};
  std::uint64_t connectionRequests{0};
  std::map<std::string, std::uint64_t, std::less<>> dropsByReason;
  double runDuration{0.0};
  std::map<std::uint32_t, FlowStats> perFlow;
  std::uint64_t ttlDiscards{0};

  bool operator== (const MetricsLedger &) const = default;
};

enum class OverheadUnit : std::uint8_t
{
  kOrigination,
  kTransmission,
};

/// received / sent; 1.0 when nothing was sent.
double Pdr (const MetricsLedger &ledger);
/// Control messages per source-initiated discovery; 0 without requests.
double OverheadPerRequest (const MetricsLedger &ledger, bool includeHello = false,
                           OverheadUnit unit = OverheadUnit::kTransmission);
/// Network-wide delivered bits per second. Throws on zero duration.
double Throughput (const MetricsLedger &ledger);
std::map<std::uint32_t, double> PerConnectionThroughput (const MetricsLedger &ledger);

enum class LogKind : std::uint8_t
{
  kDiscoveryStart,
  kDiscoveryEnd,
  kBatchStart,
  kBatchDiscoveryStart,
  kBatchDiscoveryEnd,
  kLinkBreak,
  kLocalRepair,
  kTeardown,
  kPolicyDrop,
};

std::string_view ToString (LogKind k);

/// Protocol-level run log. `detail` is record specific: discovery success
/// flag, incoming priority for policy drops, teardown reason.
struct LogRecord
{
  SimTime time{0.0};
  LogKind kind{LogKind::kDiscoveryStart};
  std::uint32_t conn{0};
  std::uint32_t node{0};
  std::uint64_t batch{0};
  Priority priority{Priority::kBulk};
  int detail{0};
  bool operator== (const LogRecord &) const = default;
};

class RunLog
{
public:
  explicit RunLog (std::function<SimTime ()> clock = {}) : m_clock (std::move (clock)) {}

  void SetClock (std::function<SimTime ()> clock) { m_clock = std::move (clock); }
  void SetEnabled (bool on) { m_enabled = on; }
  bool Enabled () const { return m_enabled; }

  void Append (LogKind kind, std::uint32_t conn, std::uint32_t node, std::uint64_t batch, Priority priority,
               int detail = 0);
  const std::vector<LogRecord> &Records () const { return m_records; }

private:
  std::function<SimTime ()> m_clock;
  bool m_enabled{true};
  std::vector<LogRecord> m_records;
};

/// Counts BULK batch discoveries that start while some REALTIME member of
/// the same batch has not completed its discovery.
std::size_t CountSerialOrderViolations (const std::vector<LogRecord> &records);
/// Policy drops where the victim is REALTIME and the incoming connection is
/// BULK.
std::size_t CountPriorityInversions (const std::vector<LogRecord> &records);

}  // namespace manet
