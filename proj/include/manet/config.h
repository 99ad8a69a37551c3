#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "manet/connection_mgr.h"
#include "manet/metrics.h"

namespace manet {

enum class ProtocolKind : std::uint8_t
{
  kAodv,
  kDsr,
  kNew,
};

std::string_view ToString (ProtocolKind p);
ProtocolKind ParseProtocol (std::string_view name);

/// Which node starts a local repair after a link break.
enum class RepairInitiator : std::uint8_t
{
  kUpstream,    ///< the surviving on-path node on the source side of the break
  kDownstream,  ///< literal mode: RREQ handed to the node past the break
};

struct RoutingConfig
{
  double helloInterval{1.0};
  int allowedMisses{2};
  bool helloEnabled{true};
  double replyWait{0.5};
  double discoveryTimeout{1.0};
  int rreqRetries{2};
  int repairRetries{0};
  double routeLifetime{30.0};
  double controlLatency{0.001};
  double failureNoticeInterval{1.0};
  std::size_t dsrCacheCapacity{64};
  bool dsrCacheReplies{true};
  bool requireBidirectional{true};
  ReestablishMode reestablishMode{ReestablishMode::kSerial};
  RepairInitiator repairInitiator{RepairInitiator::kUpstream};
  std::size_t repairBufferCapacity{64};

  bool operator== (const RoutingConfig &) const = default;
};

enum class FlowKind : std::uint8_t
{
  kDatagram,
  kReliable,
};

struct TrafficConfig
{
  std::uint32_t packetBits{512 * 8};
  double hopLatency{0.001};
  int ttl{32};
  int window{8};
  int maxRetries{5};
  std::size_t bufferCapacity{64};
  double initialRto{1.0};

  bool operator== (const TrafficConfig &) const = default;
};

struct NetworkConfig
{
  ProtocolKind protocol{ProtocolKind::kAodv};
  RoutingConfig routing;
  TrafficConfig traffic;
  bool debugInvariants{false};
  bool checkLoops{false};
  bool logEnabled{true};
};

}  // namespace manet
