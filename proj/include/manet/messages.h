#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "manet/ids.h"
#include "manet/metrics.h"

namespace manet {

struct ControlMessage
{
  ControlKind kind{ControlKind::kRreq};
  std::uint32_t rreqId{0};  ///< unique per originator
  NodeId origin;            ///< discovery originator, or failure reporter
  NodeId target;            ///< discovery target
  std::uint32_t hopCount{0};
  std::uint32_t destSeqNo{0};
  std::uint32_t originSeqNo{0};
  std::vector<NodeId> accumulatedRoute;  ///< DSR source route so far
  std::optional<ConnectionId> connection;
  /// DSR replies and errors travel along accumulatedRoute; this is the index
  /// of the node currently holding the message.
  std::uint32_t routeIndex{0};
  /// ROUTE_FAILURE: the broken link.
  NodeId brokenFrom;
  NodeId brokenTo;
};

struct DataPacket
{
  ConnectionId flow;
  std::uint64_t seqNo{0};
  SimTime createdAt{0.0};
  std::uint32_t sizeBits{0};
  double bandwidth{0.0};  ///< kbps in force when the packet left the source
  int ttl{32};
  NodeId prevHop;
  std::shared_ptr<const std::vector<NodeId>> sourceRoute;  ///< DSR only
  std::uint32_t routeIndex{0};
};

}  // namespace manet
