#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "manet/ids.h"

namespace manet {

class RunLog;

/// Two traffic classes; a larger value means higher priority.
enum class Priority : std::uint8_t
{
  kBulk = 0,
  kRealtime = 1,
};

enum class ConnState : std::uint8_t
{
  kDiscovering,
  kActive,
  kRepairing,
  kDropped,
  kFailed,
};

enum class TeardownReason : std::uint8_t
{
  kPolicy,       ///< evicted by the drop policy -> DROPPED
  kUnreachable,  ///< discovery exhausted its retries -> FAILED
};

std::string_view ToString (Priority p);
std::string_view ToString (ConnState s);

/// Bandwidth values are in kbps throughout.
struct Connection
{
  ConnectionId id;
  NodeId src;
  NodeId dest;
  Priority priority{Priority::kBulk};
  double demandedBw{0.0};
  double minBw{0.0};
  double allocatedBw{0.0};
  ConnState state{ConnState::kDiscovering};
  std::vector<NodeId> path;  ///< committed route, src first

  bool IsLive () const { return state == ConnState::kActive || state == ConnState::kRepairing; }
  bool IsClosed () const { return state == ConnState::kDropped || state == ConnState::kFailed; }
};

/// Per-node capacity and the grants currently charged against it.
class NodeBandwidthLedger
{
public:
  explicit NodeBandwidthLedger (double capacity = 0.0) : m_capacity (capacity) {}

  double Capacity () const { return m_capacity; }
  double Used () const;
  double Free () const { return m_capacity - Used (); }
  std::optional<double> GrantOf (ConnectionId c) const;
  const std::map<ConnectionId, double> &Grants () const { return m_grants; }

  void Set (ConnectionId c, double bw) { m_grants[c] = bw; }
  void Release (ConnectionId c) { m_grants.erase (c); }

private:
  double m_capacity;
  std::map<ConnectionId, double> m_grants;
};

enum class AdmitOutcome : std::uint8_t
{
  kGranted,
  kRenegotiated,
  kRejected,
};

struct AdmitResult
{
  AdmitOutcome outcome{AdmitOutcome::kRejected};
  double bandwidth{0.0};
  std::vector<ConnectionId> drops;  ///< victims the decision relies on

  bool Admitted () const { return outcome != AdmitOutcome::kRejected; }
};

/// kStrict admits only at full demand and never evicts anyone (baseline
/// protocols); kNegotiated renegotiates down to min_bw and applies the drop
/// policy (the multi-connection scheme).
enum class AdmissionPolicy : std::uint8_t
{
  kStrict,
  kNegotiated,
};

struct DropCandidate
{
  ConnectionId id;
  Priority priority;
  double bandwidth;
};

/**
 * Greedy drop selection: candidates strictly below `incoming` are ordered by
 * (priority ascending, bandwidth descending, id ascending) and the shortest
 * prefix freeing at least `needed` is returned. Empty when even the full
 * candidate set cannot free enough.
 */
std::vector<ConnectionId> SelectDropsFrom (std::span<const DropCandidate> candidates, double needed, Priority incoming);

enum class ReestablishMode : std::uint8_t
{
  kSerial,
  kParallel,
};

/**
 * Tracks live connections, the per-node bandwidth ledgers, and route
 * commitment. All mutation happens from the event loop.
 */
class ConnectionManager
{
public:
  using TeardownListener = std::function<void (const Connection &, TeardownReason)>;

  ConnectionManager (std::vector<double> capacities, AdmissionPolicy policy);

  ConnectionId Add (Connection spec);
  Connection &Get (ConnectionId id);
  const Connection &Get (ConnectionId id) const;
  std::size_t Count () const { return m_connections.size (); }
  const std::vector<Connection> &All () const { return m_connections; }
  AdmissionPolicy Policy () const { return m_policy; }

  const NodeBandwidthLedger &Ledger (NodeId node) const { return m_ledgers.at (node.value); }
  std::size_t NodeCount () const { return m_ledgers.size (); }

  /// Decision without side effects.
  AdmitResult PreviewAdmit (NodeId node, const Connection &conn) const;
  /// Decision that executes drops and records the grant.
  AdmitResult Admit (NodeId node, ConnectionId conn);
  std::vector<ConnectionId> SelectDrops (NodeId node, double needed, Priority incoming) const;

  /**
   * Admit `conn` at every node of `path` that does not already hold a grant
   * for it, then trim all grants to the end-to-end bottleneck and make the
   * connection ACTIVE on `path`. Grants at nodes off the path are released.
   * Nothing changes when any node rejects.
   */
  bool CommitPath (ConnectionId conn, std::span<const NodeId> path);

  void ReleaseAll (ConnectionId conn);
  void ReleaseAt (ConnectionId conn, std::span<const NodeId> nodes);
  /// Release grants and mark REPAIRING (allocated_bw = 0).
  void BeginRepair (ConnectionId conn);
  void Teardown (ConnectionId conn, TeardownReason reason);

  /// Live connections sourced at `node`, REALTIME first then ascending id.
  std::vector<ConnectionId> ReestablishmentOrder (NodeId node) const;

  void SetTeardownListener (TeardownListener l) { m_onTeardown = std::move (l); }
  void SetLog (RunLog *log) { m_log = log; }

  /// Capacity conservation and allocation bounds on nodes/connections touched
  /// since the previous call (or everything when `full`). Returns false on
  /// the first violation.
  bool CheckInvariants (bool full = false);
  std::uint64_t PolicyDropsOfHigherPriority () const { return m_priorityViolations; }

private:
  void MarkDirty (NodeId n) { m_dirtyNodes.insert (n.value); }

  std::vector<Connection> m_connections;
  std::vector<NodeBandwidthLedger> m_ledgers;
  AdmissionPolicy m_policy;
  TeardownListener m_onTeardown;
  RunLog *m_log{nullptr};
  std::set<std::uint32_t> m_dirtyNodes;
  std::set<std::uint32_t> m_dirtyConns;
  std::uint64_t m_priorityViolations{0};
};

/**
 * Priority-ordered re-establishment of every live connection of a node.
 * SERIAL launches one discovery at a time and chains the next on the
 * previous one's completion; PARALLEL launches all at once.
 */
class Reestablisher
{
public:
  using Done = std::function<void ()>;
  /// Starts rediscovery of one connection; must eventually call `done`.
  using Launcher = std::function<void (ConnectionId, Done done)>;

  Reestablisher (ConnectionManager &conns, RunLog *log) : m_conns (conns), m_log (log) {}

  /// Returns the launch order. A node that already has a batch running gets
  /// the extra connections queued into a follow-up batch.
  std::vector<ConnectionId> ReestablishAll (NodeId moved, ReestablishMode mode, const Launcher &launch);
  /// Re-establish an explicit subset, keeping the same ordering rule.
  std::vector<ConnectionId> Reestablish (NodeId moved, std::vector<ConnectionId> conns, ReestablishMode mode,
                                         const Launcher &launch);

  bool BatchRunning (NodeId node) const { return m_running.contains (node.value); }
  bool IsQueued (ConnectionId c) const;

private:
  struct Batch
  {
    std::uint64_t id{0};
    NodeId node;
    ReestablishMode mode{ReestablishMode::kSerial};
    std::vector<ConnectionId> order;
    std::size_t next{0};
    std::size_t outstanding{0};
    Launcher launch;
  };

  void LaunchNext (std::uint32_t node);
  void OnDone (std::uint32_t node, std::uint64_t batchId, ConnectionId conn);
  void StartBatch (Batch batch);

  ConnectionManager &m_conns;
  RunLog *m_log;
  std::uint64_t m_nextBatch{1};
  std::map<std::uint32_t, Batch> m_running;
  std::map<std::uint32_t, std::pair<ReestablishMode, std::vector<ConnectionId>>> m_deferred;
  std::map<std::uint32_t, Launcher> m_deferredLaunch;
};

}  // namespace manet
