#pragma once

#include <limits>
#include <string>
#include <vector>

#include "manet/ids.h"
#include "manet/sim_engine.h"

namespace manet {

struct Position
{
  double x{0.0};
  double y{0.0};
  bool operator== (const Position &) const = default;
};

struct Arena
{
  double width{1000.0};
  double height{1000.0};
  bool operator== (const Arena &) const = default;
};

struct MobilityState
{
  double direction{0.0};  ///< radians in [0, 2pi)
  double speed{0.0};      ///< grid units (meters) per second
  SimTime epochEndsAt{std::numeric_limits<double>::infinity ()};
};

struct MobilityConfig
{
  double speedMin{0.0};
  double speedMax{0.0};
  double epochLength{10.0};
};

double Distance (Position a, Position b);

/// One-dimensional reflection of an unbounded coordinate into [0, length].
/// `flipped` reports whether the velocity sign is reversed at the result.
struct Folded
{
  double coord;
  bool flipped;
};
Folded FoldIntoRange (double unbounded, double length);

/**
 * Node placement and random-direction mobility with boundary reflection.
 *
 * Motion is evaluated lazily: each node stores the position at which its
 * current straight segment began, and a query at time t moves it forward
 * along the segment, reflecting off the arena walls. Heading and speed are
 * re-drawn at every epoch boundary from a per-node stream, so a node's
 * trajectory does not depend on the order in which nodes are queried.
 */
class World
{
public:
  World (Arena arena, MobilityConfig mobility, std::uint64_t seed);

  /// Adds a node with a fresh epoch drawn from its mobility stream.
  NodeId AddNode (Position initial, double range);
  /// Adds a node with scripted motion; no epoch re-draws happen unless
  /// `motion.epochEndsAt` is finite.
  NodeId AddScriptedNode (Position initial, double range, MobilityState motion);

  /// Replace the motion of a node from its current local time onward.
  void SetMotion (NodeId node, double direction, double speed,
                  SimTime epochEndsAt = std::numeric_limits<double>::infinity ());

  /// Advance the node's local clock by dt > 0 and return its position.
  Position StepMobility (NodeId node, double dt);
  /// Position at absolute time t, which must not precede the node's clock.
  Position PositionAt (NodeId node, SimTime t);

  bool CanTransmit (NodeId a, NodeId b, SimTime t);
  bool Bidirectional (NodeId a, NodeId b, SimTime t) { return CanTransmit (a, b, t) && CanTransmit (b, a, t); }
  std::vector<NodeId> Neighbors (NodeId a, SimTime t);

  std::size_t NodeCount () const { return m_nodes.size (); }
  double Range (NodeId node) const;
  const MobilityState &Mobility (NodeId node) const;
  const Arena &GetArena () const { return m_arena; }

private:
  struct NodeRecord
  {
    Position origin;
    SimTime originTime{0.0};
    MobilityState motion;
    double range{0.0};
    RngStream rng;
  };

  NodeRecord &Lookup (NodeId node);
  const NodeRecord &Lookup (NodeId node) const;
  void DrawEpoch (NodeRecord &rec, SimTime start);
  void MoveTo (NodeRecord &rec, SimTime t);

  Arena m_arena;
  MobilityConfig m_mobility;
  std::uint64_t m_seed;
  std::vector<NodeRecord> m_nodes;
};

}  // namespace manet
