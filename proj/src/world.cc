#include "manet/world.h"

#include <cmath>
#include <numbers>
#include <string>

namespace manet {

double
Distance (Position a, Position b)
{
  return std::hypot (a.x - b.x, a.y - b.y);
}

Folded
FoldIntoRange (double unbounded, double length)
{
  const double period = 2.0 * length;
  double m = std::fmod (unbounded, period);
  if (m < 0.0)
    m += period;
  if (m <= length)
    return {m, false};
  return {period - m, true};
}

World::World (Arena arena, MobilityConfig mobility, std::uint64_t seed)
  : m_arena (arena), m_mobility (mobility), m_seed (seed)
{
  if (!(arena.width > 0.0) || !(arena.height > 0.0))
    throw SimulationError ("arena dimensions must be positive");
  if (mobility.speedMin < 0.0 || mobility.speedMin > mobility.speedMax)
    throw SimulationError ("invalid speed range");
  if (!(mobility.epochLength > 0.0))
    throw SimulationError ("mobility epoch must be positive");
}

NodeId
World::AddNode (Position initial, double range)
{
  NodeId id = AddScriptedNode (initial, range, MobilityState{});
  NodeRecord &rec = m_nodes.back ();
  DrawEpoch (rec, 0.0);
  return id;
}

NodeId
World::AddScriptedNode (Position initial, double range, MobilityState motion)
{
  if (!(range > 0.0))
    throw SimulationError ("transmission range must be positive");
  if (initial.x < 0.0 || initial.x > m_arena.width || initial.y < 0.0 || initial.y > m_arena.height)
    throw SimulationError ("node placed outside the arena");
  const NodeId id{static_cast<std::uint32_t> (m_nodes.size ())};
  m_nodes.push_back (NodeRecord{initial, 0.0, motion, range,
                                RngStream (m_seed, "mobility/" + std::to_string (id.value))});
  return id;
}

World::NodeRecord &
World::Lookup (NodeId node)
{
  if (node.value >= m_nodes.size ())
    throw SimulationError ("unknown node " + std::to_string (node.value));
  return m_nodes[node.value];
}

const World::NodeRecord &
World::Lookup (NodeId node) const
{
  if (node.value >= m_nodes.size ())
    throw SimulationError ("unknown node " + std::to_string (node.value));
  return m_nodes[node.value];
}

void
World::DrawEpoch (NodeRecord &rec, SimTime start)
{
  rec.motion.direction = rec.rng.Uniform (0.0, 2.0 * std::numbers::pi);
  rec.motion.speed = rec.rng.Uniform (m_mobility.speedMin, m_mobility.speedMax);
  rec.motion.epochEndsAt = start + m_mobility.epochLength;
}

void
World::MoveTo (NodeRecord &rec, SimTime t)
{
  if (t <= rec.originTime)
    return;
  const double dt = t - rec.originTime;
  const double vx = rec.motion.speed * std::cos (rec.motion.direction);
  const double vy = rec.motion.speed * std::sin (rec.motion.direction);
  const Folded fx = FoldIntoRange (rec.origin.x + vx * dt, m_arena.width);
  const Folded fy = FoldIntoRange (rec.origin.y + vy * dt, m_arena.height);
  rec.origin = Position{fx.coord, fy.coord};
  rec.originTime = t;
  if (fx.flipped || fy.flipped)
    {
      double dir = std::atan2 (fy.flipped ? -vy : vy, fx.flipped ? -vx : vx);
      if (dir < 0.0)
        dir += 2.0 * std::numbers::pi;
      rec.motion.direction = dir;
    }
}

Position
World::PositionAt (NodeId node, SimTime t)
{
  NodeRecord &rec = Lookup (node);
  if (t < rec.originTime)
    throw SimulationError ("position query before the node's clock");
  while (t >= rec.motion.epochEndsAt)
    {
      const SimTime boundary = rec.motion.epochEndsAt;
      MoveTo (rec, boundary);
      DrawEpoch (rec, boundary);
    }
  MoveTo (rec, t);
  return rec.origin;
}

Position
World::StepMobility (NodeId node, double dt)
{
  if (!(dt > 0.0))
    throw SimulationError ("StepMobility requires dt > 0");
  const NodeRecord &rec = Lookup (node);
  return PositionAt (node, rec.originTime + dt);
}

void
World::SetMotion (NodeId node, double direction, double speed, SimTime epochEndsAt)
{
  NodeRecord &rec = Lookup (node);
  rec.motion = MobilityState{direction, speed, epochEndsAt};
}

bool
World::CanTransmit (NodeId a, NodeId b, SimTime t)
{
  if (a == b)
    throw SimulationError ("CanTransmit called with a == b");
  const Position pa = PositionAt (a, t);
  const Position pb = PositionAt (b, t);
  const double dx = pa.x - pb.x;
  const double dy = pa.y - pb.y;
  const double r = Lookup (a).range;
  return dx * dx + dy * dy <= r * r;
}

std::vector<NodeId>
World::Neighbors (NodeId a, SimTime t)
{
  std::vector<NodeId> out;
  Lookup (a);
  for (std::uint32_t i = 0; i < m_nodes.size (); ++i)
    {
      const NodeId b{i};
      if (b != a && CanTransmit (a, b, t))
        out.push_back (b);
    }
  return out;
}

double
World::Range (NodeId node) const
{
  return Lookup (node).range;
}

const MobilityState &
World::Mobility (NodeId node) const
{
  return Lookup (node).motion;
}

}  // namespace manet
