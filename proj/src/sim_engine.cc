#include "manet/sim_engine.h"

#include <cmath>
#include <sstream>

namespace manet {

std::uint64_t
Simulator::Schedule (SimTime at, EventKind kind, std::function<void ()> handler)
{
  if (!(at >= m_now) || std::isnan (at))
    {
      std::ostringstream os;
      os << "event scheduled in the past: at=" << at << " now=" << m_now;
      throw SimulationError (os.str ());
    }
  const std::uint64_t seq = m_nextSeq++;
  m_queue.push (Event{at, seq, kind, std::move (handler)});
  return seq;
}

std::uint64_t
Simulator::ScheduleIn (SimTime delay, EventKind kind, std::function<void ()> handler)
{
  return Schedule (m_now + delay, kind, std::move (handler));
}

void
Simulator::RunUntil (SimTime end)
{
  if (!(end >= m_now))
    throw SimulationError ("RunUntil target lies in the past");
  while (!m_queue.empty () && m_queue.top ().fireAt <= end)
    {
      // top() is const; moving out is fine because the slot is popped next.
      Event ev = std::move (const_cast<Event &> (m_queue.top ()));
      m_queue.pop ();
      m_now = ev.fireAt;
      ++m_delivered;
      ev.handler ();
      if (m_postEvent)
        m_postEvent ();
    }
  m_now = end;
}

namespace {

std::uint64_t
SplitMix64 (std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t
Fnv1a (std::string_view s)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s)
    {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  return h;
}

}  // namespace

std::uint64_t
MixSeed (std::uint64_t seed, std::string_view label)
{
  return SplitMix64 (SplitMix64 (seed) ^ Fnv1a (label));
}

RngStream::RngStream (std::uint64_t seed, std::string_view label)
  : m_seed (seed), m_label (label), m_engine (MixSeed (seed, label))
{
}

double
RngStream::Uniform (double lo, double hi)
{
  if (lo > hi)
    throw SimulationError ("Uniform: lo > hi");
  if (lo == hi)
    return lo;
  const double unit = static_cast<double> (m_engine () >> 11) * 0x1.0p-53;
  const double v = lo + unit * (hi - lo);
  // Rounding can land exactly on hi for wide intervals.
  return v < hi ? v : std::nextafter (hi, lo);
}

std::uint64_t
RngStream::UniformInt (std::uint64_t lo, std::uint64_t hi)
{
  if (lo > hi)
    throw SimulationError ("UniformInt: lo > hi");
  const std::uint64_t span = hi - lo;
  if (span == std::numeric_limits<std::uint64_t>::max ())
    return m_engine ();
  const std::uint64_t n = span + 1;
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max () - (std::numeric_limits<std::uint64_t>::max () % n);
  std::uint64_t r;
  do
    r = m_engine ();
  while (r >= limit);
  return lo + r % n;
}

}  // namespace manet
