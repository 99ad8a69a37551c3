#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <random>

#include "manet/ids.h"

namespace manet {

/// Raised when a caller breaks an engine contract. These indicate a bug in
/// the caller, not a runtime condition to recover from.
class SimulationError : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

enum class EventKind : std::uint8_t
{
  kMobilityEpoch,
  kMessageArrival,
  kTimerExpiry,
  kTrafficEmission,
};

struct Event
{
  SimTime fireAt{0.0};
  std::uint64_t seq{0};
  EventKind kind{EventKind::kTimerExpiry};
  std::function<void ()> handler;
};

/**
 * Discrete-event core. Events fire in (fireAt, seq) order where seq is the
 * global insertion counter, so simultaneous events run first-in first-out.
 */
class Simulator
{
public:
  /// Enqueue a handler at absolute time `at`. Throws SimulationError when
  /// `at` lies before Now(). Returns the event's sequence number.
  std::uint64_t Schedule (SimTime at, EventKind kind, std::function<void ()> handler);
  std::uint64_t ScheduleIn (SimTime delay, EventKind kind, std::function<void ()> handler);

  /// Deliver every event with fireAt <= end, including events scheduled by
  /// handlers during the call. Afterwards Now() == end.
  void RunUntil (SimTime end);

  SimTime Now () const { return m_now; }
  std::size_t Pending () const { return m_queue.size (); }
  std::uint64_t Delivered () const { return m_delivered; }

  /// Called after every delivered event; used for debug invariant sweeps.
  void SetPostEventHook (std::function<void ()> hook) { m_postEvent = std::move (hook); }

private:
  struct Later
  {
    bool operator() (const Event &a, const Event &b) const
    {
      if (a.fireAt != b.fireAt)
        return a.fireAt > b.fireAt;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> m_queue;
  SimTime m_now{0.0};
  std::uint64_t m_nextSeq{0};
  std::uint64_t m_delivered{0};
  std::function<void ()> m_postEvent;
};

/**
 * Named pseudo-random stream. The draw sequence is a pure function of
 * (seed, label): the label is hashed into the engine seed, and the
 * conversions to real and integer ranges are done here rather than through
 * <random> distributions, whose output is implementation-defined.
 */
class RngStream
{
public:
  RngStream (std::uint64_t seed, std::string_view label);

  std::uint64_t NextU64 () { return m_engine (); }
  /// Uniform in [lo, hi); returns lo when lo == hi. Throws when lo > hi.
  double Uniform (double lo, double hi);
  /// Uniform integer in [lo, hi] inclusive.
  std::uint64_t UniformInt (std::uint64_t lo, std::uint64_t hi);
  bool Bernoulli (double p) { return Uniform (0.0, 1.0) < p; }

  std::uint64_t Seed () const { return m_seed; }
  const std::string &Label () const { return m_label; }

private:
  std::uint64_t m_seed;
  std::string m_label;
  std::mt19937_64 m_engine;
};

std::uint64_t MixSeed (std::uint64_t seed, std::string_view label);

}  // namespace manet
