#include "manet/scenario.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "manet/presets_data.h"

namespace manet {

using nlohmann::json;

std::string_view
ToString (SweepAxis a)
{
  switch (a)
    {
    case SweepAxis::kSpeed:
      return "speed";
    case SweepAxis::kBandwidth:
      return "bandwidth";
    case SweepAxis::kNodeCount:
      return "node_count";
    }
  return "?";
}

namespace {

/// Reads one JSON object, remembering which keys were used so leftovers can
/// be reported as typos.
class ObjectReader
{
public:
  ObjectReader (const json &j, std::string path) : m_j (j), m_path (std::move (path))
  {
    if (!m_j.is_object ())
      throw ScenarioError (m_path + ": expected an object");
  }

  template <typename T>
  void Get (const char *key, T &out)
  {
    m_used.insert (key);
    auto it = m_j.find (key);
    if (it == m_j.end ())
      return;
    try
      {
        out = it->template get<T> ();
      }
    catch (const json::exception &)
      {
        throw ScenarioError (m_path + "." + key + ": wrong type");
      }
  }

  template <typename T>
  void GetRange (const char *key, T &lo, T &hi)
  {
    m_used.insert (key);
    auto it = m_j.find (key);
    if (it == m_j.end ())
      return;
    if (it->is_number ())
      {
        lo = hi = it->template get<T> ();
        return;
      }
    if (!it->is_array () || it->size () != 2)
      throw ScenarioError (m_path + "." + key + ": expected a number or [min, max]");
    lo = (*it)[0].template get<T> ();
    hi = (*it)[1].template get<T> ();
  }

  const json *Child (const char *key)
  {
    m_used.insert (key);
    auto it = m_j.find (key);
    return it == m_j.end () ? nullptr : &*it;
  }

  std::string Path (const char *key) const { return m_path + "." + key; }

  void Finish () const
  {
    for (auto it = m_j.begin (); it != m_j.end (); ++it)
      if (!m_used.contains (it.key ()))
        throw ScenarioError (m_path + ": unknown key '" + it.key () + "'");
  }

private:
  const json &m_j;
  std::string m_path;
  std::set<std::string> m_used;
};

ReestablishMode
ParseMode (const std::string &s)
{
  if (s == "serial")
    return ReestablishMode::kSerial;
  if (s == "parallel")
    return ReestablishMode::kParallel;
  throw ScenarioError ("routing.reestablish_mode: expected serial or parallel, got '" + s + "'");
}

RepairInitiator
ParseInitiator (const std::string &s)
{
  if (s == "upstream")
    return RepairInitiator::kUpstream;
  if (s == "downstream")
    return RepairInitiator::kDownstream;
  throw ScenarioError ("routing.repair_initiator: expected upstream or downstream, got '" + s + "'");
}

SweepAxis
ParseAxis (const std::string &s)
{
  if (s == "speed")
    return SweepAxis::kSpeed;
  if (s == "bandwidth")
    return SweepAxis::kBandwidth;
  if (s == "node_count")
    return SweepAxis::kNodeCount;
  throw ScenarioError ("sweep.axis: expected speed, bandwidth or node_count, got '" + s + "'");
}

OverheadUnit
ParseUnit (const std::string &s)
{
  if (s == "origination")
    return OverheadUnit::kOrigination;
  if (s == "transmission")
    return OverheadUnit::kTransmission;
  throw ScenarioError ("metrics.overhead_unit: expected origination or transmission, got '" + s + "'");
}

void
ReadRouting (const json &j, RoutingConfig &r)
{
  ObjectReader o (j, "routing");
  o.Get ("hello_interval", r.helloInterval);
  o.Get ("allowed_misses", r.allowedMisses);
  o.Get ("hello_enabled", r.helloEnabled);
  o.Get ("reply_wait", r.replyWait);
  o.Get ("discovery_timeout", r.discoveryTimeout);
  o.Get ("rreq_retries", r.rreqRetries);
  o.Get ("repair_retries", r.repairRetries);
  o.Get ("route_lifetime", r.routeLifetime);
  o.Get ("control_latency", r.controlLatency);
  o.Get ("failure_notice_interval", r.failureNoticeInterval);
  o.Get ("dsr_cache_capacity", r.dsrCacheCapacity);
  o.Get ("dsr_cache_replies", r.dsrCacheReplies);
  o.Get ("require_bidirectional", r.requireBidirectional);
  o.Get ("repair_buffer_capacity", r.repairBufferCapacity);
  std::string mode = r.reestablishMode == ReestablishMode::kSerial ? "serial" : "parallel";
  o.Get ("reestablish_mode", mode);
  r.reestablishMode = ParseMode (mode);
  std::string init = r.repairInitiator == RepairInitiator::kUpstream ? "upstream" : "downstream";
  o.Get ("repair_initiator", init);
  r.repairInitiator = ParseInitiator (init);
  o.Finish ();
}

json
WriteRouting (const RoutingConfig &r)
{
  return json{
    {"hello_interval", r.helloInterval},
    {"allowed_misses", r.allowedMisses},
    {"hello_enabled", r.helloEnabled},
    {"reply_wait", r.replyWait},
    {"discovery_timeout", r.discoveryTimeout},
    {"rreq_retries", r.rreqRetries},
    {"repair_retries", r.repairRetries},
    {"route_lifetime", r.routeLifetime},
    {"control_latency", r.controlLatency},
    {"failure_notice_interval", r.failureNoticeInterval},
    {"dsr_cache_capacity", r.dsrCacheCapacity},
    {"dsr_cache_replies", r.dsrCacheReplies},
    {"require_bidirectional", r.requireBidirectional},
    {"repair_buffer_capacity", r.repairBufferCapacity},
    {"reestablish_mode", r.reestablishMode == ReestablishMode::kSerial ? "serial" : "parallel"},
    {"repair_initiator", r.repairInitiator == RepairInitiator::kUpstream ? "upstream" : "downstream"},
  };
}

void
ReadTraffic (const json &j, TrafficMix &m, TrafficConfig &t)
{
  ObjectReader o (j, "traffic");
  o.GetRange ("sources", m.sourcesMin, m.sourcesMax);
  o.GetRange ("connections_per_source", m.connectionsPerSourceMin, m.connectionsPerSourceMax);
  o.GetRange ("demand_kbps", m.demandMin, m.demandMax);
  o.Get ("min_bw_fraction", m.minBwFraction);
  o.Get ("realtime_fraction", m.realtimeFraction);
  o.Get ("reliable_fraction", m.reliableFraction);
  o.Get ("start_window", m.startWindow);
  o.Get ("drain", m.drain);
  o.Get ("packet_bits", t.packetBits);
  o.Get ("hop_latency", t.hopLatency);
  o.Get ("ttl", t.ttl);
  o.Get ("window", t.window);
  o.Get ("max_retries", t.maxRetries);
  o.Get ("buffer_capacity", t.bufferCapacity);
  o.Get ("initial_rto", t.initialRto);
  o.Finish ();
}

json
WriteTraffic (const TrafficMix &m, const TrafficConfig &t)
{
  return json{
    {"sources", {m.sourcesMin, m.sourcesMax}},
    {"connections_per_source", {m.connectionsPerSourceMin, m.connectionsPerSourceMax}},
    {"demand_kbps", {m.demandMin, m.demandMax}},
    {"min_bw_fraction", m.minBwFraction},
    {"realtime_fraction", m.realtimeFraction},
    {"reliable_fraction", m.reliableFraction},
    {"start_window", m.startWindow},
    {"drain", m.drain},
    {"packet_bits", t.packetBits},
    {"hop_latency", t.hopLatency},
    {"ttl", t.ttl},
    {"window", t.window},
    {"max_retries", t.maxRetries},
    {"buffer_capacity", t.bufferCapacity},
    {"initial_rto", t.initialRto},
  };
}

Scenario
FromJson (const json &j)
{
  Scenario s;
  ObjectReader o (j, "scenario");
  o.Get ("name", s.name);
  o.Get ("node_count", s.nodeCount);
  o.Get ("range", s.range);
  o.Get ("capacity_kbps", s.capacity);
  o.Get ("duration", s.duration);
  o.Get ("seeds", s.seeds);

  if (const json *arena = o.Child ("arena"))
    {
      ObjectReader a (*arena, "arena");
      a.Get ("width", s.arena.width);
      a.Get ("height", s.arena.height);
      a.Finish ();
    }
  if (const json *mob = o.Child ("mobility"))
    {
      ObjectReader m (*mob, "mobility");
      m.Get ("model", s.mobilityModel);
      m.GetRange ("speed", s.speedMin, s.speedMax);
      m.Get ("epoch_length", s.epochLength);
      m.Finish ();
    }
  if (const json *protos = o.Child ("protocols"))
    {
      if (!protos->is_array ())
        throw ScenarioError ("scenario.protocols: expected a list");
      s.protocols.clear ();
      for (const json &p : *protos)
        {
          try
            {
              s.protocols.push_back (ParseProtocol (p.get<std::string> ()));
            }
          catch (const std::exception &e)
            {
              throw ScenarioError (std::string ("scenario.protocols: ") + e.what ());
            }
        }
    }
  if (const json *sweep = o.Child ("sweep"))
    {
      ObjectReader w (*sweep, "sweep");
      std::string axis{ToString (s.sweep.axis)};
      w.Get ("axis", axis);
      s.sweep.axis = ParseAxis (axis);
      w.Get ("values", s.sweep.values);
      std::string series{ToString (s.sweep.seriesAxis)};
      w.Get ("series_axis", series);
      s.sweep.seriesAxis = ParseAxis (series);
      w.Get ("series_values", s.sweep.seriesValues);
      w.Finish ();
      if (s.sweep.seriesAxis == s.sweep.axis && !s.sweep.seriesValues.empty ())
        throw ScenarioError ("sweep.series_axis must differ from sweep.axis");
    }
  if (const json *traffic = o.Child ("traffic"))
    ReadTraffic (*traffic, s.mix, s.traffic);
  if (const json *routing = o.Child ("routing"))
    ReadRouting (*routing, s.routing);
  if (const json *metrics = o.Child ("metrics"))
    {
      ObjectReader m (*metrics, "metrics");
      m.Get ("include_hello_overhead", s.includeHelloOverhead);
      std::string unit = s.overheadUnit == OverheadUnit::kOrigination ? "origination" : "transmission";
      m.Get ("overhead_unit", unit);
      s.overheadUnit = ParseUnit (unit);
      m.Finish ();
    }
  o.Finish ();
  return s;
}

json
ToJson (const Scenario &s)
{
  json protos = json::array ();
  for (ProtocolKind p : s.protocols)
    protos.push_back (std::string (ToString (p)));
  return json{
    {"name", s.name},
    {"arena", {{"width", s.arena.width}, {"height", s.arena.height}}},
    {"node_count", s.nodeCount},
    {"range", s.range},
    {"mobility",
     {{"model", s.mobilityModel}, {"speed", {s.speedMin, s.speedMax}}, {"epoch_length", s.epochLength}}},
    {"capacity_kbps", s.capacity},
    {"duration", s.duration},
    {"protocols", protos},
    {"seeds", s.seeds},
    {"sweep",
     {{"axis", std::string (ToString (s.sweep.axis))},
      {"values", s.sweep.values},
      {"series_axis", std::string (ToString (s.sweep.seriesAxis))},
      {"series_values", s.sweep.seriesValues}}},
    {"traffic", WriteTraffic (s.mix, s.traffic)},
    {"routing", WriteRouting (s.routing)},
    {"metrics",
     {{"include_hello_overhead", s.includeHelloOverhead},
      {"overhead_unit", s.overheadUnit == OverheadUnit::kOrigination ? "origination" : "transmission"}}},
  };
}

json
ParseText (std::string_view text, const std::string &what)
{
  try
    {
      return json::parse (text.begin (), text.end (), nullptr, true, true);
    }
  catch (const json::parse_error &e)
    {
      throw ScenarioError (what + ": " + e.what ());
    }
}

void
Require (bool ok, const std::string &msg)
{
  if (!ok)
    throw ScenarioError (msg);
}

}  // namespace

void
Validate (const Scenario &s)
{
  Require (s.nodeCount >= 2, "node_count must be at least 2");
  Require (s.arena.width > 0.0 && s.arena.height > 0.0, "arena dimensions must be positive");
  Require (s.range > 0.0, "range must be positive");
  Require (s.speedMin >= 0.0 && s.speedMin <= s.speedMax, "mobility.speed needs 0 <= min <= max");
  Require (s.epochLength > 0.0, "mobility.epoch_length must be positive");
  if (s.mobilityModel == "random_waypoint")
    throw ScenarioError ("mobility.model random_waypoint is reserved but not implemented");
  Require (s.mobilityModel == "random_direction", "mobility.model must be random_direction");
  Require (s.capacity > 0.0, "capacity_kbps must be positive");
  Require (s.duration > 0.0, "duration must be positive");
  Require (!s.protocols.empty (), "protocols must not be empty");
  Require (!s.seeds.empty (), "seeds must not be empty");
  Require (!s.sweep.values.empty (), "sweep.values must not be empty");
  auto checkAxis = [&] (SweepAxis axis, double v) {
      switch (axis)
        {
        case SweepAxis::kSpeed:
          Require (v >= 0.0, "sweep speed values must be >= 0");
          break;
        case SweepAxis::kBandwidth:
          Require (v > 0.0, "sweep bandwidth values must be > 0");
          break;
        case SweepAxis::kNodeCount:
          Require (v >= 2.0 && v == std::floor (v), "sweep node_count values must be integers >= 2");
          Require (v >= s.mix.sourcesMax, "sweep node_count values must cover the source count");
          break;
        }
  };
  for (double v : s.sweep.values)
    checkAxis (s.sweep.axis, v);
  for (double v : s.sweep.seriesValues)
    checkAxis (s.sweep.seriesAxis, v);
  const TrafficMix &m = s.mix;
  Require (m.sourcesMin >= 0 && m.sourcesMin <= m.sourcesMax, "traffic.sources needs 0 <= min <= max");
  Require (m.sourcesMax <= s.nodeCount, "traffic.sources exceeds node_count");
  Require (m.connectionsPerSourceMin >= 1 && m.connectionsPerSourceMin <= m.connectionsPerSourceMax,
           "traffic.connections_per_source needs 1 <= min <= max");
  Require (m.demandMin > 0.0 && m.demandMin <= m.demandMax, "traffic.demand_kbps needs 0 < min <= max");
  Require (m.minBwFraction > 0.0 && m.minBwFraction <= 1.0, "traffic.min_bw_fraction must lie in (0, 1]");
  Require (m.realtimeFraction >= 0.0 && m.realtimeFraction <= 1.0, "traffic.realtime_fraction must lie in [0, 1]");
  Require (m.reliableFraction >= 0.0 && m.reliableFraction <= 1.0, "traffic.reliable_fraction must lie in [0, 1]");
  Require (m.startWindow >= 0.0 && m.startWindow < s.duration, "traffic.start_window must lie in [0, duration)");
  Require (m.drain >= 0.0 && m.startWindow + m.drain < s.duration, "traffic.drain must be >= 0 and leave time after start_window");
  const TrafficConfig &t = s.traffic;
  Require (t.packetBits > 0, "traffic.packet_bits must be positive");
  Require (t.hopLatency >= 0.0, "traffic.hop_latency must be >= 0");
  Require (t.ttl >= 1, "traffic.ttl must be >= 1");
  Require (t.window >= 1, "traffic.window must be >= 1");
  Require (t.maxRetries >= 0, "traffic.max_retries must be >= 0");
  Require (t.initialRto > 0.0, "traffic.initial_rto must be positive");
  const RoutingConfig &r = s.routing;
  Require (r.helloInterval > 0.0, "routing.hello_interval must be positive");
  Require (r.allowedMisses >= 1, "routing.allowed_misses must be >= 1");
  Require (r.replyWait >= 0.0, "routing.reply_wait must be >= 0");
  Require (r.discoveryTimeout > 0.0, "routing.discovery_timeout must be positive");
  Require (r.rreqRetries >= 0 && r.repairRetries >= 0, "routing retry counts must be >= 0");
  Require (r.routeLifetime > 0.0, "routing.route_lifetime must be positive");
  Require (r.controlLatency >= 0.0, "routing.control_latency must be >= 0");
  Require (r.dsrCacheCapacity >= 1, "routing.dsr_cache_capacity must be >= 1");
}

Scenario
ParseScenario (std::string_view jsonText)
{
  Scenario s = FromJson (ParseText (jsonText, "scenario"));
  Validate (s);
  return s;
}

std::string
SerializeScenario (const Scenario &s)
{
  return ToJson (s).dump (2);
}

Scenario
LoadScenarioFile (const std::string &path, const std::string &preset)
{
  std::ifstream in (path);
  if (!in)
    throw ScenarioError ("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf ();
  json j = ParseText (buf.str (), path);
  if (j.is_object () && j.contains ("presets"))
    {
      const json &all = j["presets"];
      if (preset.empty ())
        throw ScenarioError (path + " holds several presets; choose one with --preset");
      if (!all.is_object () || !all.contains (preset))
        throw ScenarioError (path + " has no preset '" + preset + "'");
      j = all[preset];
    }
  Scenario s = FromJson (j);
  Validate (s);
  return s;
}

Scenario
LoadPreset (std::string_view name)
{
  for (const auto &[key, text] : detail::kPresetSources)
    if (key == name)
      return ParseScenario (text);
  throw ScenarioError ("unknown preset '" + std::string (name) + "'");
}

std::vector<std::string>
PresetNames ()
{
  std::vector<std::string> out;
  for (const auto &[key, text] : detail::kPresetSources)
    out.emplace_back (key);
  return out;
}

std::string
ScenarioHash (const Scenario &s)
{
  const std::string canonical = ToJson (s).dump ();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical)
    {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  char out[17];
  std::snprintf (out, sizeof out, "%016llx", static_cast<unsigned long long> (h));
  return out;
}

Scenario
ApplyAxis (const Scenario &s, SweepAxis axis, double value)
{
  Scenario out = s;
  switch (axis)
    {
    case SweepAxis::kSpeed:
      out.speedMin = out.speedMax = value;
      break;
    case SweepAxis::kBandwidth:
      out.mix.demandMin = out.mix.demandMax = value;
      break;
    case SweepAxis::kNodeCount:
      out.nodeCount = static_cast<int> (value);
      break;
    }
  return out;
}

std::unique_ptr<Network>
BuildNetwork (const Scenario &s, ProtocolKind protocol, std::uint64_t seed, bool debugInvariants)
{
  Validate (s);
  World world (s.arena, MobilityConfig{s.speedMin, s.speedMax, s.epochLength}, seed);
  RngStream placement (seed, "placement");
  for (int i = 0; i < s.nodeCount; ++i)
    {
      const double x = placement.Uniform (0.0, s.arena.width);
      const double y = placement.Uniform (0.0, s.arena.height);
      world.AddNode (Position{x, y}, s.range);
    }

  NetworkConfig cfg;
  cfg.protocol = protocol;
  cfg.routing = s.routing;
  cfg.traffic = s.traffic;
  cfg.debugInvariants = debugInvariants;
  auto net = std::make_unique<Network> (cfg, std::move (world),
                                        std::vector<double> (static_cast<std::size_t> (s.nodeCount), s.capacity), seed);

  RngStream draw (seed, "connections");
  const int sources = static_cast<int> (draw.UniformInt (s.mix.sourcesMin, s.mix.sourcesMax));
  std::vector<std::uint32_t> nodes (static_cast<std::size_t> (s.nodeCount));
  for (std::uint32_t i = 0; i < nodes.size (); ++i)
    nodes[i] = i;
  // Partial Fisher-Yates picks distinct sources.
  for (int i = 0; i < sources; ++i)
    {
      const auto j = draw.UniformInt (static_cast<std::uint64_t> (i), nodes.size () - 1);
      std::swap (nodes[static_cast<std::size_t> (i)], nodes[j]);
    }
  for (int i = 0; i < sources; ++i)
    {
      const NodeId src{nodes[static_cast<std::size_t> (i)]};
      const auto count = draw.UniformInt (s.mix.connectionsPerSourceMin, s.mix.connectionsPerSourceMax);
      for (std::uint64_t k = 0; k < count; ++k)
        {
          std::uint32_t d = static_cast<std::uint32_t> (draw.UniformInt (0, nodes.size () - 2));
          if (d >= src.value)
            ++d;
          ConnectionSpec spec;
          spec.src = src;
          spec.dest = NodeId{d};
          spec.priority = draw.Bernoulli (s.mix.realtimeFraction) ? Priority::kRealtime : Priority::kBulk;
          spec.flow = draw.Bernoulli (s.mix.reliableFraction) ? FlowKind::kReliable : FlowKind::kDatagram;
          spec.demandedBw = draw.Uniform (s.mix.demandMin, s.mix.demandMax);
          spec.minBw = s.mix.minBwFraction * spec.demandedBw;
          spec.start = draw.Uniform (0.0, s.mix.startWindow);
          spec.stop = s.duration - s.mix.drain;
          net->AddConnection (spec);
        }
    }
  return net;
}

}  // namespace manet
