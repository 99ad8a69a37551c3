#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "manet/config.h"
#include "manet/network.h"
#include "manet/world.h"

namespace manet {

/// Raised for malformed or inconsistent scenario descriptions, always before
/// any simulation work starts.
class ScenarioError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

enum class SweepAxis : std::uint8_t
{
  kSpeed,
  kBandwidth,
  kNodeCount,
};

std::string_view ToString (SweepAxis a);

/// Main axis plus an optional series axis (one curve per series value).
struct SweepSpec
{
  SweepAxis axis{SweepAxis::kSpeed};
  std::vector<double> values{10.0};
  SweepAxis seriesAxis{SweepAxis::kBandwidth};
  std::vector<double> seriesValues;  ///< empty: no series axis
  bool operator== (const SweepSpec &) const = default;
};

/// How the random connection set of a run is drawn.
struct TrafficMix
{
  int sourcesMin{20};
  int sourcesMax{30};
  int connectionsPerSourceMin{1};
  int connectionsPerSourceMax{2};
  double demandMin{200.0};  ///< kbps
  double demandMax{200.0};
  double minBwFraction{0.5};
  double realtimeFraction{0.5};
  double reliableFraction{0.5};
  double startWindow{10.0};  ///< connections start uniformly in [0, startWindow)
  double drain{1.0};         ///< sources go quiet this long before the run ends
  bool operator== (const TrafficMix &) const = default;
};

struct Scenario
{
  std::string name{"custom"};
  Arena arena;
  int nodeCount{50};
  double range{250.0};
  double speedMin{1.0};
  double speedMax{10.0};
  double epochLength{10.0};
  std::string mobilityModel{"random_direction"};
  double capacity{11000.0};  ///< kbps per node
  double duration{300.0};
  std::vector<ProtocolKind> protocols{ProtocolKind::kAodv, ProtocolKind::kDsr, ProtocolKind::kNew};
  std::vector<std::uint64_t> seeds{1};
  SweepSpec sweep;
  TrafficMix mix;
  RoutingConfig routing;
  TrafficConfig traffic;
  bool includeHelloOverhead{false};
  OverheadUnit overheadUnit{OverheadUnit::kTransmission};

  bool operator== (const Scenario &) const = default;
};

/// Throws ScenarioError describing the first problem found.
void Validate (const Scenario &s);

Scenario ParseScenario (std::string_view jsonText);
std::string SerializeScenario (const Scenario &s);
/// Reads a scenario file. A file holding {"presets": {...}} needs `preset`
/// to pick one entry.
Scenario LoadScenarioFile (const std::string &path, const std::string &preset = "");
/// Built-in presets: fig3a, fig3b, fig4, fig5.
Scenario LoadPreset (std::string_view name);
std::vector<std::string> PresetNames ();

/// 16 hex digits identifying the canonical serialization of `s`.
std::string ScenarioHash (const Scenario &s);

/// Copy of `s` with `axis` pinned to `value`.
Scenario ApplyAxis (const Scenario &s, SweepAxis axis, double value);

/// Populate a network for one run: uniform node placement, then the
/// connection set. Both draws use streams that depend only on the seed and
/// the population parameters, so protocols and speeds see the same layout.
std::unique_ptr<Network> BuildNetwork (const Scenario &s, ProtocolKind protocol, std::uint64_t seed,
                                       bool debugInvariants = false);

}  // namespace manet
