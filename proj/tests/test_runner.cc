#include "doctest.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "manet/runner.h"

using namespace manet;

namespace {

const char *kSmall = R"({
  // a small sweep that runs in well under a second per cell
  "name": "small",
  "arena": { "width": 600, "height": 600 },
  "node_count": 20,
  "range": 250,
  "mobility": { "model": "random_direction", "speed": [2, 20], "epoch_length": 5 },
  "capacity_kbps": 2000,
  "duration": 20,
  "protocols": ["aodv", "new"],
  "seeds": [1, 2, 3],
  "sweep": { "axis": "speed", "values": [2, 20] },
  "traffic": { "sources": [4, 6], "connections_per_source": [1, 2], "demand_kbps": [100, 300],
               "min_bw_fraction": 0.5, "realtime_fraction": 0.5, "reliable_fraction": 0.5, "start_window": 5 }
})";

std::string
Csv (const Scenario &s, const std::vector<CellOutcome> &out)
{
  std::ostringstream os;
  WriteCsv (os, s, out);
  return os.str ();
}

}  // namespace

TEST_SUITE ("runner")
{
  TEST_CASE ("scenario text round-trips through the canonical form")
  {
    const Scenario s = ParseScenario (kSmall);
    CHECK (s.nodeCount == 20);
    CHECK (s.speedMin == 2.0);
    CHECK (s.speedMax == 20.0);
    CHECK (s.mix.sourcesMin == 4);
    const Scenario back = ParseScenario (SerializeScenario (s));
    CHECK (back == s);
    CHECK (ScenarioHash (back) == ScenarioHash (s));
    Scenario other = s;
    other.duration = 21;
    CHECK (ScenarioHash (other) != ScenarioHash (s));
  }

  TEST_CASE ("invalid scenarios are rejected before running")
  {
    CHECK_THROWS_AS (ParseScenario (R"({"node_count": 1})"), ScenarioError);
    CHECK_THROWS_AS (ParseScenario (R"({"mobility": {"speed": [5, 2]}})"), ScenarioError);
    CHECK_THROWS_AS (ParseScenario (R"({"duration": 0})"), ScenarioError);
    CHECK_THROWS_AS (ParseScenario (R"({"sweep": {"axis": "speed", "values": []}})"), ScenarioError);
    CHECK_THROWS_AS (ParseScenario (R"({"seeds": []})"), ScenarioError);
    CHECK_THROWS_AS (ParseScenario (R"({"nodes": 5})"), ScenarioError);
    CHECK_THROWS_AS (ParseScenario (R"({"protocols": ["olsr"]})"), ScenarioError);
    CHECK_THROWS_AS (ParseScenario (R"({"mobility": {"model": "random_waypoint"}})"), ScenarioError);
    CHECK_THROWS_AS (ParseScenario ("{"), ScenarioError);
    CHECK_THROWS_AS (LoadPreset ("fig9"), ScenarioError);
  }

  TEST_CASE ("presets describe the published scenarios")
  {
    const Scenario a = LoadPreset ("fig3a");
    CHECK (a.nodeCount == 50);
    CHECK (a.arena == Arena{1000, 1000});
    CHECK (a.mix.sourcesMin == 20);
    CHECK (a.mix.sourcesMax == 30);
    CHECK (a.protocols.size () == 3);
    CHECK (a.sweep.values == std::vector<double>{2, 5, 10, 15, 20});
    CHECK (EnumerateCells (a).size () == 3 * 5 * a.seeds.size ());

    const Scenario b = LoadPreset ("fig3b");
    CHECK (b.nodeCount == 100);
    CHECK (b.mix.sourcesMin == 30);
    CHECK (b.mix.sourcesMax == 40);
    CHECK (b.seeds.size () >= 5);

    const Scenario f4 = LoadPreset ("fig4");
    CHECK (f4.nodeCount == 100);
    CHECK (f4.protocols == std::vector<ProtocolKind>{ProtocolKind::kNew});
    CHECK (f4.sweep.seriesAxis == SweepAxis::kBandwidth);
    CHECK (f4.sweep.seriesValues == std::vector<double>{2000, 3000, 4000});

    const Scenario f5 = LoadPreset ("fig5");
    CHECK (f5.nodeCount == 100);
    CHECK (f5.sweep.axis == SweepAxis::kBandwidth);
    CHECK (f5.sweep.values.front () == 1000);
    CHECK (f5.sweep.values.back () == 6000);
    for (const std::string &name : PresetNames ())
      CHECK_NOTHROW (Validate (LoadPreset (name)));
  }

  TEST_CASE ("cells are ordered protocol, series, axis, seed")
  {
    Scenario s = ParseScenario (kSmall);
    const auto cells = EnumerateCells (s);
    REQUIRE (cells.size () == 2 * 2 * 3);
    CHECK (cells[0].protocol == ProtocolKind::kAodv);
    CHECK (cells[0].axisValue == 2.0);
    CHECK (cells[0].seed == 1);
    CHECK (cells[2].seed == 3);
    CHECK (cells[3].axisValue == 20.0);
    CHECK (cells[6].protocol == ProtocolKind::kNew);

    SweepOptions one;
    one.protocol = ProtocolKind::kNew;
    one.seed = 9;
    const auto few = EnumerateCells (s, one);
    CHECK (few.size () == 2);
    CHECK (std::all_of (few.begin (), few.end (), [] (const SweepCell &c) { return c.seed == 9; }));

    s.protocols = {ProtocolKind::kAodv};
    s.seeds = {1, 2, 3};
    s.sweep.values = {2, 20};
    CHECK (EnumerateCells (s).size () == 6);
  }

  TEST_CASE ("pinning a cell fixes speed and demand")
  {
    const Scenario s = ParseScenario (kSmall);
    const Scenario p = PinCell (s, SweepCell{ProtocolKind::kAodv, 400.0, 7.0, 1});
    CHECK (p.speedMin == 7.0);
    CHECK (p.speedMax == 7.0);
    CHECK (p.mix.demandMin == 400.0);
    CHECK (p.mix.demandMax == 400.0);
  }

  TEST_CASE ("connection draws respect the traffic mix")
  {
    const Scenario s = ParseScenario (kSmall);
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
      {
        auto net = BuildNetwork (s, ProtocolKind::kAodv, seed);
        std::map<std::uint32_t, int> perSource;
        for (const Connection &c : net->Connections ().All ())
          {
            CHECK (c.src != c.dest);
            CHECK (c.demandedBw >= 100.0);
            CHECK (c.demandedBw < 300.0);
            CHECK (c.minBw == doctest::Approx (0.5 * c.demandedBw));
            ++perSource[c.src.value];
          }
        CHECK (perSource.size () >= 4);
        CHECK (perSource.size () <= 6);
        for (const auto &[src, n] : perSource)
          CHECK ((n >= 1 && n <= 2));
      }
  }

  TEST_CASE ("placement and demand are shared across protocols and speeds")
  {
    const Scenario s = ParseScenario (kSmall);
    auto a = BuildNetwork (PinCell (s, SweepCell{ProtocolKind::kAodv, std::nullopt, 2.0, 4}), ProtocolKind::kAodv, 4);
    auto b = BuildNetwork (PinCell (s, SweepCell{ProtocolKind::kNew, std::nullopt, 20.0, 4}), ProtocolKind::kNew, 4);
    REQUIRE (a->Connections ().Count () == b->Connections ().Count ());
    for (std::size_t i = 0; i < a->Connections ().Count (); ++i)
      {
        const Connection &x = a->Connections ().All ()[i];
        const Connection &y = b->Connections ().All ()[i];
        CHECK (x.src == y.src);
        CHECK (x.dest == y.dest);
        CHECK (x.demandedBw == y.demandedBw);
      }
    for (std::uint32_t n = 0; n < 20; ++n)
      CHECK (a->GetWorld ().PositionAt (NodeId{n}, 0) == b->GetWorld ().PositionAt (NodeId{n}, 0));
  }

  TEST_CASE ("two-node static scenario delivers everything")
  {
    Scenario s = ParseScenario (R"({"node_count": 2, "arena": {"width": 100, "height": 100}, "mobility": {"speed": 0},
      "duration": 30, "protocols": ["aodv"], "sweep": {"axis": "speed", "values": [0]},
      "traffic": {"sources": 1, "connections_per_source": 1, "reliable_fraction": 0, "start_window": 1}})");
    const RunResult r = RunScenario (s, ProtocolKind::kAodv, 1);
    CHECK (r.ledger.dataSent > 0);
    CHECK (Pdr (r.ledger) == 1.0);
  }

  TEST_CASE ("reruns are byte identical and the parallel sweep matches the serial one")
  {
    const Scenario s = ParseScenario (kSmall);
    SweepOptions serial;
    serial.parallel = false;
    const std::string first = Csv (s, RunSweepSerial (s, serial));
    const std::string second = Csv (s, RunSweepSerial (s, serial));
    CHECK (first == second);
    SweepOptions par;
    par.threads = 3;
    CHECK (Csv (s, RunSweep (s, par)) == first);
    CHECK (std::count (first.begin (), first.end (), '\n') == 1 + 12);
  }

  TEST_CASE ("CSV rows parse back to the same text")
  {
    const Scenario s = ParseScenario (kSmall);
    SweepOptions opt;
    opt.protocol = ProtocolKind::kAodv;
    opt.seed = 1;
    const std::string text = Csv (s, RunSweep (s, opt));
    std::istringstream in (text);
    const auto rows = ParseCsv (in);
    REQUIRE (rows.size () == 2);
    std::string rebuilt = CsvHeader () + "\n";
    for (const CsvRow &r : rows)
      rebuilt += FormatRow (r) + "\n";
    CHECK (rebuilt == text);
    CHECK (rows[0].artifactVersion == ArtifactVersion ());
    CHECK (rows[0].preset == "small");
    std::istringstream bad ("scenario,preset\n");
    CHECK_THROWS (ParseCsv (bad));
  }

  TEST_CASE ("debug runs keep every ledger within capacity")
  {
    const Scenario s = ParseScenario (kSmall);
    for (ProtocolKind p : {ProtocolKind::kAodv, ProtocolKind::kDsr, ProtocolKind::kNew})
      {
        RunOptions opt;
        opt.debugInvariants = true;
        const RunResult r = RunScenario (PinCell (s, SweepCell{p, std::nullopt, 20.0, 2}), p, 2, opt);
        CHECK (r.invariantViolations == 0);
        CHECK (r.priorityInversions == 0);
        CHECK (r.serialOrderViolations == 0);
      }
  }
}
