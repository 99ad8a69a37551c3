// Acceptance driver: one PASS/FAIL line per primary criterion.

#include <algorithm>
#include <array>
#include <bitset>
#include <cstdarg>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "CLI11.hpp"

#include "manet/runner.h"
#include "test_util.h"

using namespace manet;
using namespace manet::test;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict
{
  bool pass{false};
  std::string detail;
};

std::string
Fmt (const char *format, ...) __attribute__ ((format (printf, 1, 2)));

std::string
Fmt (const char *format, ...)
{
  char buf[512];
  va_list ap;
  va_start (ap, format);
  std::vsnprintf (buf, sizeof buf, format, ap);
  va_end (ap);
  return buf;
}

double
Seconds (Clock::time_point since)
{
  return std::chrono::duration<double> (Clock::now () - since).count ();
}

std::string
CsvOf (const Scenario &s, const std::vector<CellOutcome> &out)
{
  std::ostringstream os;
  WriteCsv (os, s, out);
  return os.str ();
}

// Seed-averaged value per (protocol, series, axis).
using Key = std::tuple<ProtocolKind, double, double>;

std::map<Key, double>
SeedMeans (const std::vector<CellOutcome> &out, const std::function<double (const MetricsLedger &)> &metric)
{
  std::map<Key, std::pair<double, int>> acc;
  for (const CellOutcome &o : out)
    {
      if (!o.ok)
        continue;
      auto &[sum, n] = acc[Key{o.cell.protocol, o.cell.seriesValue.value_or (0.0), o.cell.axisValue}];
      sum += metric (o.result.ledger);
      ++n;
    }
  std::map<Key, double> means;
  for (const auto &[k, v] : acc)
    means[k] = v.first / v.second;
  return means;
}

struct SweepTally
{
  std::uint64_t cells{0};
  std::uint64_t failedCells{0};
  std::uint64_t invariantViolations{0};
  std::uint64_t inversions{0};
  std::uint64_t serialViolations{0};
};

// Shared by the capacity, priority and serial-order lines.
SweepTally g_tally;

std::vector<CellOutcome>
DebugSweep (const Scenario &s, int threads, std::optional<ProtocolKind> only = std::nullopt)
{
  SweepOptions opt;
  opt.threads = threads;
  opt.run.debugInvariants = true;
  opt.protocol = only;
  std::vector<CellOutcome> out = RunSweep (s, opt);
  for (const CellOutcome &o : out)
    {
      ++g_tally.cells;
      if (!o.ok)
        {
          ++g_tally.failedCells;
          std::fprintf (stderr, "cell failed: %s\n", o.error.c_str ());
          continue;
        }
      g_tally.invariantViolations += o.result.invariantViolations;
      g_tally.inversions += o.result.priorityInversions;
      g_tally.serialViolations += o.result.serialOrderViolations;
    }
  return out;
}

Verdict
CheckDeterminism (int threads)
{
  bool same = true;
  double slowest = 0.0;
  std::string detail;
  for (const std::string &name : PresetNames ())
    {
      Scenario s = LoadPreset (name);
      s.sweep.values.resize (1);
      if (!s.sweep.seriesValues.empty ())
        s.sweep.seriesValues.resize (1);
      s.seeds.resize (1);
      SweepOptions serial;
      serial.parallel = false;
      const auto t0 = Clock::now ();
      const std::string a = CsvOf (s, RunSweepSerial (s, serial));
      const double cell = Seconds (t0) / static_cast<double> (s.protocols.size ());
      SweepOptions par;
      par.threads = threads;
      const std::string b = CsvOf (s, RunSweep (s, par));
      slowest = std::max (slowest, cell);
      same = same && a == b && std::count (a.begin (), a.end (), '\n') == 1 + static_cast<long> (s.protocols.size ());
      detail += Fmt ("%s:%s ", name.c_str (), a == b ? "identical" : "DIFFER");
    }
  detail += Fmt ("slowest cell %.1fs", slowest);
  return {same && slowest < 60.0, detail};
}

Verdict
CheckRoutingOracle ()
{
  RngStream rng (2024, "acceptance-topologies");
  int checked = 0;
  int mismatches = 0;
  int reachable = 0;
  for (int trial = 0; trial < 200; ++trial)
    {
      const int n = static_cast<int> (rng.UniformInt (2, 15));
      std::vector<NodeSpot> spots;
      for (int i = 0; i < n; ++i)
        spots.push_back ({rng.Uniform (0.0, 700.0), rng.Uniform (0.0, 700.0), 250.0});
      const std::uint32_t src = 0;
      const std::uint32_t dest = static_cast<std::uint32_t> (n - 1);
      const auto expect = BfsHops (spots, src, dest);
      if (expect)
        ++reachable;
      for (ProtocolKind p : {ProtocolKind::kAodv, ProtocolKind::kNew})
        {
          auto net = MakeStaticNetwork (p, spots);
          ConnectionSpec spec;
          spec.src = NodeId{src};
          spec.dest = NodeId{dest};
          spec.demandedBw = spec.minBw = 100.0;
          spec.stop = 2.0;
          const ConnectionId c = net->AddConnection (spec);
          net->RunUntil (5.0);
          const auto got = net->Routing ().RouteHops (NodeId{src}, c);
          const std::optional<std::size_t> want = expect ? std::optional<std::size_t> (*expect) : std::nullopt;
          ++checked;
          if (got != want)
            ++mismatches;
        }
    }
  return {mismatches == 0, Fmt ("%d topologies x 2 protocols, %d connected, %d mismatches", 200, reachable, mismatches)};
}

Verdict
CheckDropOracle ()
{
  // Every multiset of size <= 10 over {1..6} x {BULK, REALTIME}, as counts per type.
  constexpr int kTypes = 12;
  std::array<int, kTypes> counts{};
  std::uint64_t sets = 0;
  std::uint64_t queries = 0;
  std::uint64_t bad = 0;

  std::function<void (int, int)> walk = [&] (int type, int left) {
    if (type == kTypes)
      {
        ++sets;
        std::vector<DropCandidate> cands;
        std::uint32_t id = 0;
        for (int t = 0; t < kTypes; ++t)
          for (int k = 0; k < counts[t]; ++k)
            cands.push_back ({ConnectionId{id++}, t < 6 ? Priority::kBulk : Priority::kRealtime,
                              static_cast<double> (t % 6 + 1)});
        for (Priority incoming : {Priority::kBulk, Priority::kRealtime})
          {
            // Exhaustive oracle: every sub-multiset of the eligible items
            // via reachable subset sums.
            std::bitset<64> reach;
            reach[0] = true;
            int total = 0;
            for (const DropCandidate &c : cands)
              if (c.priority < incoming)
                {
                  reach |= reach << static_cast<int> (c.bandwidth);
                  total += static_cast<int> (c.bandwidth);
                }
            for (int half = 1; half <= 2 * (total + 1); ++half)
              {
                const double needed = 0.5 * half;
                bool feasible = false;
                for (int sum = 1; sum <= total && !feasible; ++sum)
                  feasible = reach[sum] && sum >= needed;
                const auto got = SelectDropsFrom (cands, needed, incoming);
                ++queries;
                double freed = 0.0;
                bool eligible = true;
                for (ConnectionId d : got)
                  {
                    freed += cands[d.value].bandwidth;
                    eligible = eligible && cands[d.value].priority < incoming;
                  }
                if (got.empty () == feasible || (!got.empty () && (freed < needed || !eligible)))
                  ++bad;
              }
          }
        return;
      }
    for (int k = 0; k <= left; ++k)
      {
        counts[type] = k;
        walk (type + 1, left - k);
      }
    counts[type] = 0;
  };
  walk (0, 10);
  return {bad == 0, Fmt ("%llu multisets, %llu queries, %llu disagreements", static_cast<unsigned long long> (sets),
                         static_cast<unsigned long long> (queries), static_cast<unsigned long long> (bad))};
}

Verdict
CheckPriorityProtection (std::uint64_t *serialScanned)
{
  const Scenario base = LoadPreset ("fig5");
  RngStream rng (77, "acceptance-priority");
  std::uint64_t inversions = 0;
  std::uint64_t drops = 0;
  std::uint64_t batches = 0;
  std::uint64_t serial = 0;
  for (int run = 0; run < 50; ++run)
    {
      const double speed = rng.Uniform (2.0, 20.0);
      const double demand = base.sweep.values[rng.UniformInt (0, base.sweep.values.size () - 1)];
      const Scenario s = PinCell (base, SweepCell{ProtocolKind::kNew, std::nullopt, demand, 0});
      Scenario moving = s;
      moving.speedMin = moving.speedMax = speed;
      moving.duration = 120.0;
      RunOptions opt;
      opt.debugInvariants = true;
      opt.keepLog = true;
      const RunResult r = RunScenario (moving, ProtocolKind::kNew, 1000 + run, opt);
      inversions += CountPriorityInversions (r.log);
      serial += r.serialOrderViolations;
      g_tally.invariantViolations += r.invariantViolations;
      for (const LogRecord &rec : r.log)
        {
          drops += rec.kind == LogKind::kPolicyDrop;
          batches += rec.kind == LogKind::kBatchStart;
        }
    }
  g_tally.serialViolations += serial;
  *serialScanned += batches;
  return {inversions == 0, Fmt ("50 runs, %llu policy drops, %llu inversions", static_cast<unsigned long long> (drops),
                                static_cast<unsigned long long> (inversions))};
}

Verdict
CheckFig3b (int threads)
{
  const Scenario s = LoadPreset ("fig3b");
  const auto t0 = Clock::now ();
  std::vector<CellOutcome> out = DebugSweep (s, threads, ProtocolKind::kAodv);
  std::vector<CellOutcome> nw = DebugSweep (s, threads, ProtocolKind::kNew);
  const double secs = Seconds (t0);
  out.insert (out.end (), nw.begin (), nw.end ());
  const auto pdr = SeedMeans (out, [] (const MetricsLedger &m) { return Pdr (m); });

  bool ordered = true;
  double lo = 1.0, hi = 0.0;
  std::string detail;
  for (double v : s.sweep.values)
    {
      const double a = pdr.at (Key{ProtocolKind::kAodv, 0.0, v});
      const double n = pdr.at (Key{ProtocolKind::kNew, 0.0, v});
      lo = std::min (lo, n);
      hi = std::max (hi, n);
      if (v >= 5.0 && n < a)
        ordered = false;
      detail += Fmt ("v=%g aodv=%.4f new=%.4f; ", v, a, n);
    }
  detail += Fmt ("new spread %.2f pp, %zu seeds, %.0fs", 100.0 * (hi - lo), s.seeds.size (), secs);
  return {ordered && hi - lo <= 0.05 && s.seeds.size () >= 5 && secs <= 600.0, detail};
}

Verdict
CheckFig4 (int threads)
{
  const Scenario s = LoadPreset ("fig4");
  const std::vector<CellOutcome> out = DebugSweep (s, threads);
  const auto thr = SeedMeans (out, [] (const MetricsLedger &m) { return Throughput (m); });
  const double lowBw = s.sweep.seriesValues.front ();
  const double highBw = s.sweep.seriesValues.back ();

  bool pass = true;
  std::string detail;
  for (double bw : s.sweep.seriesValues)
    {
      int rises = 0;
      double prev = -1.0;
      for (double v : s.sweep.values)
        {
          if (v <= 4.0)
            continue;
          const double t = thr.at (Key{ProtocolKind::kNew, bw, v});
          if (prev >= 0.0 && t > prev)
            ++rises;
          prev = t;
        }
      pass = pass && rises <= 1;
      detail += Fmt ("bw=%g rises=%d; ", bw, rises);
    }
  int below = 0;
  for (double v : s.sweep.values)
    if (thr.at (Key{ProtocolKind::kNew, highBw, v}) < thr.at (Key{ProtocolKind::kNew, lowBw, v}))
      ++below;
  pass = pass && below <= 1;
  detail += Fmt ("%g below %g at %d speeds", highBw, lowBw, below);
  return {pass, detail};
}

Verdict
CheckFig5 (int threads, std::string *info)
{
  const Scenario s = LoadPreset ("fig5");
  const auto t0 = Clock::now ();
  const std::vector<CellOutcome> out = DebugSweep (s, threads);
  const double secs = Seconds (t0);
  auto report = [&] (OverheadUnit unit, std::string &detail) {
    const auto ovh = SeedMeans (out, [unit] (const MetricsLedger &m) { return OverheadPerRequest (m, false, unit); });
    bool ordered = true;
    double aodvSum = 0.0, dsrSum = 0.0;
    for (double v : s.sweep.values)
      {
        const double a = ovh.at (Key{ProtocolKind::kAodv, 0.0, v});
        const double d = ovh.at (Key{ProtocolKind::kDsr, 0.0, v});
        const double n = ovh.at (Key{ProtocolKind::kNew, 0.0, v});
        ordered = ordered && n <= a && a < d;
        aodvSum += a;
        dsrSum += d;
        detail += Fmt ("d=%g new=%.2f aodv=%.2f dsr=%.2f; ", v, n, a, d);
      }
    const double aodv = aodvSum / s.sweep.values.size ();
    const double dsr = dsrSum / s.sweep.values.size ();
    detail += Fmt ("means aodv=%.2f dsr=%.2f", aodv, dsr);
    return ordered && aodv < 10.0 && dsr > 3.0 * aodv;
  };
  std::string detail;
  const bool pass = report (OverheadUnit::kTransmission, detail);
  detail += Fmt ("; %.0fs", secs);
  report (OverheadUnit::kOrigination, *info);
  return {pass && secs <= 600.0, detail};
}

Verdict
CheckStaticLine ()
{
  const std::vector<NodeSpot> line{{100, 500}, {300, 500}, {500, 500}, {700, 500}};
  // Hand count for one S->D request on S-A-B-D: RREQ broadcast by S, A, B
  // (D answers instead of forwarding) and RREP unicast D->B->A->S.
  const double expected = 3.0 + 3.0;
  bool pass = true;
  std::string detail;
  for (ProtocolKind p : {ProtocolKind::kAodv, ProtocolKind::kDsr, ProtocolKind::kNew})
    {
      auto net = MakeStaticNetwork (p, line);
      ConnectionSpec spec;
      spec.src = NodeId{0};
      spec.dest = NodeId{3};
      spec.demandedBw = spec.minBw = 300.0;
      spec.stop = 20.0;
      net->AddConnection (spec);
      net->RunUntil (22.0);
      net->Finish ();
      const MetricsLedger &m = net->Metrics ();
      const double pdr = Pdr (m);
      const double ovh = OverheadPerRequest (m);
      pass = pass && m.dataSent > 0 && pdr == 1.0 && ovh == expected && m.connectionRequests == 1;
      detail += Fmt ("%s pdr=%.6f overhead=%g; ", std::string (ToString (p)).c_str (), pdr, ovh);
    }
  detail += Fmt ("expected overhead %g", expected);
  return {pass, detail};
}

}  // namespace

int
main (int argc, char **argv)
{
  CLI::App app{"Acceptance checks for the MANET simulator"};
  int threads = 0;
  std::vector<std::string> only;
  app.add_option ("--threads", threads, "Worker threads for preset sweeps (0: all)");
  app.add_option ("--only", only, "Run only the named checks");
  CLI11_PARSE (app, argc, argv);

  auto wanted = [&] (const std::string &name) {
    return only.empty () || std::find (only.begin (), only.end (), name) != only.end ();
  };
  int failures = 0;
  auto emit = [&] (const std::string &name, const Verdict &v) {
    std::printf ("%s %-22s %s\n", v.pass ? "PASS" : "FAIL", name.c_str (), v.detail.c_str ());
    std::fflush (stdout);
    failures += v.pass ? 0 : 1;
  };

  if (wanted ("determinism"))
    emit ("determinism", CheckDeterminism (threads));
  if (wanted ("routing_oracle"))
    emit ("routing_oracle", CheckRoutingOracle ());
  if (wanted ("drop_oracle"))
    emit ("drop_oracle", CheckDropOracle ());
  if (wanted ("static_line"))
    emit ("static_line", CheckStaticLine ());

  std::uint64_t batchesScanned = 0;
  std::string fig5Origination;
  if (wanted ("fig3b_trend"))
    emit ("fig3b_trend", CheckFig3b (threads));
  if (wanted ("fig4_trend"))
    emit ("fig4_trend", CheckFig4 (threads));
  if (wanted ("fig5_magnitude"))
    {
      emit ("fig5_magnitude", CheckFig5 (threads, &fig5Origination));
      std::printf ("INFO fig5 per origination  %s\n", fig5Origination.c_str ());
    }
  if (wanted ("capacity"))
    {
      // fig3a has no trend line of its own; sweep it here so every preset is covered.
      const auto t0 = Clock::now ();
      DebugSweep (LoadPreset ("fig3a"), threads);
      if (wanted ("fig3b_trend"))
        DebugSweep (LoadPreset ("fig3b"), threads, ProtocolKind::kDsr);
      const bool pass = g_tally.invariantViolations == 0 && g_tally.failedCells == 0;
      emit ("capacity_conservation",
            {pass, Fmt ("%llu debug cells, %llu violations, %llu failed cells (last sweep %.0fs)",
                        static_cast<unsigned long long> (g_tally.cells),
                        static_cast<unsigned long long> (g_tally.invariantViolations),
                        static_cast<unsigned long long> (g_tally.failedCells), Seconds (t0))});
    }
  if (wanted ("priority_protection"))
    emit ("priority_protection", CheckPriorityProtection (&batchesScanned));
  if (wanted ("serial_order"))
    emit ("serial_order", {g_tally.serialViolations == 0,
                           Fmt ("%llu violations over all debug sweeps (%llu batch members in priority runs)",
                                static_cast<unsigned long long> (g_tally.serialViolations),
                                static_cast<unsigned long long> (batchesScanned))});
  return failures == 0 ? 0 : 1;
}
