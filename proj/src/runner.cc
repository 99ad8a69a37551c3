#include "manet/runner.h"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace manet {

std::string_view
ArtifactVersion ()
{
  return MANET_VERSION;
}

RunResult
RunScenario (const Scenario &s, ProtocolKind protocol, std::uint64_t seed, const RunOptions &opt)
{
  std::unique_ptr<Network> net = BuildNetwork (s, protocol, seed, opt.debugInvariants);
  net->RunUntil (s.duration);
  net->Finish ();

  RunResult r;
  r.ledger = net->Metrics ();
  r.invariantViolations = net->InvariantViolations ();
  const auto &records = net->Log ().Records ();
  r.priorityInversions = CountPriorityInversions (records);
  r.serialOrderViolations = CountSerialOrderViolations (records);
  if (opt.keepLog)
    r.log = records;
  return r;
}

std::vector<SweepCell>
EnumerateCells (const Scenario &s, const SweepOptions &opt)
{
  std::vector<ProtocolKind> protocols = s.protocols;
  if (opt.protocol)
    protocols = {*opt.protocol};
  std::vector<std::uint64_t> seeds = s.seeds;
  if (opt.seed)
    seeds = {*opt.seed};
  std::vector<std::optional<double>> series;
  for (double v : s.sweep.seriesValues)
    series.emplace_back (v);
  if (series.empty ())
    series.emplace_back ();
  std::vector<SweepCell> cells;
  for (ProtocolKind p : protocols)
    for (const std::optional<double> &sv : series)
      for (double v : s.sweep.values)
        for (std::uint64_t seed : seeds)
          cells.push_back (SweepCell{p, sv, v, seed});
  return cells;
}

Scenario
PinCell (const Scenario &s, const SweepCell &cell)
{
  Scenario out = s;
  if (cell.seriesValue)
    out = ApplyAxis (out, s.sweep.seriesAxis, *cell.seriesValue);
  return ApplyAxis (out, s.sweep.axis, cell.axisValue);
}

namespace {

CellOutcome
RunCell (const Scenario &s, const SweepCell &cell, const RunOptions &opt)
{
  CellOutcome out;
  out.cell = cell;
  try
    {
      out.result = RunScenario (PinCell (s, cell), cell.protocol, cell.seed, opt);
      out.ok = true;
    }
  catch (const std::exception &e)
    {
      out.error = e.what ();
    }
  return out;
}

}  // namespace

std::vector<CellOutcome>
RunSweepSerial (const Scenario &s, const SweepOptions &opt)
{
  Validate (s);
  std::vector<CellOutcome> out;
  for (const SweepCell &cell : EnumerateCells (s, opt))
    out.push_back (RunCell (s, cell, opt.run));
  return out;
}

std::vector<CellOutcome>
RunSweep (const Scenario &s, const SweepOptions &opt)
{
  if (!opt.parallel)
    return RunSweepSerial (s, opt);
  Validate (s);
  const std::vector<SweepCell> cells = EnumerateCells (s, opt);
  std::vector<CellOutcome> out (cells.size ());
  const long n = static_cast<long> (cells.size ());
#ifdef _OPENMP
  const int threads = opt.threads > 0 ? opt.threads : omp_get_max_threads ();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
  for (long i = 0; i < n; ++i)
    out[static_cast<std::size_t> (i)] = RunCell (s, cells[static_cast<std::size_t> (i)], opt.run);
  return out;
}

CsvRow
MakeRow (const Scenario &s, const SweepCell &cell, const MetricsLedger &ledger)
{
  const Scenario pinned = PinCell (s, cell);
  CsvRow row;
  row.scenario = ScenarioHash (s);
  row.preset = s.name;
  row.protocol = std::string (ToString (cell.protocol));
  row.seed = cell.seed;
  row.nodeCount = pinned.nodeCount;
  row.speed = pinned.speedMax;
  row.bwDemand = 0.5 * (pinned.mix.demandMin + pinned.mix.demandMax);
  row.pdr = Pdr (ledger);
  row.throughputBps = Throughput (ledger);
  row.overheadPerReq = OverheadPerRequest (ledger, s.includeHelloOverhead, s.overheadUnit);
  row.overheadInclHello = OverheadPerRequest (ledger, true, s.overheadUnit);
  auto count = [&] (const char *key) -> std::uint64_t {
    auto it = ledger.dropsByReason.find (key);
    return it == ledger.dropsByReason.end () ? 0 : it->second;
  };
  row.dropsPolicy = count ("conn_policy");
  row.dropsUnreachable = count ("conn_unreachable");
  row.artifactVersion = std::string (ArtifactVersion ());
  return row;
}

std::string
CsvHeader ()
{
  return "scenario,preset,protocol,seed,node_count,speed,bw_demand,pdr,throughput_bps,overhead_per_req,"
         "overhead_incl_hello,drops_policy,drops_unreachable,artifact_version";
}

std::string
FormatRow (const CsvRow &r)
{
  char buf[512];
  std::snprintf (buf, sizeof buf, "%s,%s,%s,%llu,%d,%.3f,%.3f,%.6f,%.3f,%.6f,%.6f,%llu,%llu,%s", r.scenario.c_str (),
                 r.preset.c_str (), r.protocol.c_str (), static_cast<unsigned long long> (r.seed), r.nodeCount, r.speed,
                 r.bwDemand, r.pdr, r.throughputBps, r.overheadPerReq, r.overheadInclHello,
                 static_cast<unsigned long long> (r.dropsPolicy), static_cast<unsigned long long> (r.dropsUnreachable),
                 r.artifactVersion.c_str ());
  return buf;
}

void
WriteCsv (std::ostream &out, const Scenario &s, const std::vector<CellOutcome> &outcomes)
{
  out << CsvHeader () << '\n';
  for (const CellOutcome &o : outcomes)
    if (o.ok)
      out << FormatRow (MakeRow (s, o.cell, o.result.ledger)) << '\n';
}

std::vector<CsvRow>
ParseCsv (std::istream &in)
{
  std::vector<CsvRow> rows;
  std::string line;
  if (!std::getline (in, line) || line != CsvHeader ())
    throw std::runtime_error ("CSV header does not match the expected schema");
  while (std::getline (in, line))
    {
      if (line.empty ())
        continue;
      std::vector<std::string> f;
      std::stringstream ss (line);
      std::string cell;
      while (std::getline (ss, cell, ','))
        f.push_back (cell);
      if (f.size () != 14)
        throw std::runtime_error ("CSV row has " + std::to_string (f.size ()) + " fields, expected 14");
      CsvRow r;
      r.scenario = f[0];
      r.preset = f[1];
      r.protocol = f[2];
      r.seed = std::stoull (f[3]);
      r.nodeCount = std::stoi (f[4]);
      r.speed = std::stod (f[5]);
      r.bwDemand = std::stod (f[6]);
      r.pdr = std::stod (f[7]);
      r.throughputBps = std::stod (f[8]);
      r.overheadPerReq = std::stod (f[9]);
      r.overheadInclHello = std::stod (f[10]);
      r.dropsPolicy = std::stoull (f[11]);
      r.dropsUnreachable = std::stoull (f[12]);
      r.artifactVersion = f[13];
      rows.push_back (std::move (r));
    }
  return rows;
}

}  // namespace manet
