#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "manet/metrics.h"
#include "manet/scenario.h"

namespace manet {

/// Version string stamped into every CSV row.
std::string_view ArtifactVersion ();

struct RunResult
{
  MetricsLedger ledger;
  std::uint64_t invariantViolations{0};
  std::uint64_t priorityInversions{0};
  std::uint64_t serialOrderViolations{0};
  std::vector<LogRecord> log;  ///< filled only when requested
};

struct RunOptions
{
  bool debugInvariants{false};
  bool keepLog{false};
};

/// One simulation: build, run for the scenario duration, collect.
RunResult RunScenario (const Scenario &s, ProtocolKind protocol, std::uint64_t seed, const RunOptions &opt = {});

struct SweepCell
{
  ProtocolKind protocol{ProtocolKind::kAodv};
  std::optional<double> seriesValue;
  double axisValue{0.0};
  std::uint64_t seed{1};
};

/// The scenario one cell runs: series and axis values applied.
Scenario PinCell (const Scenario &s, const SweepCell &cell);

struct CellOutcome
{
  SweepCell cell;
  bool ok{false};
  std::string error;
  RunResult result;
};

struct SweepOptions
{
  bool parallel{true};
  int threads{0};  ///< 0: OpenMP default
  RunOptions run;
  std::optional<ProtocolKind> protocol;  ///< restrict to one protocol
  std::optional<std::uint64_t> seed;     ///< replace the seed list
};

/// Cells in output order: protocol, series value, axis value, seed.
std::vector<SweepCell> EnumerateCells (const Scenario &s, const SweepOptions &opt = {});

/// Runs every cell. With `parallel` the cells are spread over OpenMP
/// threads; results come back in cell order either way.
std::vector<CellOutcome> RunSweep (const Scenario &s, const SweepOptions &opt = {});
/// Plain loop over the cells; the reference the parallel path is tested
/// against.
std::vector<CellOutcome> RunSweepSerial (const Scenario &s, const SweepOptions &opt = {});

struct CsvRow
{
  std::string scenario;
  std::string preset;
  std::string protocol;
  std::uint64_t seed{0};
  int nodeCount{0};
  double speed{0.0};
  double bwDemand{0.0};
  double pdr{0.0};
  double throughputBps{0.0};
  double overheadPerReq{0.0};
  double overheadInclHello{0.0};
  std::uint64_t dropsPolicy{0};
  std::uint64_t dropsUnreachable{0};
  std::string artifactVersion;
};

CsvRow MakeRow (const Scenario &s, const SweepCell &cell, const MetricsLedger &ledger);
std::string CsvHeader ();
std::string FormatRow (const CsvRow &row);
/// Header plus one row per successful cell, in cell order.
void WriteCsv (std::ostream &out, const Scenario &s, const std::vector<CellOutcome> &outcomes);
std::vector<CsvRow> ParseCsv (std::istream &in);

}  // namespace manet
