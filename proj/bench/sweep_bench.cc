// Serial reference loop against the OpenMP sweep on a reduced preset.

#include <benchmark/benchmark.h>

#include "manet/runner.h"

using namespace manet;

namespace {

Scenario
SmallSweep ()
{
  Scenario s = LoadPreset ("fig3a");
  s.duration = 30.0;
  s.protocols = {ProtocolKind::kAodv, ProtocolKind::kNew};
  s.sweep.values = {5.0, 20.0};
  s.seeds = {1, 2};
  return s;
}

void
BM_SweepSerial (benchmark::State &state)
{
  const Scenario s = SmallSweep ();
  SweepOptions opt;
  opt.parallel = false;
  for (auto _ : state)
    benchmark::DoNotOptimize (RunSweep (s, opt));
  state.SetItemsProcessed (state.iterations () * static_cast<long> (EnumerateCells (s).size ()));
}

void
BM_SweepParallel (benchmark::State &state)
{
  const Scenario s = SmallSweep ();
  SweepOptions opt;
  opt.parallel = true;
  opt.threads = static_cast<int> (state.range (0));
  for (auto _ : state)
    benchmark::DoNotOptimize (RunSweep (s, opt));
  state.SetItemsProcessed (state.iterations () * static_cast<long> (EnumerateCells (s).size ()));
}

}  // namespace

BENCHMARK (BM_SweepSerial)->Unit (benchmark::kMillisecond)->UseRealTime ();
BENCHMARK (BM_SweepParallel)->Arg (1)->Arg (2)->Arg (4)->Unit (benchmark::kMillisecond)->UseRealTime ();

BENCHMARK_MAIN ();
