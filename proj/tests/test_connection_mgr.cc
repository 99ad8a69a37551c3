#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "manet/connection_mgr.h"
#include "manet/metrics.h"

using namespace manet;

namespace {

Connection
Spec (std::uint32_t src, std::uint32_t dest, Priority p, double demand, double min)
{
  Connection c;
  c.src = NodeId{src};
  c.dest = NodeId{dest};
  c.priority = p;
  c.demandedBw = demand;
  c.minBw = min;
  return c;
}

// Occupy `bw` at node 0 with a connection of the given priority.
ConnectionId
Occupy (ConnectionManager &m, double bw, Priority p)
{
  const ConnectionId id = m.Add (Spec (0, 1, p, bw, bw));
  REQUIRE (m.Admit (NodeId{0}, id).outcome == AdmitOutcome::kGranted);
  return id;
}

}  // namespace

TEST_SUITE ("connection_mgr")
{
  TEST_CASE ("admission outcomes")
  {
    SUBCASE ("fits fully")
    {
      ConnectionManager m ({10, 10}, AdmissionPolicy::kNegotiated);
      Occupy (m, 4, Priority::kBulk);
      const ConnectionId c = m.Add (Spec (0, 1, Priority::kBulk, 5, 3));
      const AdmitResult r = m.Admit (NodeId{0}, c);
      CHECK (r.outcome == AdmitOutcome::kGranted);
      CHECK (r.bandwidth == 5.0);
    }
    SUBCASE ("renegotiated to the residual")
    {
      ConnectionManager m ({10, 10}, AdmissionPolicy::kNegotiated);
      Occupy (m, 6, Priority::kBulk);
      const ConnectionId c = m.Add (Spec (0, 1, Priority::kBulk, 5, 3));
      const AdmitResult r = m.Admit (NodeId{0}, c);
      CHECK (r.outcome == AdmitOutcome::kRenegotiated);
      CHECK (r.bandwidth == doctest::Approx (10.0 - 6.0));
      CHECK (r.drops.empty ());
    }
    SUBCASE ("no capacity and no lower-priority victims")
    {
      ConnectionManager m ({10, 10}, AdmissionPolicy::kNegotiated);
      Occupy (m, 5, Priority::kRealtime);
      Occupy (m, 4, Priority::kRealtime);
      const ConnectionId c = m.Add (Spec (0, 1, Priority::kRealtime, 5, 3));
      CHECK (m.Admit (NodeId{0}, c).outcome == AdmitOutcome::kRejected);
      CHECK (m.Ledger (NodeId{0}).Used () == 9.0);
    }
    SUBCASE ("strict policy never renegotiates")
    {
      ConnectionManager m ({10, 10}, AdmissionPolicy::kStrict);
      Occupy (m, 6, Priority::kBulk);
      const ConnectionId c = m.Add (Spec (0, 1, Priority::kRealtime, 5, 3));
      CHECK (m.Admit (NodeId{0}, c).outcome == AdmitOutcome::kRejected);
    }
    SUBCASE ("drops make room for a higher-priority arrival")
    {
      ConnectionManager m ({10, 10}, AdmissionPolicy::kNegotiated);
      const ConnectionId big = Occupy (m, 5, Priority::kBulk);
      const ConnectionId small = Occupy (m, 4, Priority::kBulk);
      const ConnectionId c = m.Add (Spec (0, 1, Priority::kRealtime, 5, 3));
      const AdmitResult r = m.Admit (NodeId{0}, c);
      REQUIRE (r.Admitted ());
      CHECK (r.drops == std::vector<ConnectionId>{big});
      CHECK (m.Get (big).state == ConnState::kDropped);
      CHECK (m.Get (small).state != ConnState::kDropped);
      CHECK (m.Ledger (NodeId{0}).Used () <= 10.0);
    }
  }

  TEST_CASE ("select drops prefers one large victim")
  {
    const std::vector<DropCandidate> cands{{ConnectionId{0}, Priority::kBulk, 5}, {ConnectionId{1}, Priority::kBulk, 2}};
    CHECK (SelectDropsFrom (cands, 4, Priority::kRealtime) == std::vector<ConnectionId>{ConnectionId{0}});
    CHECK (SelectDropsFrom (cands, 6, Priority::kRealtime) == std::vector<ConnectionId>{ConnectionId{0}, ConnectionId{1}});
    CHECK (SelectDropsFrom (cands, 8, Priority::kRealtime).empty ());
  }

  TEST_CASE ("select drops never picks equal or higher priority")
  {
    const std::vector<DropCandidate> rt{{ConnectionId{0}, Priority::kRealtime, 5}, {ConnectionId{1}, Priority::kRealtime, 2}};
    CHECK (SelectDropsFrom (rt, 1, Priority::kRealtime).empty ());
    const std::vector<DropCandidate> bulk{{ConnectionId{0}, Priority::kBulk, 5}};
    CHECK (SelectDropsFrom (bulk, 1, Priority::kBulk).empty ());
  }

  TEST_CASE ("greedy matches exhaustive feasibility on random candidate sets")
  {
    std::mt19937 gen (99);
    std::uniform_int_distribution<int> size (0, 8);
    std::uniform_int_distribution<int> bw (1, 6);
    std::bernoulli_distribution rt (0.4);
    for (int trial = 0; trial < 2000; ++trial)
      {
        std::vector<DropCandidate> cands;
        const int n = size (gen);
        for (int i = 0; i < n; ++i)
          cands.push_back ({ConnectionId{static_cast<std::uint32_t> (i)}, rt (gen) ? Priority::kRealtime : Priority::kBulk,
                            static_cast<double> (bw (gen))});
        const double needed = std::uniform_real_distribution<double> (0.1, 30.0) (gen);
        bool feasible = false;
        for (std::uint32_t mask = 0; mask < (1u << n) && !feasible; ++mask)
          {
            double s = 0;
            bool eligible = true;
            for (int i = 0; i < n; ++i)
              if (mask & (1u << i))
                {
                  eligible = eligible && cands[i].priority == Priority::kBulk;
                  s += cands[i].bandwidth;
                }
            feasible = eligible && mask != 0 && s >= needed;
          }
        const std::vector<ConnectionId> got = SelectDropsFrom (cands, needed, Priority::kRealtime);
        CHECK (!got.empty () == feasible);
        double freed = 0;
        for (ConnectionId id : got)
          {
            CHECK (cands[id.value].priority == Priority::kBulk);
            freed += cands[id.value].bandwidth;
          }
        if (!got.empty ())
          CHECK (freed >= needed);
      }
  }

  TEST_CASE ("commit path grants the bottleneck along the route")
  {
    ConnectionManager m ({10, 10, 3, 10}, AdmissionPolicy::kNegotiated);
    const ConnectionId c = m.Add (Spec (0, 3, Priority::kBulk, 5, 2));
    const std::vector<NodeId> path{NodeId{0}, NodeId{1}, NodeId{2}, NodeId{3}};
    REQUIRE (m.CommitPath (c, path));
    CHECK (m.Get (c).state == ConnState::kActive);
    CHECK (m.Get (c).allocatedBw == 3.0);
    for (NodeId n : path)
      CHECK (*m.Ledger (n).GrantOf (c) == 3.0);
    CHECK (m.CheckInvariants (true));
  }

  TEST_CASE ("commit path is all or nothing")
  {
    ConnectionManager m ({10, 10, 1, 10}, AdmissionPolicy::kNegotiated);
    const ConnectionId c = m.Add (Spec (0, 3, Priority::kBulk, 5, 2));
    CHECK_FALSE (m.CommitPath (c, std::vector<NodeId>{NodeId{0}, NodeId{1}, NodeId{2}, NodeId{3}}));
    for (std::uint32_t i = 0; i < 4; ++i)
      CHECK (m.Ledger (NodeId{i}).Used () == 0.0);
    CHECK_FALSE (m.CommitPath (c, std::vector<NodeId>{NodeId{0}, NodeId{1}, NodeId{0}, NodeId{3}}));
    CHECK_FALSE (m.CommitPath (c, std::vector<NodeId>{NodeId{1}, NodeId{3}}));
  }

  TEST_CASE ("recommit moves grants off the old path")
  {
    ConnectionManager m ({10, 10, 10, 10}, AdmissionPolicy::kStrict);
    const ConnectionId c = m.Add (Spec (0, 3, Priority::kBulk, 4, 4));
    REQUIRE (m.CommitPath (c, std::vector<NodeId>{NodeId{0}, NodeId{1}, NodeId{3}}));
    REQUIRE (m.CommitPath (c, std::vector<NodeId>{NodeId{0}, NodeId{2}, NodeId{3}}));
    CHECK_FALSE (m.Ledger (NodeId{1}).GrantOf (c));
    CHECK (*m.Ledger (NodeId{2}).GrantOf (c) == 4.0);
  }

  TEST_CASE ("teardown releases every ledger once")
  {
    ConnectionManager m ({10, 10, 10, 10}, AdmissionPolicy::kStrict);
    int notified = 0;
    m.SetTeardownListener ([&] (const Connection &, TeardownReason) { ++notified; });
    const ConnectionId c = m.Add (Spec (0, 3, Priority::kBulk, 4, 4));
    const std::vector<NodeId> path{NodeId{0}, NodeId{1}, NodeId{2}, NodeId{3}};
    REQUIRE (m.CommitPath (c, path));
    m.Teardown (c, TeardownReason::kPolicy);
    CHECK (m.Get (c).state == ConnState::kDropped);
    CHECK (m.Get (c).allocatedBw == 0.0);
    for (NodeId n : path)
      CHECK (m.Ledger (n).Used () == 0.0);
    m.Teardown (c, TeardownReason::kUnreachable);
    CHECK (m.Get (c).state == ConnState::kDropped);
    CHECK (notified == 1);

    const ConnectionId d = m.Add (Spec (0, 3, Priority::kBulk, 10, 10));
    CHECK (m.CommitPath (d, path));
  }

  TEST_CASE ("begin repair zeroes the allocation")
  {
    ConnectionManager m ({10, 10}, AdmissionPolicy::kStrict);
    const ConnectionId c = m.Add (Spec (0, 1, Priority::kBulk, 4, 4));
    REQUIRE (m.CommitPath (c, std::vector<NodeId>{NodeId{0}, NodeId{1}}));
    m.BeginRepair (c);
    CHECK (m.Get (c).state == ConnState::kRepairing);
    CHECK (m.Get (c).allocatedBw == 0.0);
    CHECK (m.Ledger (NodeId{0}).Used () == 0.0);
    CHECK (m.CheckInvariants (true));
  }

  TEST_CASE ("re-establishment order")
  {
    ConnectionManager m ({10, 10, 10, 10}, AdmissionPolicy::kNegotiated);
    RunLog log;
    Reestablisher r (m, &log);
    auto live = [&] (Priority p) {
      const ConnectionId id = m.Add (Spec (0, 1, p, 1, 1));
      m.Get (id).state = ConnState::kActive;
      return id;
    };

    SUBCASE ("realtime before bulk")
    {
      const ConnectionId c1 = live (Priority::kBulk);
      const ConnectionId c2 = live (Priority::kRealtime);
      std::vector<ConnectionId> launched;
      std::vector<Reestablisher::Done> pending;
      const auto order = r.ReestablishAll (NodeId{0}, ReestablishMode::kSerial, [&] (ConnectionId c, Reestablisher::Done d) {
        launched.push_back (c);
        pending.push_back (std::move (d));
      });
      CHECK (order == std::vector<ConnectionId>{c2, c1});
      REQUIRE (launched == std::vector<ConnectionId>{c2});
      pending.back () ();
      CHECK (launched == std::vector<ConnectionId>{c2, c1});
      pending.back () ();
      CHECK_FALSE (r.BatchRunning (NodeId{0}));
      CHECK (CountSerialOrderViolations (log.Records ()) == 0);
    }
    SUBCASE ("equal priority keeps id order")
    {
      const ConnectionId a = live (Priority::kRealtime);
      const ConnectionId b = live (Priority::kRealtime);
      const ConnectionId c = live (Priority::kRealtime);
      const auto order = r.ReestablishAll (NodeId{0}, ReestablishMode::kSerial, [] (ConnectionId, Reestablisher::Done d) { d (); });
      CHECK (order == std::vector<ConnectionId>{a, b, c});
    }
    SUBCASE ("a single connection behaves the same in both modes")
    {
      const ConnectionId a = live (Priority::kBulk);
      std::vector<ConnectionId> serial;
      std::vector<ConnectionId> parallel;
      r.ReestablishAll (NodeId{0}, ReestablishMode::kSerial, [&] (ConnectionId c, Reestablisher::Done d) {
        serial.push_back (c);
        d ();
      });
      r.ReestablishAll (NodeId{0}, ReestablishMode::kParallel, [&] (ConnectionId c, Reestablisher::Done d) {
        parallel.push_back (c);
        d ();
      });
      CHECK (serial == std::vector<ConnectionId>{a});
      CHECK (parallel == serial);
    }
    SUBCASE ("parallel launches everything at once")
    {
      live (Priority::kBulk);
      live (Priority::kRealtime);
      live (Priority::kBulk);
      int launched = 0;
      r.ReestablishAll (NodeId{0}, ReestablishMode::kParallel, [&] (ConnectionId, Reestablisher::Done) { ++launched; });
      CHECK (launched == 3);
    }
  }

  TEST_CASE ("serial-order and inversion scans")
  {
    std::vector<LogRecord> recs{
      {0, LogKind::kBatchStart, 1, 0, 1, Priority::kRealtime, 0},
      {0, LogKind::kBatchStart, 2, 0, 1, Priority::kBulk, 0},
      {0, LogKind::kBatchDiscoveryStart, 1, 0, 1, Priority::kRealtime, 0},
      {0, LogKind::kBatchDiscoveryStart, 2, 0, 1, Priority::kBulk, 0},
      {1, LogKind::kBatchDiscoveryEnd, 1, 0, 1, Priority::kRealtime, 1},
    };
    CHECK (CountSerialOrderViolations (recs) == 1);
    std::swap (recs[3], recs[4]);
    CHECK (CountSerialOrderViolations (recs) == 0);

    const std::vector<LogRecord> drops{
      {0, LogKind::kPolicyDrop, 1, 0, 0, Priority::kRealtime, static_cast<int> (Priority::kBulk)},
      {0, LogKind::kPolicyDrop, 2, 0, 0, Priority::kBulk, static_cast<int> (Priority::kRealtime)},
    };
    CHECK (CountPriorityInversions (drops) == 1);
  }
}
