#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "bcastq/chain_oracle.hpp"
#include "bcastq/fair.hpp"
#include "bcastq/network.hpp"
#include "bcastq/simulator.hpp"
#include "bcastq/waiting_time.hpp"
#include "oracles.hpp"

using namespace bcastq;

namespace {
const SystemParams kSet{0.05, 1.0, 0.05, 4, std::nullopt};
constexpr double kR = 0.3;
const SystemParams kFairSet{0.04, 1.0, 0.05, 4, std::nullopt};
constexpr double kFairR = 0.4;

bool within(const BatchAccumulator& a, double target, double k = 3.0) {
  const double z = std::abs(a.mean() - target) / a.se();
  if (!(z <= k)) MESSAGE("mean " << a.mean() << " target " << target << " se " << a.se());
  return z <= k;
}

SimOptions short_run(std::int64_t epochs = 200'000) {
  SimOptions o;
  o.epochs = epochs;
  o.warmup = 10'000;
  return o;
}

const SimStats& long_greedy() {
  static const SimStats s = [] {
    SimOptions o;
    o.hist_stride = 200;
    return run_station(ChannelMode::Greedy, kSet, BusyProb(kR), 20240601, o);
  }();
  return s;
}
}  // namespace

TEST_CASE("greedy step rules") {
  const SystemParams p = kSet;
  const auto s = step_greedy({3, 2, 0.0}, false, 0, 0, p);
  CHECK(s.K == 2);
  CHECK(s.N == 2);
  CHECK(s.clock == 0.05);

  const auto full = step_greedy({3, 2, 0.0}, true, 1, 0, p);
  CHECK(full.K == 3);
  CHECK(full.N == 3);
  CHECK(full.clock == 1.0);

  CHECK(slot_length(ChannelMode::Greedy, {0, 1, 0.0}, false, p) == 1.0);
  const auto sent = step_greedy({0, 1, 0.0}, false, 0, 4, p);
  CHECK(sent == StationState{0, 0, 1.0});

  const auto again = step_greedy({0, 2, 0.0}, false, 0, 4, p);
  CHECK(again == StationState{4, 1, 1.0});

  const auto woke = step_greedy({0, 0, 0.0}, false, 2, 3, p);
  CHECK(woke == StationState{3, 2, 0.05});
  const auto quiet = step_greedy({0, 0, 0.0}, true, 0, 3, p);
  CHECK(quiet == StationState{0, 0, 1.0});
}

TEST_CASE("fair step rules") {
  const SystemParams p = kSet;
  const auto back = step_fair({0, 1, 0.0}, false, 0, 3, p);
  CHECK(back == StationState{3, 1, 0.05});
  const auto sent = step_fair({0, 1, 0.0}, true, 0, 3, p);
  CHECK(sent == StationState{0, 0, 1.0});
  CHECK(step_fair({2, 5, 0.0}, false, 1, 0, p) == StationState{1, 6, 0.05});
  CHECK(step_fair({0, 0, 0.0}, false, 1, 2, p) == step_greedy({0, 0, 0.0}, false, 1, 2, p));
}

TEST_CASE("with every slot full the two modes take the same steps") {
  for (int N = 1; N < 5; ++N)
    for (int a = 0; a < 3; ++a)
      for (int u = 0; u <= 4; ++u) CHECK(step_fair({0, N, 0.0}, true, a, u, kSet) == step_greedy({0, N, 0.0}, true, a, u, kSet));
}

TEST_CASE("batch accumulator") {
  BatchAccumulator a(4);
  for (int i = 0; i < 8; ++i) a.add(i % 4, i);
  CHECK(a.mean() == doctest::Approx(3.5));
  CHECK(a.count() == 8);
  CHECK(a.batch_means().size() == 4);
  CHECK(a.se() > 0.0);

  BatchAccumulator b(2), c(2), d(2);
  b.add(0, 1.0), b.add(1, 2.0), c.add(0, 3.0), c.add(1, 5.0), d.add(0, 7.0), d.add(1, 11.0);
  BatchAccumulator left = b, right = c;
  left.merge(c);
  left.merge(d);
  right.merge(d);
  BatchAccumulator b2 = b;
  b2.merge(right);
  CHECK(left == b2);
  CHECK(left.batches() == 6);
}

TEST_CASE("substreams differ") {
  auto a = substream(7, 1), b = substream(7, 2), c = substream(8, 1), a2 = substream(7, 1);
  const auto x = a();
  CHECK(x != b());
  CHECK(x != c());
  CHECK(x == a2());
}

TEST_CASE("idle station") {
  for (auto mode : {ChannelMode::Greedy, ChannelMode::Fair}) {
    const auto s = run_station(mode, {0.0, 1.0, 0.05, 4, std::nullopt}, BusyProb(kR), 5, short_run());
    CHECK(s.idle.mean() == 1.0);
    CHECK(s.transmit.mean() == 0.0);
    CHECK(s.queue.mean() == 0.0);
  }
}

TEST_CASE("fixed seed is bit-identical, other seeds are not") {
  const auto a = run_station(ChannelMode::Greedy, kSet, BusyProb(kR), 99, short_run());
  const auto b = run_station(ChannelMode::Greedy, kSet, BusyProb(kR), 99, short_run());
  const auto c = run_station(ChannelMode::Greedy, kSet, BusyProb(kR), 100, short_run());
  CHECK(a == b);
  CHECK_FALSE(a == c);
  std::ostringstream oa, ob;
  a.write_csv(oa);
  b.write_csv(ob);
  CHECK(oa.str() == ob.str());
  CHECK(oa.str().rfind("# ", 0) == 0);

  const auto n1 = run_network(ChannelMode::Fair, kFairSet, 3, 4, short_run(50'000));
  const auto n2 = run_network(ChannelMode::Fair, kFairSet, 3, 4, short_run(50'000));
  CHECK(n1 == n2);
}

TEST_CASE("merging runs is associative") {
  const auto a = run_station(ChannelMode::Fair, kFairSet, BusyProb(kFairR), 1, short_run(20'000));
  const auto b = run_station(ChannelMode::Fair, kFairSet, BusyProb(kFairR), 2, short_run(20'000));
  const auto c = run_station(ChannelMode::Fair, kFairSet, BusyProb(kFairR), 3, short_run(20'000));
  SimStats left = a, bc = b;
  left.merge(b);
  left.merge(c);
  bc.merge(c);
  SimStats right = a;
  right.merge(bc);
  CHECK(left.total_time == doctest::Approx(right.total_time).epsilon(1e-14));
  right.total_time = left.total_time;
  CHECK(left == right);
  CHECK(left.epochs == 60'000);
}

TEST_CASE("greedy long run against the analytic solution") {
  const auto& s = long_greedy();
  const GreedyStation g(kSet, BusyProb(kR));
  const WaitTransform w(g);
  CHECK(s.epochs == 10'000'000);
  CHECK(within(s.transmit, g.tau()));
  CHECK(within(s.idle, g.p00()));
  CHECK(within(s.cycle, w.mean_cycle_length()));
  CHECK(within(s.virtual_wait, w.mean_wait()));
  for (std::size_t i = 0; i < s.laplace_s.size(); ++i) CHECK(within(s.laplace[i], w.psi_star(s.laplace_s[i])));
  const auto table = g.stationary_table(60);
  CHECK(within(s.queue, table.mean_queue()));
  CHECK(within(s.busy, kR + (1 - kR) * g.tau()));  // forced transmissions fill slots too
  CHECK_FALSE(s.drift_warning);
  CHECK(s.full_slots + s.mini_slots == s.epochs);
  CHECK(s.total_time / s.epochs == doctest::Approx(s.cycle.mean()).epsilon(1e-9));
}

TEST_CASE("stationary histogram passes a chi-square test") {
  const auto& s = long_greedy();
  const auto chain = solve_stationary(TruncatedChain::build(ChannelMode::Greedy, kSet, BusyProb(kR), 60));
  REQUIRE(s.hist_n_max == 60);
  const double n = static_cast<double>(s.hist_samples);
  REQUIRE(n > 40'000);
  // pool cells until the expected count reaches 5
  double stat = 0.0, pool_e = 0.0, pool_o = 0.0;
  int cells = 0;
  for (int k = 0; k <= kSet.W; ++k)
    for (int m = 0; m <= 60; ++m) {
      const double e = n * chain.table.at(k, m);
      const double o = static_cast<double>(s.histogram[k * 61 + m]);
      if (k >= 1 && m == 0) {
        CHECK(o == 0.0);
        continue;
      }
      pool_e += e;
      pool_o += o;
      if (pool_e >= 5.0) {
        stat += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
        ++cells;
        pool_e = pool_o = 0.0;
      }
    }
  if (pool_e > 0) stat += (pool_o - pool_e) * (pool_o - pool_e) / std::max(pool_e, 1e-300);
  const double crit = oracle::chi_squared_critical(cells - 1, 0.001);
  MESSAGE("chi2 = " << stat << " on " << cells - 1 << " dof, critical " << crit);
  CHECK(stat < crit);
}

TEST_CASE("fair long run against the analytic solution") {
  const auto s = run_station(ChannelMode::Fair, kFairSet, BusyProb(kFairR), 777);
  const FairStation f(kFairSet, BusyProb(kFairR));
  CHECK(within(s.idle, f.q00()));
  CHECK(within(s.transmit, f.taubar()));
  CHECK(within(s.cycle, f.mean_slot_length()));
  CHECK(within(s.queue, f.stationary_table(60).mean_queue()));
}

TEST_CASE("non-ergodic drift is flagged") {
  SimOptions o = short_run(500'000);
  const auto s = run_station(ChannelMode::Greedy, {0.9, 1.0, 0.05, 4, std::nullopt}, BusyProb(kR), 3, o);
  CHECK(s.drift_warning);
  CHECK_FALSE(s.warnings.empty());
}

TEST_CASE("network of one greedy station is a station on an idle channel") {
  SimOptions o;
  o.epochs = 2'000'000;
  const auto net = run_network(ChannelMode::Greedy, kSet, 1, 31, o);
  const auto one = run_station(ChannelMode::Greedy, kSet, BusyProb(0.0), 32, o);
  const double se = std::hypot(net.transmit.se(), one.transmit.se());
  CHECK(std::abs(net.transmit.mean() - one.transmit.mean()) <= 3 * se);
  const double se_i = std::hypot(net.idle.se(), one.idle.se());
  CHECK(std::abs(net.idle.mean() - one.idle.mean()) <= 3 * se_i);
  CHECK(net.collision_slots == 0);
}

TEST_CASE("network slot accounting and mean-field diagnostic") {
  SimOptions o;
  o.epochs = 1'000'000;
  const SystemParams p{0.005, 1.0, 0.05, 31, std::nullopt};
  const int stations = 11;
  const auto net = run_network(ChannelMode::Greedy, p, stations, 41, o);
  CHECK(net.stations == stations);
  CHECK(net.success_slots + net.collision_slots <= net.full_slots);
  CHECK(net.full_slots + net.mini_slots == net.epochs);
  const auto op = greedy_operating_point(p, stations - 1);
  MESSAGE("per-station transmit " << net.transmit.mean() << " vs fixed point tau " << op.tau);
  MESSAGE("success throughput simulated " << net.success_throughput(p.T) << " vs formula "
                                          << success_throughput(op.tau, stations, p.T, p.sigma));
  CHECK(net.success_throughput(p.T) >= 0.0);
  CHECK(net.success_throughput(p.T) <= 1.0);
}
