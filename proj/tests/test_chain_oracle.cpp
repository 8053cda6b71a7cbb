#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/poisson.hpp>

#include "bcastq/chain_oracle.hpp"
#include "bcastq/fair.hpp"
#include "bcastq/greedy.hpp"

using namespace bcastq;

namespace {
const SystemParams kSet{0.05, 1.0, 0.05, 4, std::nullopt};
constexpr double kR = 0.3;
const SystemParams kFairSet{0.04, 1.0, 0.05, 4, std::nullopt};
constexpr double kFairR = 0.4;
}  // namespace

TEST_CASE("arrival rows are Poisson with the overflow lumped at the top") {
  const boost::math::poisson_distribution<double> pois(0.7);
  const auto row = arrival_row(0.7, 3, 10);
  REQUIRE(row.size() == 11);
  for (int m = 0; m < 3; ++m) CHECK(row[m] == 0.0);
  for (int m = 3; m < 10; ++m) CHECK(row[m] == doctest::Approx(boost::math::pdf(pois, m - 3)).epsilon(1e-14));
  CHECK(row[10] == doctest::Approx(boost::math::cdf(boost::math::complement(pois, 6))).epsilon(1e-12));
  double s = 0;
  for (double v : row) s += v;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  const auto top = arrival_row(0.7, 10, 10);
  CHECK(top[10] == 1.0);
}

TEST_CASE("row sums are one") {
  for (auto mode : {ChannelMode::Greedy, ChannelMode::Fair})
    for (double lambda : {0.0, 0.05, 0.5})
      for (int W : {1, 4, 31}) {
        const auto chain = TruncatedChain::build(mode, {lambda, 1.0, 0.05, W, std::nullopt}, BusyProb(kR), 30);
        for (double s : chain.row_sums()) CHECK(std::abs(s - 1.0) <= 1e-15);
      }
}

TEST_CASE("n_max below 10 is refused") {
  CHECK_THROWS_AS(TruncatedChain::build(ChannelMode::Greedy, kSet, BusyProb(kR), 9), InvalidParameter);
}

TEST_CASE("lambda = 0 concentrates on the idle state") {
  for (auto mode : {ChannelMode::Greedy, ChannelMode::Fair}) {
    const auto sol = solve_stationary(TruncatedChain::build(mode, {0.0, 1.0, 0.05, 1, std::nullopt}, BusyProb(kR), 10));
    CHECK(sol.table.at(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(sol.table.total() - 1.0) <= 1e-15);
  }
}

TEST_CASE("greedy chain against the analytic table") {
  const auto sol = solve_stationary(TruncatedChain::build(ChannelMode::Greedy, kSet, BusyProb(kR), 60));
  CHECK(sol.direct);
  CHECK(sol.residual <= 1e-14);
  const auto analytic = GreedyStation(kSet, BusyProb(kR)).stationary_table(60);
  CHECK(sol.table.max_abs_diff(analytic) <= 1e-8);
  CHECK(sol.table.leak <= 1e-9);
  CHECK(balance_residual(sol.table, ChannelMode::Greedy, kSet, BusyProb(kR)) <= 1e-14);
  CHECK(boundary_residual(sol.table, ChannelMode::Greedy, kSet, BusyProb(kR)) <= 1e-14);
  CHECK(unreachable_mass(sol.table) <= 1e-14);
}

TEST_CASE("fair chain against the analytic table") {
  const auto sol = solve_stationary(TruncatedChain::build(ChannelMode::Fair, kFairSet, BusyProb(kFairR), 60));
  const auto analytic = FairStation(kFairSet, BusyProb(kFairR)).stationary_table(60);
  CHECK(sol.table.max_abs_diff(analytic) <= 1e-8);
  CHECK(sol.table.leak <= 1e-9);
  CHECK(balance_residual(sol.table, ChannelMode::Fair, kFairSet, BusyProb(kFairR)) <= 1e-14);
  CHECK(boundary_residual(sol.table, ChannelMode::Fair, kFairSet, BusyProb(kFairR)) <= 1e-14);
  CHECK(unreachable_mass(sol.table) <= 1e-14);
}

TEST_CASE("truncation stability") {
  const auto a = solve_stationary(TruncatedChain::build(ChannelMode::Greedy, kSet, BusyProb(kR), 60));
  const auto b = solve_stationary(TruncatedChain::build(ChannelMode::Greedy, kSet, BusyProb(kR), 120));
  CHECK(std::abs(a.table.at(0, 0) - b.table.at(0, 0)) <= 1e-10);

  const auto aut = solve_stationary_auto(ChannelMode::Greedy, kSet, BusyProb(kR));
  CHECK(aut.p00_change <= 1e-10);
  CHECK(aut.n_max >= 120);
  CHECK(aut.solution.table.at(0, 0) == doctest::Approx(GreedyStation(kSet, BusyProb(kR)).p00()).epsilon(1e-9));
}

TEST_CASE("direct and iterative solves agree") {
  for (auto mode : {ChannelMode::Greedy, ChannelMode::Fair}) {
    const auto chain = TruncatedChain::build(mode, kFairSet, BusyProb(kFairR), 40);
    const auto direct = solve_stationary(chain);
    ChainSolveOptions opt;
    opt.dense_limit = 0;
    const auto iter = solve_stationary(chain, opt);
    CHECK_FALSE(iter.direct);
    CHECK(iter.iterations > 0);
    CHECK(direct.table.max_abs_diff(iter.table) <= 1e-11);
  }
}

TEST_CASE("iteration cap is reported") {
  const auto chain = TruncatedChain::build(ChannelMode::Greedy, kSet, BusyProb(kR), 40);
  ChainSolveOptions opt;
  opt.dense_limit = 0;
  opt.max_iterations = 3;
  CHECK_THROWS_AS(solve_stationary(chain, opt), ConvergenceError);
}

TEST_CASE("left_multiply matches the dense kernel") {
  const auto chain = TruncatedChain::build(ChannelMode::Fair, kFairSet, BusyProb(kFairR), 12);
  const auto P = chain.dense();
  const std::size_t S = chain.states();
  std::vector<double> x(S), y(S);
  for (std::size_t i = 0; i < S; ++i) x[i] = 1.0 / (1.0 + i);
  chain.left_multiply(x, y);
  for (std::size_t j = 0; j < S; ++j) {
    double ref = 0;
    for (std::size_t i = 0; i < S; ++i) ref += x[i] * P[i * S + j];
    CHECK(y[j] == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("back-off and redraw structure is shared between modes") {
  const auto g = TruncatedChain::build(ChannelMode::Greedy, kSet, BusyProb(kR), 15).dense();
  const auto f = TruncatedChain::build(ChannelMode::Fair, kSet, BusyProb(kR), 15).dense();
  const std::size_t S = 5 * 16;
  for (std::size_t i = 0; i < S; ++i) {
    const bool queue_head = i >= 1 && i <= 15;  // (0, n >= 1)
    if (queue_head) continue;
    for (std::size_t j = 0; j < S; ++j) CHECK(g[i * S + j] == f[i * S + j]);
  }
  // r = 1: every slot is full, so the head-of-queue rows coincide too
  const auto g1 = TruncatedChain::build(ChannelMode::Greedy, kSet, BusyProb(1.0), 15).dense();
  const auto f1 = TruncatedChain::build(ChannelMode::Fair, kSet, BusyProb(1.0), 15).dense();
  for (std::size_t i = 0; i < S * S; ++i) CHECK(g1[i] == doctest::Approx(f1[i]).epsilon(1e-15));
}
