#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bcastq/chain_oracle.hpp"
#include "bcastq/fair.hpp"
#include "bcastq/greedy.hpp"
#include "oracles.hpp"

using namespace bcastq;

namespace {
const SystemParams kSet{0.04, 1.0, 0.05, 4, std::nullopt};
constexpr double kR = 0.4;

const StationaryTable& chain_table() {
  static const auto t = solve_stationary(TruncatedChain::build(ChannelMode::Fair, kSet, BusyProb(kR), 60)).table;
  return t;
}
}  // namespace

TEST_CASE("Rbar and Qbar") {
  const FairStation f(kSet, BusyProb(kR));
  CHECK(f.Rbar(1.0) == 0.0);
  CHECK(f.Qbar(1.0) == 0.0);
  const auto m = oracle::model(kSet, kR);
  for (double x : {0.9, 0.4}) {
    CHECK(f.Rbar(x) == doctest::Approx(static_cast<double>(oracle::fair_Rbar(m, oracle::hp(x)))).epsilon(1e-12));
    CHECK(f.Qbar(x) == doctest::Approx(static_cast<double>(oracle::fair_Qbar(m, oracle::hp(x)))).epsilon(1e-12));
  }
  const oracle::hp h("1e-5");
  const double dR = static_cast<double>((oracle::fair_Rbar(m, 1 + h) - oracle::fair_Rbar(m, 1 - h)) / (2 * h));
  const double dQ = static_cast<double>((oracle::fair_Qbar(m, 1 + h) - oracle::fair_Qbar(m, 1 - h)) / (2 * h));
  CHECK(std::abs(f.Rbar1() - dR) <= 1e-6);
  CHECK(std::abs(f.Qbar1() - dQ) <= 1e-6);
}

TEST_CASE("q00 routes, limits and oracle") {
  const FairStation f(kSet, BusyProb(kR));
  CHECK(std::abs(f.q00() - f.q00_by_derivative()) <= 1e-12);
  CHECK(std::abs(f.q00() - f.q00_by_normalization()) <= 1e-12);
  CHECK(std::abs(f.q00() - chain_table().at(0, 0)) <= 1e-8);
  CHECK(FairStation({1e-13, 1.0, 0.05, 4, std::nullopt}, BusyProb(kR)).q00() == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("q00 falls linearly to zero at the threshold") {
  for (double r : {1e-2, 1e-3, 1e-4, 1e-5, 0.5}) {
    const double th = FairStation({0.01, 1.0, 0.05, 4, std::nullopt}, BusyProb(r)).lambda_threshold();
    for (double frac : {0.5, 0.999}) {
      const FairStation f({frac * th, 1.0, 0.05, 4, std::nullopt}, BusyProb(r));
      REQUIRE(f.is_ergodic());
      CHECK(f.q00() == doctest::Approx(1.0 - frac).epsilon(1e-10));
    }
  }
}

TEST_CASE("taubar") {
  const FairStation f(kSet, BusyProb(kR));
  CHECK(f.taubar() == doctest::Approx(0.04 * (0.4 + 0.6 * 0.05) / 0.4).epsilon(1e-15));
  CHECK(std::abs(f.taubar() - f.taubar_from_G0()) <= 1e-10);
  CHECK(std::abs(f.taubar() - chain_table().transmit_mass()) <= 1e-8);
  CHECK(FairStation({0.0, 1.0, 0.05, 4, std::nullopt}, BusyProb(kR)).taubar() == 0.0);
  // sigma -> 0, r -> 1
  CHECK(FairStation({0.3, 1.0, 0.0, 4, std::nullopt}, BusyProb(1.0 - 1e-12)).taubar() ==
        doctest::Approx(0.3).epsilon(1e-11));
  CHECK_THROWS_AS(FairStation(kSet, BusyProb(0.0)).taubar(), DomainError);
  CHECK_THROWS_AS(FairStation(kSet, BusyProb(0.0)).q00(), DomainError);
}

TEST_CASE("fair ergodicity") {
  CHECK(FairStation({0.0, 1.0, 0.05, 4, std::nullopt}, BusyProb(0.3)).is_ergodic());
  const FairStation f({0.01, 1.0, 0.05, 31, std::nullopt}, BusyProb(0.5));
  CHECK(f.lambda_threshold() == doctest::Approx(0.25 / (16 * 0.525)).epsilon(1e-14));
  CHECK(f.is_ergodic() == f.ergodic_by_threshold());

  // small r: lambda/r threshold -> 1/(sigma (1 + W/2))
  const FairStation tiny({0.01, 1.0, 0.05, 4, std::nullopt}, BusyProb(1e-9));
  CHECK(tiny.lambda_threshold() / 1e-9 == doctest::Approx(1.0 / (0.05 * 3)).epsilon(1e-6));

  const FairStation hot({0.3, 1.0, 0.05, 4, std::nullopt}, BusyProb(0.4));
  CHECK_FALSE(hot.is_ergodic());
  CHECK_THROWS_AS(hot.q00(), NonErgodic);
}

TEST_CASE("G functions and table") {
  const FairStation f(kSet, BusyProb(kR));
  const double G01 = f.G0(1.0);
  CHECK(G01 + 4 * (G01 - f.q00()) / (2 * (1 - kR)) == doctest::Approx(1.0).epsilon(1e-12));
  double sum = G01;
  for (int k = 1; k <= 4; ++k) sum += f.Gk(k, 1.0);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));

  const FairStation empty({0.0, 1.0, 0.05, 4, std::nullopt}, BusyProb(kR));
  for (double x : {0.1, 0.7, 1.0}) CHECK(empty.G0(x) == doctest::Approx(1.0).epsilon(1e-12));

  const auto t = f.stationary_table(60);
  CHECK(t.max_abs_diff(chain_table()) <= 1e-8);
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(t.at(k, 0)) <= 1e-9);
  const double eT = std::exp(-kSet.lambda * kSet.T), eS = std::exp(-kSet.lambda * kSet.sigma);
  CHECK(std::abs(kR * eT * t.at(0, 1) - t.at(0, 0) * (1 - kR * eT - (1 - kR) * eS)) <= 1e-9);
}

TEST_CASE("per-k and summed balance residuals") {
  const FairStation f(kSet, BusyProb(kR));
  for (int i = 1; i <= 20; ++i) {
    const double x = 0.05 * i - 0.025;
    CHECK(f.system_residual(x) <= 1e-10);
    CHECK(f.summed_balance_residual(x) <= 1e-10);
  }
}

TEST_CASE("a, b, u are the same evaluator in both modes") {
  const FairStation f(kSet, BusyProb(kR));
  const GreedyStation g(kSet, BusyProb(kR));
  for (double x : {0.1, 0.5, 0.99}) {
    CHECK(f.kernel().a(x) == g.kernel().a(x));
    CHECK(f.kernel().b(x) == g.kernel().b(x));
    CHECK(f.kernel().u(x) == g.kernel().u(x));
  }
}
