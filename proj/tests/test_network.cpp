#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bcastq/fair.hpp"
#include "bcastq/greedy.hpp"
#include "bcastq/network.hpp"
#include "oracles.hpp"

using namespace bcastq;

namespace {
const SystemParams kNet{0.05, 1.0, 0.05, 31, std::nullopt};

// zooming grid scan, 1000 cells per level
double grid_scan_root(const std::function<double(double)>& f, double lo, double hi) {
  for (int level = 0; level < 5; ++level) {
    const int n = 1000;
    const double h = (hi - lo) / n;
    double prev = f(lo);
    for (int i = 1; i <= n; ++i) {
      const double x = lo + i * h;
      const double cur = f(x);
      if ((prev > 0) != (cur > 0)) {
        lo = x - h;
        hi = x;
        break;
      }
      prev = cur;
    }
  }
  return 0.5 * (lo + hi);
}

int fair_sign_changes(const SystemParams& p, int M, int points) {
  const double rmin = p.lambda * p.sigma / (1 - p.lambda * p.T + p.lambda * p.sigma);
  const auto phi = [&](double r) {
    const double tb = std::min(1.0, p.lambda * (r * p.T + (1 - r) * p.sigma) / r);
    return 1 - std::pow(1 - tb, M) - r;
  };
  int changes = 0;
  double prev = phi(rmin);
  for (int i = 1; i <= points; ++i) {
    const double cur = phi(rmin + (1 - rmin) * i / points);
    if (prev != 0 && cur != 0 && (prev > 0) != (cur > 0)) ++changes;
    if (cur != 0) prev = cur;
  }
  return changes;
}
}  // namespace

TEST_CASE("station-count conventions") {
  CHECK(peers_from_sweep(10, StationCount::Peers) == 10);
  CHECK(peers_from_sweep(10, StationCount::Stations) == 9);
  CHECK(parse_convention("stations") == StationCount::Stations);
  CHECK(to_string(StationCount::Peers) == "peers");
  CHECK_THROWS_AS(parse_convention("nodes"), InvalidParameter);
}

TEST_CASE("solve_u closed forms and residual") {
  CHECK(solve_u(2, 0) == doctest::Approx(0.5).epsilon(1e-14));
  const double q = (-31.0 + std::sqrt(1209.0)) / 4.0;
  CHECK(std::abs(solve_u(31, 1) - q) <= 1e-12);
  // the quoted 0.942677 is the closed form rounded loosely; it agrees to 1e-5
  CHECK(std::abs(solve_u(31, 1) - 0.942677) <= 1e-5);
  for (int W : {1, 4, 31, 1000})
    for (int M : {0, 1, 10, 100}) {
      const double u = solve_u(W, M);
      CHECK(std::abs(2 * std::pow(u, M + 1) - W * (1 - u)) <= 1e-12);
      CHECK(std::abs(u - static_cast<double>(oracle::solve_u(W, M))) <= 1e-14);
      CHECK(count_window_sign_changes(W, M) == 1);
    }
  double prev = 0.0;
  for (int M = 0; M <= 2000; M += 50) {
    const double u = solve_u(31, M);
    CHECK(u > prev);
    prev = u;
  }
  CHECK(prev > 0.99);
}

TEST_CASE("solve_z") {
  SUBCASE("lambda -> 0") {
    SystemParams p = kNet;
    p.lambda = 1e-12;
    CHECK(solve_z(p, 10) == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("grid-scan and extended-precision oracles") {
    for (int M : {1, 10, 100}) {
      const double z = solve_z(kNet, M);
      CHECK(std::abs(fixed_point_polynomial(kNet, M, z)) <= 1e-12);
      const double scan = grid_scan_root([&](double x) { return fixed_point_polynomial(kNet, M, x); }, 0.0, 1.0);
      CHECK(std::abs(z - scan) <= 1e-10);
      CHECK(std::abs(z - static_cast<double>(oracle::solve_z(kNet, M))) <= 1e-14);
      CHECK(count_fixed_point_sign_changes(kNet, M) == 1);
    }
  }
  SUBCASE("bracket endpoints") {
    CHECK(fixed_point_polynomial(kNet, 10, 0.0) == doctest::Approx(1 - 0.05).epsilon(1e-15));
    CHECK(fixed_point_polynomial(kNet, 10, 1.0) == doctest::Approx(-0.05 * 0.05).epsilon(1e-12));
  }
  SUBCASE("sigma = T makes P linear") {
    const SystemParams p{0.2, 1.0, 1.0, 4, std::nullopt};
    const double z = solve_z(p, 1);
    CHECK(std::abs(z - 0.8) <= 1e-14);
    const auto tr = consistency_tau_r(p, 1, z);
    CHECK(tr.r == doctest::Approx(0.2).epsilon(1e-13));
  }
  SUBCASE("lambda T >= 1") {
    SystemParams p = kNet;
    p.lambda = 1.0;
    CHECK_THROWS_AS(solve_z(p, 10), DomainError);
    CHECK_THROWS_AS(network_ergodic_greedy(p, 10), DomainError);
  }
}

TEST_CASE("tau and r consistency") {
  const double z = solve_z(kNet, 10);
  const auto tr = consistency_tau_r(kNet, 10, z);
  CHECK(tr.r == doctest::Approx(1 - std::pow(z, 10)).epsilon(1e-15));
  CHECK(std::abs(1 - std::pow(1 - tr.tau, 10) - tr.r) <= 1e-10);
  CHECK(std::abs(tr.tau - GreedyStation(kNet, BusyProb(tr.r)).tau()) <= 1e-10);

  SystemParams tiny = kNet;
  tiny.lambda = 1e-12;
  const auto t0 = consistency_tau_r(tiny, 10, solve_z(tiny, 10));
  CHECK(t0.tau <= 1e-10);
  CHECK(t0.r <= 1e-9);

  const auto alone = greedy_operating_point(kNet, 0);
  CHECK(alone.r == 0.0);
}

TEST_CASE("greedy network ergodicity") {
  SystemParams tiny = kNet;
  tiny.lambda = 1e-9;
  for (int M : {0, 1, 10, 100, 1000, 10000}) CHECK(network_ergodic_greedy(tiny, M));

  for (int M : {1, 10, 50}) {
    SystemParams p = kNet;
    p.lambda = lambda_max_greedy(kNet, M) * 1.01;
    CHECK_FALSE(network_ergodic_greedy(p, M));
    p.lambda = lambda_max_greedy(kNet, M) * 0.99;
    CHECK(network_ergodic_greedy(p, M));
  }

  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const SystemParams p{0.3 * U(gen), 1.0, 0.01 + 0.2 * U(gen), 1 + static_cast<int>(64 * U(gen)), std::nullopt};
    const int M = 1 + static_cast<int>(60 * U(gen));
    const double z = solve_z(p, M);
    const double r = 1 - std::pow(z, M);
    const GreedyStation g(p, BusyProb(r));
    const double oneMinusLB = 1 - p.lambda * g.B();
    // both sides grow like z^{-(M+1)} far from ergodicity, and passing r instead of
    // z^M to the station costs eps/(1-r) relative
    const double cond = 1e-10 + 64 * std::numeric_limits<double>::epsilon() / (1 - r);
    CHECK(std::abs(greedy_ergodicity_factor(p, M, z) - oneMinusLB) <= cond * std::max(1.0, std::abs(oneMinusLB)));
    if (std::abs(oneMinusLB) > 1e-9) {
      CHECK(network_ergodic_greedy(p, M) == (oneMinusLB > 0));
      CHECK(g.is_ergodic() == (oneMinusLB > 0));
    }
  }
}

TEST_CASE("greedy lambda_max") {
  for (int W : {1, 2, 31}) {
    const SystemParams p{0.01, 1.0, 0.05, W, std::nullopt};
    const double u = W / (W + 2.0);
    CHECK(lambda_max_greedy(p, 0) == doctest::Approx((1 - u) / ((1 - u) + 0.05 * u)).epsilon(1e-12));
  }
  const auto forms = lambda_max_greedy_forms(kNet, 1);
  CHECK(forms.rel_diff() <= 1e-12);

  double prev = 1e300;
  for (int M = 1; M <= 100; ++M) {
    const double lm = lambda_max_greedy(kNet, M);
    CHECK(lm < prev);
    prev = lm;
  }
}

TEST_CASE("fair lambda_max") {
  SystemParams s0 = kNet;
  s0.sigma = 0.0;
  for (int M : {1, 10}) {
    const double u = solve_u(31, M);
    CHECK(lambda_max_fair(s0, M) == doctest::Approx(1 - u).epsilon(1e-12));
    // greedy keeps its 1 - u^{M+1} factor at sigma = 0
    CHECK(lambda_max_greedy(s0, M) == doctest::Approx((1 - u) / (1 - std::pow(u, M + 1))).epsilon(1e-12));
  }
  CHECK(lambda_max_fair(kNet, 10) < lambda_max_greedy(kNet, 10));
  CHECK(lambda_max_fair_forms(kNet, 1).rel_diff() <= 1e-12);
  CHECK_THROWS_AS(lambda_max_fair(kNet, 0), DomainError);
}

TEST_CASE("two-form identities on a random grid") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double T = 0.5 + U(gen);
    const SystemParams p{0.01, T, T * (0.01 + 0.9 * U(gen)), 1 + static_cast<int>(500 * U(gen)), std::nullopt};
    const int M = 1 + static_cast<int>(100 * U(gen));
    const auto g = lambda_max_greedy_forms(p, M);
    const auto f = lambda_max_fair_forms(p, M);
    CHECK(g.rel_diff() <= 1e-12);
    CHECK(f.rel_diff() <= 1e-12);
    CHECK(f.first < g.first);
  }
}

TEST_CASE("network offered load exceeds one somewhere in M = 1..100") {
  bool found = false;
  for (int M = 1; M <= 100; ++M) found = found || (M + 1) * lambda_max_greedy(kNet, M) > 1.0;
  CHECK(found);
}

TEST_CASE("fair fixed point") {
  SUBCASE("lambda -> 0 is a boundary point") {
    SystemParams p = kNet;
    p.lambda = 0.0;
    const auto op = fair_fixed_point(p, 10);
    CHECK(op.boundary);
    CHECK(op.r == 0.0);
    CHECK(op.tau == 0.0);
  }
  SUBCASE("near lambda_max the tau limit is reached") {
    SystemParams p = kNet;
    p.lambda = lambda_max_fair(kNet, 10) * (1 - 1e-9);
    const auto op = fair_fixed_point(p, 10);
    CHECK(std::abs(op.tau - 1.0 / (1.0 + 31.0 / (2 * (1 - op.r)))) <= 1e-4);
    CHECK(std::abs(1 - std::pow(1 - op.tau, 10) - op.r) <= 1e-10);
  }
  SUBCASE("multiplicity against an independent sign scan") {
    const double top = lambda_max_fair(kNet, 10);
    for (int i = 1; i <= 100; ++i) {
      SystemParams p = kNet;
      p.lambda = top * i / 100.0;
      const auto op = fair_fixed_point(p, 10);
      CHECK(op.multiplicity == fair_sign_changes(p, 10, 1000));
      CHECK(std::abs(1 - std::pow(1 - op.tau, 10) - op.r) <= 1e-10);
      if (i < 100) CHECK(op.ergodic);
    }
  }
  SUBCASE("no solution beyond lambda T = 1") {
    SystemParams p = kNet;
    p.lambda = 1.0;
    CHECK_THROWS_AS(fair_fixed_point(p, 10), ConvergenceError);
  }
}

TEST_CASE("success throughput and window search") {
  CHECK(success_throughput(0.0, 10, 1.0, 0.05) == 0.0);
  CHECK(success_throughput(1.0, 1, 1.0, 0.05) == doctest::Approx(1.0).epsilon(1e-15));

  SystemParams p = kNet;
  const auto best = optimal_window(p, 10, 1, 512);
  int arg = 1;
  double top = -1;
  for (int W = 1; W <= 512; ++W) {
    p.W = W;
    const double s = saturation_throughput(p, 10);
    if (s > top) top = s, arg = W;
  }
  if (best.unimodal) CHECK(best.W_opt == arg);
  CHECK(best.S_opt == doctest::Approx(top).epsilon(1e-12));
  CHECK(best.S_opt <= 1.0);
}
