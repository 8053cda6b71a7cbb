#include "bcastq/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "bcastq/errors.hpp"
#include "bcastq/fair.hpp"
#include "bcastq/greedy.hpp"

namespace bcastq {

namespace {

template <class Real>
Real ipow(Real x, int n) {
  Real out = 1;
  Real base = x;
  while (n > 0) {
    if (n & 1) out *= base;
    base *= base;
    n >>= 1;
  }
  return out;
}

// Bisection on [lo, hi] with f(lo) > 0 > f(hi) (or the reverse), run until
// the bracket cannot be split any further.
template <class F>
long double bisect(F f, long double lo, long double hi) {
  const bool lo_positive = f(lo) > 0;
  for (int it = 0; it < 400; ++it) {
    const long double mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    if ((f(mid) > 0) == lo_positive) lo = mid;
    else hi = mid;
  }
  return lo + (hi - lo) / 2;
}

long double polynomial_ld(const SystemParams& p, int M, long double z) {
  const long double lam = p.lambda;
  return lam * (static_cast<long double>(p.T) - p.sigma) * ipow(z, M + 1) - z +
         (1.0L - lam * p.T);
}

long double window_equation_ld(int W, int M, long double u) {
  return 2.0L * ipow(u, M + 1) - static_cast<long double>(W) * (1.0L - u);
}

}  // namespace

std::string_view to_string(StationCount convention) {
  return convention == StationCount::Peers ? "peers" : "stations";
}

StationCount parse_convention(std::string_view text) {
  if (text == "peers") return StationCount::Peers;
  if (text == "stations") return StationCount::Stations;
  throw InvalidParameter("unknown station-count convention '" + std::string(text) + "'");
}

int peers_from_sweep(int value, StationCount convention) {
  const int M = convention == StationCount::Peers ? value : value - 1;
  if (M < 0) throw InvalidParameter("station count leaves a negative number of peers");
  return M;
}

double fixed_point_polynomial(const SystemParams& p, int M, double z) {
  return static_cast<double>(polynomial_ld(p, M, z));
}

int count_fixed_point_sign_changes(const SystemParams& p, int M, int points) {
  int changes = 0;
  bool prev = fixed_point_polynomial(p, M, 0.0) > 0.0;
  for (int i = 1; i <= points; ++i) {
    const bool cur = fixed_point_polynomial(p, M, static_cast<double>(i) / points) > 0.0;
    if (cur != prev) ++changes;
    prev = cur;
  }
  return changes;
}

double solve_z(const SystemParams& p, int M) {
  require_model_params(p);
  if (M < 0) throw InvalidParameter("M must be >= 0");
  if (!(p.lambda * p.T < 1.0)) throw DomainError("solve_z needs lambda T < 1");
  if (p.lambda == 0.0) return 1.0;
  const auto f = [&](long double z) { return polynomial_ld(p, M, z); };
  if (!(f(0.0L) > 0) || !(f(1.0L) < 0))
    throw ConvergenceError("solve_z: P(0) > 0 > P(1) bracket violated");
  if (const int n = count_fixed_point_sign_changes(p, M); n != 1)
    throw ConvergenceError("solve_z: expected one sign change of P on [0,1], saw " +
                           std::to_string(n));
  return static_cast<double>(bisect(f, 0.0L, 1.0L));
}

TauR consistency_tau_r(const SystemParams& p, int M, double z) {
  const double r = 1.0 - ipow(z, M);
  const GreedyStation station(p, BusyProb(r));
  const double tau = station.tau();
  const double coupling = 1.0 - ipow(1.0 - tau, M);
  if (std::abs(coupling - r) > 1e-10)
    throw ConvergenceError("fixed point inconsistent: 1-(1-tau)^M = " + std::to_string(coupling) +
                           " vs r = " + std::to_string(r));
  return {tau, r};
}

double greedy_ergodicity_factor(const SystemParams& p, int M, double z) {
  return (1.0 - p.lambda * p.T) * (1.0 - p.W * (1.0 - z) / (2.0 * ipow(z, M + 1)));
}

bool network_ergodic_greedy(const SystemParams& p, int M) {
  const double z = solve_z(p, M);
  const bool by_root = 2.0 * ipow(z, M + 1) > p.W * (1.0 - z);
  const GreedyStation station(p, BusyProb(1.0 - ipow(z, M)));
  const double one_minus_lambda_B = 1.0 - p.lambda * station.B();
  const bool by_B = one_minus_lambda_B > 0.0;
  if (by_root != by_B && std::abs(one_minus_lambda_B) > 1e-12)
    throw ConvergenceError("greedy network ergodicity routes disagree");
  return by_root;
}

NetworkOperatingPoint greedy_operating_point(const SystemParams& p, int M) {
  NetworkOperatingPoint op;
  op.mode = ChannelMode::Greedy;
  op.M = M;
  op.z = solve_z(p, M);
  const auto tr = consistency_tau_r(p, M, op.z);
  op.tau = tr.tau;
  op.r = tr.r;
  op.ergodic = network_ergodic_greedy(p, M);
  op.u = solve_u(p.W, M);
  op.lambda_max = lambda_max_greedy(p, M);
  op.boundary = p.lambda == 0.0;
  return op;
}

long double solve_u_extended(int W, int M) {
  if (W < 1) throw InvalidParameter("W must be >= 1");
  if (M < 0) throw InvalidParameter("M must be >= 0");
  const auto h = [W, M](long double u) { return window_equation_ld(W, M, u); };
  // h(0) = -W < 0, h(1) = 2 > 0
  if (!(h(0.0L) < 0) || !(h(1.0L) > 0)) throw ConvergenceError("solve_u: bracket violated");
  return bisect(h, 0.0L, 1.0L);
}

double solve_u(int W, int M) { return static_cast<double>(solve_u_extended(W, M)); }

int count_window_sign_changes(int W, int M, int points) {
  int changes = 0;
  bool prev = window_equation_ld(W, M, 0.0L) > 0;
  for (int i = 1; i <= points; ++i) {
    const bool cur = window_equation_ld(W, M, static_cast<long double>(i) / points) > 0;
    if (cur != prev) ++changes;
    prev = cur;
  }
  return changes;
}

double TwoRoutes::rel_diff() const {
  const double scale = std::max(std::abs(first), std::abs(second));
  return scale == 0.0 ? 0.0 : std::abs(first - second) / scale;
}

TwoRoutes lambda_max_greedy_forms(const SystemParams& p, int M) {
  return lambda_max_greedy_forms(p, M, solve_u_extended(p.W, M));
}

TwoRoutes lambda_max_greedy_forms(const SystemParams& p, int M, long double u) {
  const long double T = p.T, s = p.sigma;
  const long double uM1 = ipow(u, M + 1);
  const long double first = (1.0L - u) / (T * (1.0L - uM1) + s * uM1);
  const long double second = (1.0L - u) / (T + p.W * (s - T) * (1.0L - u) / 2.0L);
  return {static_cast<double>(first), static_cast<double>(second)};
}

double lambda_max_greedy(const SystemParams& p, int M) { return lambda_max_greedy_forms(p, M).first; }

TwoRoutes lambda_max_fair_forms(const SystemParams& p, int M) {
  if (M < 1) throw DomainError("fair maximum throughput needs M >= 1 peers");
  return lambda_max_fair_forms(p, M, solve_u_extended(p.W, M));
}

TwoRoutes lambda_max_fair_forms(const SystemParams& p, int M, long double u) {
  if (M < 1) throw DomainError("fair maximum throughput needs M >= 1 peers");
  const long double T = p.T, s = p.sigma;
  const long double gap = u * (2.0L + p.W) - p.W;
  if (!(gap > 0)) throw ConvergenceError("lambda_max_fair: u(2+W) > W violated at the root");
  const long double closed = (1.0L - u) / (T + p.W * s * (1.0L - u) / gap);
  const long double one_minus_r = ipow(u, M);
  const long double r = 1.0L - one_minus_r;
  const long double via_r = (1.0L - u) / (T + one_minus_r * s / r);
  return {static_cast<double>(closed), static_cast<double>(via_r)};
}

double lambda_max_fair(const SystemParams& p, int M) { return lambda_max_fair_forms(p, M).first; }

NetworkOperatingPoint fair_fixed_point(const SystemParams& p, int M) {
  require_model_params(p);
  if (M < 1) throw DomainError("fair network needs M >= 1 peers");
  NetworkOperatingPoint op;
  op.mode = ChannelMode::Fair;
  op.M = M;
  op.u = solve_u(p.W, M);
  op.lambda_max = lambda_max_fair(p, M);
  if (p.lambda == 0.0) {
    op.boundary = true;
    op.ergodic = true;
    return op;
  }
  if (!(p.lambda * p.T < 1.0))
    throw ConvergenceError("fair fixed point: no solution (tau_bar >= lambda T >= 1 for every r)");

  const long double lam = p.lambda, T = p.T, s = p.sigma;
  const auto taubar = [&](long double r) { return lam * (r * T + (1.0L - r) * s) / r; };
  const auto phi = [&](long double r) { return 1.0L - ipow(1.0L - taubar(r), M) - r; };
  // tau_bar(r_min) = 1 so phi(r_min) = 1 - r_min > 0; phi(1) = -(1 - lambda T)^M < 0
  const long double r_min = lam * s / (1.0L - lam * T + lam * s);

  constexpr int kScan = 1000;
  int changes = 0;
  long double first_lo = r_min, first_hi = 1.0L;
  bool found = false;
  long double prev_r = r_min;
  bool prev_pos = phi(r_min) > 0;
  for (int i = 1; i <= kScan; ++i) {
    const long double rr = r_min + (1.0L - r_min) * i / kScan;
    const bool pos = phi(rr) > 0;
    if (pos != prev_pos) {
      ++changes;
      if (!found) {
        first_lo = prev_r;
        first_hi = rr;
        found = true;
      }
    }
    prev_r = rr;
    prev_pos = pos;
  }
  if (!found) throw ConvergenceError("fair fixed point: residual has constant sign");

  const long double r = bisect(phi, first_lo, first_hi);
  op.r = static_cast<double>(r);
  op.tau = static_cast<double>(taubar(r));
  op.multiplicity = changes;
  const FairStation station(p, BusyProb(op.r));
  op.ergodic = station.is_ergodic();
  return op;
}

double success_throughput(double tau, int stations, double T, double sigma) {
  const double idle_all = std::pow(1.0 - tau, stations);
  const double r = 1.0 - idle_all;
  const double slot = r * T + (1.0 - r) * sigma;
  return stations * tau * std::pow(1.0 - tau, stations - 1) * T / slot;
}

double saturation_throughput(const SystemParams& p, int M) {
  const double tau = 1.0 - solve_u(p.W, M);
  return success_throughput(tau, M + 1, p.T, p.sigma);
}

WindowSearch optimal_window(const SystemParams& base, int M, int W_lo, int W_hi,
                            bool scan_unimodality) {
  if (W_lo < 1 || W_hi < W_lo) throw InvalidParameter("optimal_window: bad W range");
  std::map<int, double> cache;
  const auto S = [&](int W) {
    if (auto it = cache.find(W); it != cache.end()) return it->second;
    SystemParams p = base;
    p.W = W;
    const double v = saturation_throughput(p, M);
    cache.emplace(W, v);
    return v;
  };

  const double inv_phi = 1.0 / std::numbers::phi;
  int a = W_lo, b = W_hi;
  while (b - a > 3) {
    int c = b - static_cast<int>(std::lround((b - a) * inv_phi));
    int d = a + static_cast<int>(std::lround((b - a) * inv_phi));
    if (c >= d) d = c + 1;
    if (S(c) >= S(d)) b = d;
    else a = c;
  }
  WindowSearch out;
  out.W_lo = W_lo;
  out.W_hi = W_hi;
  out.W_opt = a;
  out.S_opt = S(a);
  for (int W = a + 1; W <= b; ++W) {
    if (S(W) > out.S_opt) {
      out.S_opt = S(W);
      out.W_opt = W;
    }
  }

  if (scan_unimodality) {
    // unimodal: the sign of S(W+1) - S(W) switches from + to - at most once
    int switches = 0;
    int last_sign = 0;
    double prev = S(W_lo);
    for (int W = W_lo + 1; W <= W_hi; ++W) {
      const double cur = S(W);
      const int sign = cur > prev ? 1 : (cur < prev ? -1 : 0);
      if (sign != 0) {
        if (last_sign != 0 && sign != last_sign) ++switches;
        if (last_sign == -1 && sign == 1) switches += 2;
        last_sign = sign;
      }
      prev = cur;
    }
    out.unimodal = switches <= 1;
  }
  return out;
}

}  // namespace bcastq
