#pragma once

#include <limits>
#include <string_view>

#include "bcastq/params.hpp"

namespace bcastq {

/// How a sweep value maps onto the number of peers M seen by the tagged
/// station: Peers means value = M, Stations means value = M + 1.
enum class StationCount { Peers, Stations };

std::string_view to_string(StationCount convention);
StationCount parse_convention(std::string_view text);
int peers_from_sweep(int value, StationCount convention);

struct NetworkOperatingPoint {
  ChannelMode mode = ChannelMode::Greedy;
  int M = 0;
  double z = std::numeric_limits<double>::quiet_NaN();  // (1-r)^{1/M}, greedy only
  double u = std::numeric_limits<double>::quiet_NaN();  // root of 2u^{M+1} = W(1-u)
  double r = 0.0;
  double tau = 0.0;
  bool ergodic = false;
  double lambda_max = 0.0;
  int multiplicity = 1;   // sign changes seen by the fixed-point scan
  bool boundary = false;  // degenerate lambda = 0 point
};

// --- greedy network --------------------------------------------------------

/// P(z) = lambda (T - sigma) z^{M+1} - z + (1 - lambda T).
double fixed_point_polynomial(const SystemParams& params, int M, double z);

/// Sign changes of P on a uniform grid of `points` intervals over [0, 1].
int count_fixed_point_sign_changes(const SystemParams& params, int M, int points = 10'000);

/// The unique root of P in [0, 1].  Needs lambda T < 1 (DomainError
/// otherwise); throws ConvergenceError if the grid scan does not see
/// exactly one sign change.
double solve_z(const SystemParams& params, int M);

struct TauR {
  double tau;
  double r;
};

/// r = 1 - z^M and tau from the single-station formula at that r; checks
/// 1 - (1 - tau)^M = r to 1e-10 and throws ConvergenceError otherwise.
TauR consistency_tau_r(const SystemParams& params, int M, double z);

/// (1 - lambda T) [1 - W (1 - z) / (2 z^{M+1})], which equals 1 - lambda B
/// at r = 1 - z^M.
double greedy_ergodicity_factor(const SystemParams& params, int M, double z);

/// 2 z^{M+1} > W (1 - z) at z = solve_z, cross-checked against 1 - lambda B.
bool network_ergodic_greedy(const SystemParams& params, int M);

NetworkOperatingPoint greedy_operating_point(const SystemParams& params, int M);

// --- saturation ------------------------------------------------------------

/// Root in [0, 1] of 2 u^{M+1} = W (1 - u).
double solve_u(int W, int M);
long double solve_u_extended(int W, int M);
int count_window_sign_changes(int W, int M, int points = 10'000);

struct TwoRoutes {
  double first;
  double second;
  double rel_diff() const;
};

/// lambda_max = (1-u) / (T(1-u^{M+1}) + sigma u^{M+1})
///            = (1-u) / (T + W(sigma-T)(1-u)/2).
TwoRoutes lambda_max_greedy_forms(const SystemParams& params, int M);
TwoRoutes lambda_max_greedy_forms(const SystemParams& params, int M, long double u);
double lambda_max_greedy(const SystemParams& params, int M);

/// Closed form (1-u) / (T + W sigma (1-u) / (u(2+W) - W)) and the route
/// (1-u) / (T + (1-r) sigma / r) with 1 - r = u^M.  Needs M >= 1.
TwoRoutes lambda_max_fair_forms(const SystemParams& params, int M);
TwoRoutes lambda_max_fair_forms(const SystemParams& params, int M, long double u);
double lambda_max_fair(const SystemParams& params, int M);

// --- fair network ----------------------------------------------------------

/// Solves r = 1 - (1 - tau_bar(r))^M with tau_bar(r) = lambda (rT + (1-r) sigma) / r.
/// Needs M >= 1.  The returned point carries ergodic = (q(0,0) > 0 at r).
NetworkOperatingPoint fair_fixed_point(const SystemParams& params, int M);

// --- throughput without collision -----------------------------------------

/// S = N tau (1-tau)^{N-1} T / (rT + (1-r) sigma), r = 1 - (1-tau)^N.
double success_throughput(double tau, int stations, double T, double sigma);

/// S at the saturation point of a greedy network of M + 1 stations (tau = 1 - u).
double saturation_throughput(const SystemParams& params, int M);

struct WindowSearch {
  int W_opt = 1;
  double S_opt = 0.0;
  bool unimodal = true;  // from an exhaustive scan of S over the range
  int W_lo = 1;
  int W_hi = 4096;
};

/// Golden-section search over integer W in [W_lo, W_hi], ties to smaller W.
WindowSearch optimal_window(const SystemParams& params, int M, int W_lo = 1, int W_hi = 4096,
                            bool scan_unimodality = true);

}  // namespace bcastq
