#include "bcastq/fair.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace bcastq {

FairStation::FairStation(const SystemParams& params, BusyProb r) : gf_(params, r) {
  const double rr = r.value();
  if (rr >= 1.0) throw InvalidParameter("fair station needs r < 1");
  const auto& p = gf_.params();
  busy_mass_ = rr * p.T + (1.0 - rr) * p.sigma;
  const double w = p.W / (2.0 * (1.0 - rr));
  Rbar1_ = -rr + p.lambda * busy_mass_ * (1.0 + w);
  Qbar1_ = -rr + p.lambda * busy_mass_ * w;
  ergodic_ = rr > 0.0 && Rbar1_ < 0.0;
  if (ergodic_) q00_ = 1.0 - p.lambda * busy_mass_ * (1.0 + w) / rr;
}

double FairStation::lambda_threshold() const {
  const auto& p = params();
  const double rr = r();
  return rr * (1.0 - rr) / ((1.0 - rr + p.W / 2.0) * busy_mass_);
}

bool FairStation::ergodic_by_threshold() const { return params().lambda < lambda_threshold(); }

void FairStation::require_positive_r() const {
  if (!(r() > 0.0)) throw DomainError("fair station with r = 0 never transmits");
}

void FairStation::require_steady_state() const {
  require_positive_r();
  if (!ergodic_) throw NonErgodic("fair station is not ergodic (Rbar'(1) >= 0)");
}

double FairStation::q00() const {
  require_steady_state();
  return q00_;
}

double FairStation::q00_by_derivative() const {
  require_steady_state();
  return -Rbar1_ / r();
}

double FairStation::q00_by_normalization() const {
  require_steady_state();
  const double w = params().W / (2.0 * (1.0 - r()));
  const double ratio = Qbar1_ / Rbar1_;
  return 1.0 / (w * (ratio - 1.0) + ratio);
}

double FairStation::taubar() const {
  require_positive_r();
  return params().lambda * busy_mass_ / r();
}

double FairStation::taubar_from_G0() const { return G0(1.0) - q00(); }

double FairStation::system_residual(double x) const {
  const int W = params().W;
  std::vector<double> G(static_cast<std::size_t>(W) + 1);
  for (int k = 0; k <= W; ++k) G[k] = Gk(k, x);
  const double a = gf_.a(x), b = gf_.b(x), d = D(x);
  double worst = std::abs(a * G[1] - (G[0] - q00_) - d);
  for (int k = 1; k <= W - 1; ++k) worst = std::max(worst, std::abs(a * G[k + 1] - b * G[k] - d));
  worst = std::max(worst, std::abs(b * G[W] + d));
  return worst;
}

double FairStation::summed_balance_residual(double x) const {
  const auto& p = params();
  const int W = p.W;
  const double rr = r();
  std::vector<double> G(static_cast<std::size_t>(W) + 1);
  for (int k = 0; k <= W; ++k) G[k] = Gk(k, x);
  const double PT = gf_.full_arrivals(x), PS = gf_.mini_arrivals(x);
  const double eT = std::exp(-p.lambda * p.T), eS = std::exp(-p.lambda * p.sigma);
  // r e^{-lambda T} q(0,1) from the idle-state balance
  const double q01_reT = q00_ * (1.0 - rr * eT - (1.0 - rr) * eS);
  const double shared = (rr * PT * (G[0] - q00_) - q01_reT * x) / ((W + 1) * x) +
                        (1.0 - rr) / (W + 1) * (PS * G[0] - q00_ * eS) +
                        rr * q00_ * (PT - eT) / (W + 1);
  double worst = 0.0;
  for (int k = 0; k <= W; ++k) {
    double rhs = shared + (k == 0 ? q00_ : 0.0);
    if (k < W) rhs += (1.0 - rr) * PS * G[k + 1];
    if (k > 0) rhs += rr * PT * G[k];
    worst = std::max(worst, std::abs(G[k] - rhs));
  }
  return worst;
}

StationaryTable FairStation::stationary_table(int n_max, double rho) const {
  require_steady_state();
  const int W = params().W;
  GfFamily family = [this, W](cplx x, std::span<cplx> out) {
    const cplx g0 = G0(x);
    const cplx tilde = g0 - q00_;
    const cplx a = gf_.a(x);
    const cplx uu = gf_.u(x);
    out[0] = g0;
    for (int k = 1; k <= W; ++k) out[k] = tilde / a * gf_.backoff_weight(k, uu);
  };
  const auto coeffs = extract_coefficient_family(family, static_cast<std::size_t>(W) + 1, n_max, rho);
  StationaryTable table(W, n_max);
  for (int k = 0; k <= W; ++k) {
    for (int n = 0; n <= n_max; ++n) table.at(k, n) = coeffs[k].values[n];
    table.est_error = std::max(table.est_error, coeffs[k].est_error);
  }
  return table;
}

}  // namespace bcastq
