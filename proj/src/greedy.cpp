#include "bcastq/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace bcastq {

GreedyStation::GreedyStation(const SystemParams& params, BusyProb r) : gf_(params, r) {
  const double rr = r.value();
  if (rr >= 1.0) throw InvalidParameter("greedy station needs r < 1");
  const auto& p = gf_.params();
  busy_mass_ = rr * p.T + (1.0 - rr) * p.sigma;
  const double w = p.W / (2.0 * (1.0 - rr));
  R1_ = -1.0 + p.lambda * p.T + p.lambda * w * busy_mass_;
  Q1_ = -1.0 + (1.0 - rr) * p.lambda * (p.T - p.sigma) + p.lambda * w * busy_mass_;
  A_ = (1.0 - rr) * (p.T - p.sigma) + w * busy_mass_;
  B_ = p.T + w * busy_mass_;
  ergodic_ = p.lambda * B_ < 1.0;
  if (ergodic_) {
    p00_ = (1.0 - p.lambda * B_) /
           (1.0 - p.lambda * A_ + p.lambda * p.W * (B_ - A_) / (2.0 * (1.0 - rr)));
  }
}

double GreedyStation::lambda_threshold() const {
  const auto& p = params();
  const double rr = r();
  return 1.0 / (p.T * (1.0 + rr * p.W / (2.0 * (1.0 - rr))) + p.W * p.sigma / 2.0);
}

bool GreedyStation::ergodic_by_threshold() const { return params().lambda < lambda_threshold(); }

bool GreedyStation::ergodic_by_root_scan(int points) const {
  // R(x) -> +inf as x -> 0+, R(1) = 0.  A zero inside (0,1) shows up as a
  // sign change; next to x = 1 the sign is read from R'(1) to avoid 0/0.
  const double lo = 1e-4, hi = 1.0 - 1e-3;
  int changes = 0;
  double prev = raw_R(lo);
  for (int i = 1; i <= points; ++i) {
    const double cur = raw_R(lo + (hi - lo) * i / points);
    if ((prev > 0.0) != (cur > 0.0)) ++changes;
    prev = cur;
  }
  const double near_one = -R1_;  // sign of R(1^-)
  if ((prev > 0.0) != (near_one > 0.0)) ++changes;
  return changes == 0;
}

double GreedyStation::common_root_margin(int radial, int angular) const {
  double margin = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= radial; ++i) {
    const double rho = static_cast<double>(i) / radial;
    for (int j = 0; j < angular; ++j) {
      const cplx x = std::polar(rho, 2.0 * std::numbers::pi * j / angular);
      if (std::abs(x - 1.0) < 0.05) continue;
      const double m = std::max(std::abs(x * raw_Q(x)), std::abs(x * raw_R(x)));
      margin = std::min(margin, m);
    }
  }
  return margin;
}

void GreedyStation::require_ergodic() const {
  if (!ergodic_) throw NonErgodic("greedy station is not ergodic (lambda B >= 1)");
}

double GreedyStation::p00() const {
  require_ergodic();
  return p00_;
}

double GreedyStation::p00_by_normalization() const {
  require_ergodic();
  const double w = params().W / (2.0 * (1.0 - r()));
  return 1.0 / ((1.0 + w) * Q1_ / R1_ - w);
}

double GreedyStation::tau() const {
  const auto& p = params();
  if (!(p.lambda * p.T < 1.0)) throw DomainError("tau needs lambda T < 1");
  return p.lambda * busy_mass_ / (1.0 - p.lambda * p.T + p.lambda * busy_mass_);
}

double GreedyStation::tau_from_F0() const { return F0(1.0) - p00(); }

double GreedyStation::tau_from_derivatives() const { return p00() * (Q1_ / R1_ - 1.0); }

double GreedyStation::system_residual(double x) const {
  const int W = params().W;
  std::vector<double> F(static_cast<std::size_t>(W) + 1);
  for (int k = 0; k <= W; ++k) F[k] = Fk(k, x);
  const double a = gf_.a(x), b = gf_.b(x), c = C(x);
  double worst = std::abs(a * F[1] - (F[0] - p00_) - c);
  for (int k = 1; k <= W - 1; ++k) worst = std::max(worst, std::abs(a * F[k + 1] - b * F[k] - c));
  worst = std::max(worst, std::abs(b * F[W] + c));
  return worst;
}

double GreedyStation::summed_balance_residual(double x) const {
  const auto& p = params();
  const int W = p.W;
  const double rr = r();
  std::vector<double> F(static_cast<std::size_t>(W) + 1);
  for (int k = 0; k <= W; ++k) F[k] = Fk(k, x);
  const double PT = gf_.full_arrivals(x), PS = gf_.mini_arrivals(x);
  const double eT = std::exp(-p.lambda * p.T), eS = std::exp(-p.lambda * p.sigma);
  // e^{-lambda T} p(0,1) from the idle-state balance
  const double p01_eT = p00_ * (1.0 - rr * eT - (1.0 - rr) * eS);
  const double shared = (PT * (F[0] - p00_) - p01_eT * x) / ((W + 1) * x) +
                        p00_ / (W + 1) * (rr * (PT - eT) + (1.0 - rr) * (PS - eS));
  double worst = 0.0;
  for (int k = 0; k <= W; ++k) {
    const double lhs = F[k] - (k == 0 ? p00_ : 0.0);
    double rhs = shared;
    if (k < W) rhs += (1.0 - rr) * PS * F[k + 1];
    if (k > 0) rhs += rr * PT * F[k];
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

StationaryTable GreedyStation::stationary_table(int n_max, double rho) const {
  require_ergodic();
  const int W = params().W;
  GfFamily family = [this, W](cplx x, std::span<cplx> out) {
    const cplx f0 = F0(x);
    const cplx tilde = f0 - p00_;
    const cplx a = gf_.a(x);
    const cplx uu = gf_.u(x);
    out[0] = f0;
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
