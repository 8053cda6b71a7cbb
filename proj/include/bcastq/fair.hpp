#pragma once

#include "bcastq/gf_kernel.hpp"
#include "bcastq/stationary_table.hpp"

namespace bcastq {

/// Steady state of one fair-load station: slots are full with probability r
/// regardless of the station, and a head-of-line packet with counter zero
/// is sent only in a full slot, otherwise it redraws its back-off.
///
/// r = 0 is accepted at construction (the station then never transmits) but
/// every steady-state accessor rejects it.
class FairStation {
 public:
  FairStation(const SystemParams& params, BusyProb r);

  const SlotGF& kernel() const { return gf_; }
  const SystemParams& params() const { return gf_.params(); }
  double r() const { return gf_.r(); }
  double busy_mass() const { return busy_mass_; }

  double Rbar1() const { return Rbar1_; }
  double Qbar1() const { return Qbar1_; }

  /// Rbar'(1) < 0.
  bool is_ergodic() const { return ergodic_; }
  /// lambda < r(1-r) / ([1 - r + W/2][rT + (1-r) sigma]).
  bool ergodic_by_threshold() const;
  double lambda_threshold() const;

  double q00() const;
  double q00_by_derivative() const;     // -Rbar'(1)/r
  double q00_by_normalization() const;  // 1 / (w (Q/R - 1) + Q/R) at x = 1

  /// lambda [rT + (1-r) sigma] / r.
  double taubar() const;
  double taubar_from_G0() const;

  /// Channel time per epoch; slots are an exogenous renewal sequence here.
  double mean_slot_length() const { return busy_mass_; }

  template <GfArg X>
  X Rbar(X x) const {
    check_arg(x);
    if (x == X(1.0)) return X(0.0);
    return raw_Rbar(x);
  }

  template <GfArg X>
  X Qbar(X x) const {
    check_arg(x);
    if (x == X(1.0)) return X(0.0);
    return raw_Qbar(x);
  }

  template <GfArg X>
  X G0(X x) const {
    require_steady_state();
    check_arg(x);
    if (x == X(1.0)) return q00_ * Qbar1_ / Rbar1_;
    if (std::abs(x - 1.0) < kNearOneRadius) {
      const auto q = divided_by_x_minus_one([this](double t) { return raw_Qbar(t); }, Qbar1_, x);
      const auto rr = divided_by_x_minus_one([this](double t) { return raw_Rbar(t); }, Rbar1_, x);
      return q00_ * q / rr;
    }
    return q00_ * raw_Qbar(x) / raw_Rbar(x);
  }

  template <GfArg X>
  X Gk(int k, X x) const {
    if (k == 0) return G0(x);
    if (k < 0 || k > params().W) throw DomainError("Gk: k must lie in [0, W]");
    const X tilde = G0(x) - q00_;
    return tilde / gf_.a(x) * gf_.backoff_weight(k, gf_.u(x));
  }

  template <GfArg X>
  X D(X x) const {
    const int W = params().W;
    const X PT = gf_.full_arrivals(x);
    const X PS = gf_.mini_arrivals(x);
    return -G0(x) / static_cast<double>(W + 1) * (r() * PT / x + (1.0 - r()) * PS) +
           q00_ / static_cast<double>(W + 1) * (1.0 + r() * (1.0 / x - 1.0) * PT);
  }

  double system_residual(double x) const;
  double summed_balance_residual(double x) const;

  StationaryTable stationary_table(int n_max, double rho = kDefaultExtractionRadius) const;

 private:
  template <GfArg X>
  void check_arg(X x) const {
    if (x == X(0.0)) throw DomainError("x = 0 is a pole");
    if constexpr (std::is_same_v<X, double>) {
      if (!(x > 0.0 && x <= 1.0)) throw DomainError("x must lie in (0, 1]");
    } else {
      if (std::abs(x) > 1.0 + 1e-12) throw DomainError("|x| must be <= 1");
    }
  }

  template <GfArg X>
  X raw_Rbar(X x) const {
    return r() * gf_.full_arrivals(x) / x + (1.0 - r()) * gf_.mini_arrivals(x) -
           gf_.backoff_tail(x);
  }

  template <GfArg X>
  X raw_Qbar(X x) const {
    return 1.0 + r() * (1.0 / x - 1.0) * gf_.full_arrivals(x) - gf_.backoff_tail(x);
  }

  void require_positive_r() const;
  void require_steady_state() const;

  SlotGF gf_;
  double busy_mass_;
  double Rbar1_, Qbar1_;
  bool ergodic_;
  double q00_ = 0.0;
};

}  // namespace bcastq
