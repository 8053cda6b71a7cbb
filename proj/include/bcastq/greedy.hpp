#pragma once

#include "bcastq/gf_kernel.hpp"
#include "bcastq/stationary_table.hpp"

namespace bcastq {

/// Steady state of one greedy station against an exogenous busy
/// probability r.  A greedy station forces a full slot whenever its counter
/// is at zero with a packet waiting.
///
/// Construction never fails for an admissible (params, r < 1); steady-state
/// accessors throw NonErgodic when lambda B >= 1.
class GreedyStation {
 public:
  GreedyStation(const SystemParams& params, BusyProb r);

  const SlotGF& kernel() const { return gf_; }
  const SystemParams& params() const { return gf_.params(); }
  double r() const { return gf_.r(); }

  /// rT + (1-r) sigma: mean channel time consumed per back-off step.
  double busy_mass() const { return busy_mass_; }

  double R1() const { return R1_; }
  double Q1() const { return Q1_; }
  double A() const { return A_; }
  double B() const { return B_; }

  /// lambda B < 1.
  bool is_ergodic() const { return ergodic_; }
  /// Direct rate threshold lambda < 1 / (T [1 + rW/(2(1-r))] + W sigma/2).
  bool ergodic_by_threshold() const;
  /// Threshold rate for the current (T, sigma, W, r).
  double lambda_threshold() const;
  /// Sign scan of R on (0, 1): ergodic iff R has no zero there.
  bool ergodic_by_root_scan(int points = 4000) const;
  /// min over a polar grid of the closed unit disc (away from x = 1) of
  /// max(|x Q(x)|, |x R(x)|).  Positive means no common root was found.
  double common_root_margin(int radial = 40, int angular = 128) const;

  double p00() const;
  /// p00 from the normalisation p00 [(1+w) Q1/R1 - w] = 1, w = W/(2(1-r)).
  double p00_by_normalization() const;

  /// lambda c / (1 - lambda T + lambda c), c = busy_mass().  Needs lambda T < 1.
  double tau() const;
  double tau_from_F0() const;
  double tau_from_derivatives() const;

  template <GfArg X>
  X R(X x) const {
    check_arg(x);
    if (x == X(1.0)) return X(0.0);
    return raw_R(x);
  }

  template <GfArg X>
  X Q(X x) const {
    check_arg(x);
    if (x == X(1.0)) return X(0.0);
    return raw_Q(x);
  }

  template <GfArg X>
  X F0(X x) const {
    require_ergodic();
    check_arg(x);
    if (x == X(1.0)) return p00_ * Q1_ / R1_;
    if (std::abs(x - 1.0) < kNearOneRadius) {
      const auto q = divided_by_x_minus_one([this](double t) { return raw_Q(t); }, Q1_, x);
      const auto rr = divided_by_x_minus_one([this](double t) { return raw_R(t); }, R1_, x);
      return p00_ * q / rr;
    }
    return p00_ * raw_Q(x) / raw_R(x);
  }

  template <GfArg X>
  X Fk(int k, X x) const {
    if (k == 0) return F0(x);
    if (k < 0 || k > params().W) throw DomainError("Fk: k must lie in [0, W]");
    const X tilde = F0(x) - p00_;
    return tilde / gf_.a(x) * gf_.backoff_weight(k, gf_.u(x));
  }

  /// Boundary term C(x) of the linear system satisfied by F_0..F_W.
  template <GfArg X>
  X C(X x) const {
    const int W = params().W;
    const X PT = gf_.full_arrivals(x);
    const X PS = gf_.mini_arrivals(x);
    return -PT / (static_cast<double>(W + 1) * x) * F0(x) +
           p00_ / static_cast<double>(W + 1) * (1.0 + (1.0 / x - r()) * PT - (1.0 - r()) * PS);
  }

  /// Largest residual of the three lines of the linear system in F_k at x.
  double system_residual(double x) const;
  /// Largest residual of the per-k recurrence obtained by summing the
  /// balance equations against x^n (before eliminating p(0,1)).
  double summed_balance_residual(double x) const;

  /// p(k, n) for n <= n_max by coefficient extraction from F_0..F_W.
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
  X raw_R(X x) const {
    return gf_.full_arrivals(x) / x - gf_.backoff_tail(x);
  }

  template <GfArg X>
  X raw_Q(X x) const {
    return 1.0 + (1.0 / x - r()) * gf_.full_arrivals(x) - (1.0 - r()) * gf_.mini_arrivals(x) -
           gf_.backoff_tail(x);
  }

  void require_ergodic() const;

  SlotGF gf_;
  double busy_mass_;
  double R1_, Q1_, A_, B_;
  bool ergodic_;
  double p00_ = 0.0;
};

}  // namespace bcastq
