#pragma once

#include <complex>

#include "bcastq/greedy.hpp"

namespace bcastq {

/// Laplace-Stieltjes transform of the virtual waiting time of a packet that
/// arrives at an embedded epoch of an ergodic greedy station:
///   psi(s) = sum_k f(s)^k F_k(v(s)),
///   f(s) = (1-r) e^{-s sigma} / (1 - r e^{-sT}),
///   v(s) = e^{-sT} (1 + f + ... + f^W) / (W + 1).
/// f is the transform of one counter decrement, v that of one transmission
/// followed by a fresh back-off.
class WaitTransform {
 public:
  /// Throws NonErgodic for a non-ergodic station.
  explicit WaitTransform(const GreedyStation& station);

  const GreedyStation& station() const { return station_; }

  template <class S>
  S f(S s) const {
    const auto& p = station_.params();
    const double r = station_.r();
    return (1.0 - r) * std::exp(-s * p.sigma) / (1.0 - r * std::exp(-s * p.T));
  }

  template <class S>
  S v(S s) const {
    const int W = station_.params().W;
    const S fs = f(s);
    S acc = 1.0;
    for (int i = 0; i < W; ++i) acc = acc * fs + 1.0;
    return std::exp(-s * station_.params().T) * acc / static_cast<double>(W + 1);
  }

  /// psi(0) is returned as exactly 1.
  double psi_star(double s) const;
  /// The sum evaluated literally, including at s = 0 (through F_k(1)).
  double psi_star_by_sum(double s) const;
  std::complex<double> psi_star(std::complex<double> s) const;

  /// -psi'(0) from one-sided 5-point differences plus Richardson
  /// extrapolation, step picked from [1e-5, 1e-3].
  double mean_wait() const;

  /// Mean time between embedded epochs: [r + tau(1-r)] T + (1-r)(1-tau) sigma.
  double mean_cycle_length() const;

  /// P(wait <= t) for t > 0 by Euler summation of the Bromwich integral of
  /// psi(s)/s.  The wait lives on the lattice {a sigma + b T}, so values at
  /// lattice points come out as the mid-jump average.  Between atoms the
  /// error is a few 1e-4 (slow convergence on a step function).
  double cdf(double t) const;

 private:
  template <class S>
  S sum_route(S s) const;

  GreedyStation station_;
};

}  // namespace bcastq
