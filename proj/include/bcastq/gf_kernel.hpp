#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

#include "bcastq/errors.hpp"
#include "bcastq/params.hpp"

namespace bcastq {

using cplx = std::complex<double>;

template <class X>
concept GfArg = std::is_same_v<X, double> || std::is_same_v<X, cplx>;

/// Building blocks shared by the greedy and fair generating functions:
///
///   a(x) = (1-r) exp(-lambda sigma (1-x))
///   b(x) = 1 - r exp(-lambda T (1-x))
///   u(x) = b(x) / a(x)
///
/// Every expression of the form (1-u^{W+1})/(1-u) is evaluated as the
/// explicit sum 1 + u + ... + u^W, so x = 1 is an ordinary point.
class SlotGF {
 public:
  SlotGF(const SystemParams& params, BusyProb r);

  const SystemParams& params() const { return params_; }
  double r() const { return r_; }
  int W() const { return params_.W; }

  /// PGF of the arrivals during a full slot, exp(-lambda T (1-x)).
  template <GfArg X>
  X full_arrivals(X x) const {
    return std::exp(-params_.lambda * params_.T * (1.0 - x));
  }

  /// PGF of the arrivals during a mini-slot, exp(-lambda sigma (1-x)).
  template <GfArg X>
  X mini_arrivals(X x) const {
    return std::exp(-params_.lambda * params_.sigma * (1.0 - x));
  }

  template <GfArg X>
  X a(X x) const {
    return (1.0 - r_) * mini_arrivals(x);
  }

  template <GfArg X>
  X b(X x) const {
    return 1.0 - r_ * full_arrivals(x);
  }

  template <GfArg X>
  X u(X x) const {
    if (r_ >= 1.0) throw DomainError("u(x) = b(x)/a(x) is undefined for r = 1");
    return b(x) / a(x);
  }

  /// 1 + u(x) + ... + u(x)^W by direct (Horner) summation.
  template <GfArg X>
  X u_geom_sum(X x) const {
    return geom_sum(u(x), params_.W);
  }

  /// (W+1) u^W (1-u) / (1-u^{W+1}) = (W+1) u^W / sum_{i<=W} u^i.
  template <GfArg X>
  X backoff_tail(X x) const {
    return backoff_tail_from_u(u(x));
  }

  template <GfArg X>
  X backoff_tail_from_u(X uu) const {
    const int W = params_.W;
    if (std::abs(uu) > 1.0) {
      const X w = 1.0 / uu;
      return static_cast<double>(W + 1) / geom_sum(w, W);
    }
    return static_cast<double>(W + 1) * ipow(uu, W) / geom_sum(uu, W);
  }

  /// (u^{k-1} - u^W) / (1 - u^{W+1}) for 1 <= k <= W, the share of the
  /// non-idle K=0 mass seen at counter value k (before dividing by a(x)).
  template <GfArg X>
  X backoff_weight(int k, X uu) const {
    const int W = params_.W;
    if (std::abs(uu) > 1.0) {
      const X w = 1.0 / uu;
      return w * geom_sum(w, W - k) / geom_sum(w, W);
    }
    return ipow(uu, k - 1) * geom_sum(uu, W - k) / geom_sum(uu, W);
  }

  template <GfArg X>
  static X geom_sum(X q, int n) {
    X s = 1.0;
    for (int i = 0; i < n; ++i) s = 1.0 + q * s;
    return s;
  }

  template <GfArg X>
  static X ipow(X q, int n) {
    X out = 1.0;
    X base = q;
    while (n > 0) {
      if (n & 1) out *= base;
      base *= base;
      n >>= 1;
    }
    return out;
  }

 private:
  SystemParams params_;
  double r_;
};

/// Taylor coefficients c_0..c_{n_max} of a function analytic on |x| <= rho.
struct SeriesCoefficients {
  std::vector<double> values;
  double radius = 0.0;
  double est_error = 0.0;
  double imag_residual = 0.0;  // largest |Im c_n| before discarding it
  std::size_t samples = 0;
};

inline constexpr double kDefaultExtractionRadius = 0.9;
inline constexpr double kImagResidualTolerance = 1e-10;

/// Evaluates several functions at one point; writes out[i] = g_i(x).
using GfFamily = std::function<void(cplx x, std::span<cplx> out)>;

/// Cauchy-integral coefficient extraction on the circle |x| = rho with
/// N = max(256, 4 n_max) uniform nodes.  `mass_bound` bounds sum |c_n| and
/// feeds the aliasing term of est_error (1 for a probability GF).
/// Throws ConvergenceError when an imaginary residual exceeds 1e-10.
std::vector<SeriesCoefficients> extract_coefficient_family(const GfFamily& family,
                                                           std::size_t count, int n_max,
                                                           double rho = kDefaultExtractionRadius,
                                                           double mass_bound = 1.0);

SeriesCoefficients extract_coefficients(const std::function<cplx(cplx)>& g, int n_max,
                                        double rho = kDefaultExtractionRadius,
                                        double mass_bound = 1.0);

// Lagrange interpolation of h(x) = num(x)/(x-1) through the nodes
// 1 + {-2,-1,1,2} delta and the known value h(1) = slope_at_one.  Used to
// evaluate 0/0 ratios such as Q(x)/R(x) for |x-1| < 1e-4.
inline constexpr double kNearOneRadius = 1e-4;
inline constexpr double kNearOneNodeSpacing = 1e-3;

template <GfArg X, class Fn>
X divided_by_x_minus_one(const Fn& num, double slope_at_one, X x) {
  constexpr double d = kNearOneNodeSpacing;
  const double nodes[5] = {-2 * d, -d, 0.0, d, 2 * d};
  double values[5];
  for (int i = 0; i < 5; ++i) {
    values[i] = i == 2 ? slope_at_one : num(1.0 + nodes[i]) / nodes[i];
  }
  const X t = x - 1.0;
  X acc = 0.0;
  for (int i = 0; i < 5; ++i) {
    X basis = 1.0;
    for (int j = 0; j < 5; ++j) {
      if (j != i) basis *= (t - nodes[j]) / (nodes[i] - nodes[j]);
    }
    acc += values[i] * basis;
  }
  return acc;
}

}  // namespace bcastq
