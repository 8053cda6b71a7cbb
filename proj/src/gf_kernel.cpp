#include "bcastq/gf_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace bcastq {

SlotGF::SlotGF(const SystemParams& params, BusyProb r) : params_(params), r_(r.value()) {
  require_model_params(params_);
}

std::vector<SeriesCoefficients> extract_coefficient_family(const GfFamily& family,
                                                           std::size_t count, int n_max,
                                                           double rho, double mass_bound) {
  if (n_max < 0) throw InvalidParameter("n_max must be >= 0");
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidParameter("extraction radius must lie in (0,1)");

  const std::size_t N = std::max<std::size_t>(256, 4 * static_cast<std::size_t>(n_max));
  std::vector<cplx> roots(N);
  for (std::size_t m = 0; m < N; ++m) {
    roots[m] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(N));
  }

  // samples[i * N + j] = g_i(rho * w^j)
  std::vector<cplx> samples(count * N);
  std::vector<cplx> point(count);
  std::vector<double> sup(count, 0.0);
  for (std::size_t j = 0; j < N; ++j) {
    family(rho * roots[j], point);
    for (std::size_t i = 0; i < count; ++i) {
      samples[i * N + j] = point[i];
      sup[i] = std::max(sup[i], std::abs(point[i]));
    }
  }

  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double rhoN = std::pow(rho, static_cast<double>(N));
  const double aliasing = mass_bound * rhoN / (1.0 - rhoN);

  std::vector<SeriesCoefficients> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& sc = out[i];
    sc.values.resize(static_cast<std::size_t>(n_max) + 1);
    sc.radius = rho;
    sc.samples = N;
    double worst = 0.0;
    for (int n = 0; n <= n_max; ++n) {
      cplx acc = 0.0;
      for (std::size_t j = 0; j < N; ++j) {
        // conj(w^{jn}) taken from the table to avoid drift in the angle
        const std::size_t idx = (j * static_cast<std::size_t>(n)) % N;
        acc += samples[i * N + j] * std::conj(roots[idx]);
      }
      const double scale = std::pow(rho, -n) / static_cast<double>(N);
      const cplx c = acc * scale;
      sc.values[static_cast<std::size_t>(n)] = c.real();
      sc.imag_residual = std::max(sc.imag_residual, std::abs(c.imag()));
      const double roundoff = 8.0 * eps * sup[i] * std::pow(rho, -n) * std::sqrt(static_cast<double>(N));
      worst = std::max(worst, roundoff + std::abs(c.imag()));
    }
    sc.est_error = aliasing + worst;
    if (sc.imag_residual > kImagResidualTolerance) {
      throw ConvergenceError("coefficient extraction: imaginary residual " +
                             std::to_string(sc.imag_residual) +
                             " exceeds tolerance (function not analytic with real coefficients "
                             "on the extraction disc?)");
    }
  }
  return out;
}

SeriesCoefficients extract_coefficients(const std::function<cplx(cplx)>& g, int n_max, double rho,
                                        double mass_bound) {
  GfFamily family = [&g](cplx x, std::span<cplx> out) { out[0] = g(x); };
  return extract_coefficient_family(family, 1, n_max, rho, mass_bound).front();
}

}  // namespace bcastq
