#pragma once

#include <iosfwd>
#include <vector>

namespace bcastq {

/// Truncated joint distribution p(k, n), k in [0, W], n in [0, n_max].
struct StationaryTable {
  int W = 0;
  int n_max = 0;
  std::vector<double> p;  // row-major, k * (n_max + 1) + n
  double est_error = 0.0;  // extraction error bound (analytic tables)
  double leak = 0.0;       // mass in the n = n_max row (truncated chains)

  StationaryTable() = default;
  StationaryTable(int W_, int n_max_);

  double at(int k, int n) const { return p[index(k, n)]; }
  double& at(int k, int n) { return p[index(k, n)]; }
  std::size_t index(int k, int n) const {
    return static_cast<std::size_t>(k) * static_cast<std::size_t>(n_max + 1) +
           static_cast<std::size_t>(n);
  }

  double total() const;
  double mean_queue() const;
  double mean_backoff() const;
  /// sum_{n>=1} p(0, n)
  double transmit_mass() const;

  /// Largest |p(k,n) - other(k,n)| over the common index range.
  double max_abs_diff(const StationaryTable& other) const;

  /// CSV rows "k,n,probability" with a header line.
  void write_csv(std::ostream& os) const;
};

}  // namespace bcastq
