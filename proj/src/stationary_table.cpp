#include "bcastq/stationary_table.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "bcastq/params.hpp"

namespace bcastq {

StationaryTable::StationaryTable(int W_, int n_max_)
    : W(W_), n_max(n_max_), p(static_cast<std::size_t>(W_ + 1) * static_cast<std::size_t>(n_max_ + 1), 0.0) {}

double StationaryTable::total() const {
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

double StationaryTable::mean_queue() const {
  double s = 0.0;
  for (int k = 0; k <= W; ++k)
    for (int n = 1; n <= n_max; ++n) s += n * at(k, n);
  return s;
}

double StationaryTable::mean_backoff() const {
  double s = 0.0;
  for (int k = 1; k <= W; ++k)
    for (int n = 0; n <= n_max; ++n) s += k * at(k, n);
  return s;
}

double StationaryTable::transmit_mass() const {
  double s = 0.0;
  for (int n = 1; n <= n_max; ++n) s += at(0, n);
  return s;
}

double StationaryTable::max_abs_diff(const StationaryTable& other) const {
  const int kk = std::min(W, other.W);
  const int nn = std::min(n_max, other.n_max);
  double worst = 0.0;
  for (int k = 0; k <= kk; ++k)
    for (int n = 0; n <= nn; ++n) worst = std::max(worst, std::abs(at(k, n) - other.at(k, n)));
  return worst;
}

void StationaryTable::write_csv(std::ostream& os) const {
  os << "k,n,probability\n";
  for (int k = 0; k <= W; ++k)
    for (int n = 0; n <= n_max; ++n) os << k << ',' << n << ',' << format_double(at(k, n)) << '\n';
}

}  // namespace bcastq
