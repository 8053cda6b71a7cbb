#include "bcastq/chain_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bcastq/errors.hpp"

namespace bcastq {

namespace {

std::vector<double> poisson_pmf(double mu, int count) {
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 1)));
  out[0] = std::exp(-mu);
  for (int j = 1; j < count; ++j) out[j] = out[j - 1] * mu / j;
  return out;
}

// GTH elimination on a dense row-major stochastic matrix (destroyed).
std::vector<double> gth(std::vector<double>& P, std::size_t S) {
  for (std::size_t n = S - 1; n >= 1; --n) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += P[n * S + j];
    if (!(s > 0.0)) throw ConvergenceError("truncated chain is reducible");
    for (std::size_t i = 0; i < n; ++i) P[i * S + n] /= s;
    for (std::size_t i = 0; i < n; ++i) {
      const double pin = P[i * S + n];
      if (pin == 0.0) continue;
      double* row_i = &P[i * S];
      const double* row_n = &P[n * S];
      for (std::size_t j = 0; j < n; ++j) row_i[j] += pin * row_n[j];
    }
  }
  std::vector<double> pi(S, 0.0);
  pi[0] = 1.0;
  for (std::size_t j = 1; j < S; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < j; ++i) acc += pi[i] * P[i * S + j];
    pi[j] = acc;
  }
  double total = 0.0;
  for (double v : pi) total += v;
  for (double& v : pi) v /= total;
  return pi;
}

double l1_residual(const TruncatedChain& chain, const std::vector<double>& pi) {
  std::vector<double> y;
  chain.left_multiply(pi, y);
  double res = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i) res += std::abs(y[i] - pi[i]);
  return res;
}

}  // namespace

std::vector<double> arrival_row(double mu, int n, int n_max) {
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
  const int room = n_max - n;  // increments 0..room-1 land below n_max
  const auto pmf = poisson_pmf(mu, room);
  double below = 0.0;
  for (int j = 0; j < room; ++j) {
    out[n + j] = pmf[j];
    below += pmf[j];
  }
  out[n_max] = std::max(0.0, 1.0 - below);
  return out;
}

TruncatedChain TruncatedChain::build(ChannelMode mode, const SystemParams& params, BusyProb r,
                                     int n_max) {
  require_model_params(params);
  if (n_max < 10) throw InvalidParameter("n_max must be >= 10");
  TruncatedChain c;
  c.mode_ = mode;
  c.params_ = params;
  c.r_ = r.value();
  c.n_max_ = n_max;
  c.rows_.resize(c.states());

  const double muT = params.lambda * params.T;
  const double muS = params.lambda * params.sigma;
  const double rr = c.r_;

  for (int k = 1; k <= params.W; ++k)
    for (int n = 0; n <= n_max; ++n) c.add_backoff_row(k, n);

  // idle: the slot type is exogenous, arrivals start a back-off
  {
    Row& row = c.rows_[0];
    c.add_redraw(row, arrival_row(muT, 0, n_max), rr, 0);
    c.add_redraw(row, arrival_row(muS, 0, n_max), 1.0 - rr, 0);
  }
  // head-of-line packet with counter zero
  for (int n = 1; n <= n_max; ++n) {
    Row& row = c.rows_[c.index(0, n)];
    const double send = mode == ChannelMode::Greedy ? 1.0 : rr;
    c.add_redraw(row, arrival_row(muT, n - 1, n_max), send, 0);
    if (mode == ChannelMode::Fair)
      c.add_redraw(row, arrival_row(muS, n, n_max), 1.0 - rr, n);
  }
  return c;
}

void TruncatedChain::add_backoff_row(int k, int n) {
  Row& row = rows_[index(k, n)];
  const double muT = params_.lambda * params_.T;
  const double muS = params_.lambda * params_.sigma;
  const auto full = arrival_row(muT, n, n_max_);
  const auto mini = arrival_row(muS, n, n_max_);
  for (int m = n; m <= n_max_; ++m) {
    if (r_ > 0.0 && full[m] != 0.0) row.direct.push_back({index(k, m), r_ * full[m]});
    if (r_ < 1.0 && mini[m] != 0.0) row.direct.push_back({index(k - 1, m), (1.0 - r_) * mini[m]});
  }
}

// Queue length m after the slot: m = 0 means the station went idle, m >= 1
// starts a fresh uniform back-off.  `from` is the lowest reachable m.
void TruncatedChain::add_redraw(Row& row, const std::vector<double>& arrivals, double weight,
                                int from) {
  if (weight == 0.0) return;
  if (from == 0 && arrivals[0] != 0.0) row.direct.push_back({0, weight * arrivals[0]});
  for (int m = std::max(from, 1); m <= n_max_; ++m)
    if (arrivals[m] != 0.0) row.redraw.push_back({static_cast<std::size_t>(m), weight * arrivals[m]});
}

std::vector<double> TruncatedChain::row_sums() const {
  std::vector<double> out(rows_.size(), 0.0);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double s = 0.0;
    for (const auto& e : rows_[i].direct) s += e.prob;
    for (const auto& e : rows_[i].redraw) s += e.prob;
    out[i] = s;
  }
  return out;
}

void TruncatedChain::left_multiply(const std::vector<double>& x, std::vector<double>& y) const {
  y.assign(rows_.size(), 0.0);
  std::vector<double> spread(static_cast<std::size_t>(n_max_) + 1, 0.0);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (const auto& e : rows_[i].direct) y[e.target] += xi * e.prob;
    for (const auto& e : rows_[i].redraw) spread[e.target] += xi * e.prob;
  }
  const double share = 1.0 / (W() + 1);
  for (int k = 0; k <= W(); ++k)
    for (int m = 1; m <= n_max_; ++m) y[index(k, m)] += spread[m] * share;
}

std::vector<double> TruncatedChain::dense() const {
  const std::size_t S = states();
  std::vector<double> P(S * S, 0.0);
  const double share = 1.0 / (W() + 1);
  for (std::size_t i = 0; i < S; ++i) {
    for (const auto& e : rows_[i].direct) P[i * S + e.target] += e.prob;
    for (const auto& e : rows_[i].redraw)
      for (int k = 0; k <= W(); ++k) P[i * S + index(k, static_cast<int>(e.target))] += e.prob * share;
  }
  return P;
}

ChainSolution solve_stationary(const TruncatedChain& chain, const ChainSolveOptions& options) {
  const std::size_t S = chain.states();
  ChainSolution out;
  std::vector<double> pi;
  if (S <= options.dense_limit) {
    auto P = chain.dense();
    pi = gth(P, S);
    out.direct = true;
  } else {
    pi.assign(S, 1.0 / static_cast<double>(S));
    std::vector<double> next;
    long it = 0;
    for (;;) {
      chain.left_multiply(pi, next);
      double total = 0.0;
      for (double v : next) total += v;
      double change = 0.0;
      for (std::size_t i = 0; i < S; ++i) {
        next[i] /= total;
        change += std::abs(next[i] - pi[i]);
      }
      pi.swap(next);
      ++it;
      if (change <= options.tol) break;
      if (it >= options.max_iterations)
        throw ConvergenceError("power iteration did not converge after " + std::to_string(it) +
                               " sweeps (near-critical parameters?)");
    }
    out.iterations = it;
  }
  out.residual = l1_residual(chain, pi);
  out.table = StationaryTable(chain.W(), chain.n_max());
  out.table.p = std::move(pi);
  for (int k = 0; k <= chain.W(); ++k) out.table.leak += out.table.at(k, chain.n_max());
  return out;
}

AutoChainSolution solve_stationary_auto(ChannelMode mode, const SystemParams& params, BusyProb r,
                                        int n_start, double p00_tol, std::size_t max_states,
                                        const ChainSolveOptions& options) {
  AutoChainSolution out;
  int n = n_start;
  auto prev = solve_stationary(TruncatedChain::build(mode, params, r, n), options);
  for (;;) {
    const int next_n = 2 * n;
    if (static_cast<std::size_t>(params.W + 1) * (next_n + 1) > max_states)
      throw ConvergenceError("p(0,0) not stable before the state cap (n_max = " +
                             std::to_string(n) + ")");
    auto cur = solve_stationary(TruncatedChain::build(mode, params, r, next_n), options);
    const double change = std::abs(cur.table.at(0, 0) - prev.table.at(0, 0));
    n = next_n;
    if (change <= p00_tol) {
      out.solution = std::move(cur);
      out.n_max = n;
      out.p00_change = change;
      return out;
    }
    prev = std::move(cur);
  }
}

double balance_residual(const StationaryTable& t, ChannelMode mode, const SystemParams& params,
                        BusyProb r_, int margin) {
  const double r = r_.value();
  const int W = params.W;
  const int top = t.n_max - margin;  // equations for n < top
  if (top < 2) throw InvalidParameter("balance_residual: n_max too small for the margin");
  const auto eT = poisson_pmf(params.lambda * params.T, top + 1);
  const auto eS = poisson_pmf(params.lambda * params.sigma, top + 1);
  const bool fair = mode == ChannelMode::Fair;
  const double send = fair ? r : 1.0;

  double worst = 0.0;
  // n = 0
  worst = std::abs(t.at(0, 0) - t.at(0, 0) * (r * eT[0] + (1.0 - r) * eS[0]) -
                   send * eT[0] * t.at(0, 1));
  for (int k = 1; k <= W; ++k) worst = std::max(worst, std::abs(t.at(k, 0)));

  for (int n = 1; n < top; ++n) {
    // redraw inflow, the same for every k
    double redraw = t.at(0, 0) * (r * eT[n] + (1.0 - r) * eS[n]);
    for (int m = 1; m <= n + 1; ++m) redraw += send * eT[n + 1 - m] * t.at(0, m);
    if (fair)
      for (int m = 1; m <= n; ++m) redraw += (1.0 - r) * eS[n - m] * t.at(0, m);
    redraw /= (W + 1);

    for (int k = 0; k <= W; ++k) {
      double rhs = redraw;
      if (k < W)
        for (int j = 0; j <= n; ++j) rhs += (1.0 - r) * eS[j] * t.at(k + 1, n - j);
      if (k >= 1)
        for (int j = 0; j <= n; ++j) rhs += r * eT[j] * t.at(k, n - j);
      worst = std::max(worst, std::abs(t.at(k, n) - rhs));
    }
  }
  return worst;
}

double boundary_residual(const StationaryTable& t, ChannelMode mode, const SystemParams& params,
                         BusyProb r_) {
  const double r = r_.value();
  const double eT = std::exp(-params.lambda * params.T);
  const double eS = std::exp(-params.lambda * params.sigma);
  const double lhs = (mode == ChannelMode::Fair ? r : 1.0) * eT * t.at(0, 1);
  return std::abs(lhs - t.at(0, 0) * (1.0 - r * eT - (1.0 - r) * eS));
}

double unreachable_mass(const StationaryTable& t) {
  double worst = 0.0;
  for (int k = 1; k <= t.W; ++k) worst = std::max(worst, t.at(k, 0));
  return worst;
}

}  // namespace bcastq
