#pragma once

#include <cstddef>
#include <vector>

#include "bcastq/params.hpp"
#include "bcastq/stationary_table.hpp"

namespace bcastq {

/// Poisson(mu) arrival row seen from queue length n: entry m is the
/// probability of moving to queue length m, with every increment that
/// would pass n_max lumped into m = n_max.
std::vector<double> arrival_row(double mu, int n, int n_max);

/// The (k, n) chain cut at queue length n_max, in either mode.  States are
/// indexed k * (n_max + 1) + n, so (0, 0) is state 0.
///
/// Transitions come in two kinds: explicit (state -> state) entries and
/// "redraw" entries (state -> queue length m >= 1) whose mass is spread
/// uniformly over k = 0..W.  Keeping the redraw implicit keeps a row at
/// O(n_max) entries instead of O(W n_max).
class TruncatedChain {
 public:
  static TruncatedChain build(ChannelMode mode, const SystemParams& params, BusyProb r, int n_max);

  ChannelMode mode() const { return mode_; }
  const SystemParams& params() const { return params_; }
  double r() const { return r_; }
  int W() const { return params_.W; }
  int n_max() const { return n_max_; }
  std::size_t states() const { return static_cast<std::size_t>(W() + 1) * (n_max_ + 1); }
  std::size_t index(int k, int n) const {
    return static_cast<std::size_t>(k) * (n_max_ + 1) + static_cast<std::size_t>(n);
  }

  std::vector<double> row_sums() const;
  /// y = x P.
  void left_multiply(const std::vector<double>& x, std::vector<double>& y) const;
  /// Row-major dense copy of P.
  std::vector<double> dense() const;

 private:
  struct Entry {
    std::size_t target;
    double prob;
  };
  struct Row {
    std::vector<Entry> direct;
    std::vector<Entry> redraw;  // target is a queue length here
  };

  // shared by both modes
  void add_backoff_row(int k, int n);
  void add_redraw(Row& row, const std::vector<double>& arrivals, double weight, int from);

  ChannelMode mode_ = ChannelMode::Greedy;
  SystemParams params_;
  double r_ = 0.0;
  int n_max_ = 0;
  std::vector<Row> rows_;
};

struct ChainSolveOptions {
  double tol = 1e-14;           // L1 change per power-iteration sweep
  long max_iterations = 2'000'000;
  std::size_t dense_limit = 1600;  // GTH elimination up to this many states
};

struct ChainSolution {
  StationaryTable table;  // table.leak is the n = n_max mass
  double residual = 0.0;  // || pi P - pi ||_1
  long iterations = 0;    // 0 for the direct solve
  bool direct = false;
};

/// Stationary vector of the truncated chain.  Throws ConvergenceError when
/// power iteration hits its cap or the chain is reducible.
ChainSolution solve_stationary(const TruncatedChain& chain, const ChainSolveOptions& options = {});

struct AutoChainSolution {
  ChainSolution solution;
  int n_max = 0;
  double p00_change = 0.0;  // |p00(n_max) - p00(n_max / 2)|
};

/// Doubles n_max from `n_start` until p(0,0) moves by at most `p00_tol`, or
/// the state count would pass `max_states` (ConvergenceError then).
AutoChainSolution solve_stationary_auto(ChannelMode mode, const SystemParams& params, BusyProb r,
                                        int n_start = 60, double p00_tol = 1e-10,
                                        std::size_t max_states = 40'000,
                                        const ChainSolveOptions& options = {});

/// Largest violation of the balance equations, written out term by term,
/// over n < n_max - margin.  Includes the p(k,0) = 0 boundary rows.
double balance_residual(const StationaryTable& table, ChannelMode mode, const SystemParams& params,
                        BusyProb r, int margin = 20);

/// |e^{-lambda T} p(0,1) - p(0,0)[1 - r e^{-lambda T} - (1-r) e^{-lambda sigma}]|
/// (with an extra factor r on the left in fair mode).
double boundary_residual(const StationaryTable& table, ChannelMode mode, const SystemParams& params,
                         BusyProb r);

/// max_{k>=1} p(k, 0).
double unreachable_mass(const StationaryTable& table);

}  // namespace bcastq
