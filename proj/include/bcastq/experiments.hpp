#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bcastq/network.hpp"
#include "bcastq/params.hpp"

namespace bcastq {

enum class SweepVariable { M, W, Lambda, R };

std::string_view to_string(SweepVariable v);
SweepVariable parse_sweep_variable(std::string_view text);

struct SweepSpec {
  SweepVariable variable = SweepVariable::M;
  double from = 1.0;
  double to = 100.0;
  double step = 1.0;
  SystemParams params;
  ChannelMode mode = ChannelMode::Greedy;
  StationCount convention = StationCount::Peers;
  std::uint64_t seed = 1;
  double r = 0.3;  // busy probability for single-station tables

  /// Throws InvalidParameter on an empty range or when the swept variable
  /// is also fixed (params.M set while sweeping M).
  void check() const;
  std::vector<double> values() const;
};

/// '#' lines: version, command, every parameter, seed, convention, range.
std::string header_block(std::string_view command, const SweepSpec& spec,
                         const std::vector<std::string>& extra = {});

// Sweep tables.  Each returns the whole CSV text; rows are
// computed in parallel and emitted in sweep order.
std::string cmd_tau_vs_m(const SweepSpec& spec);
std::string cmd_lambda_max(const SweepSpec& spec);
std::string cmd_optimal_w(const SweepSpec& spec, int W_lo = 1, int W_hi = 4096);
std::string cmd_fair_vs_greedy(const SweepSpec& spec);

/// Single-station stability surface over lambda, r or W: thresholds and
/// idle probabilities for both modes at busy probability spec.r.
std::string cmd_stability(const SweepSpec& spec);

/// gnuplot script plotting `column` against the first column of `csv_path`.
std::string gnuplot_script(std::string_view csv_path, std::string_view title, int column,
                           std::string_view ylabel);

}  // namespace bcastq
