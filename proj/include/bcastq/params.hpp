#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace bcastq {

inline constexpr std::string_view kVersion = "0.1.0";

enum class ChannelMode { Greedy, Fair };

std::string_view to_string(ChannelMode mode);
ChannelMode parse_mode(std::string_view text);

/// Per-station parameters of the back-off model.  Times are in arbitrary
/// units; the back-off counter is drawn uniformly on {0, ..., W}.
struct SystemParams {
  double lambda = 0.05;  // Poisson arrival rate
  double T = 1.0;        // full slot length
  double sigma = 0.05;   // mini-slot length
  int W = 31;            // back-off window
  std::optional<int> M;  // peer stations, when a network is implied

  /// T < sigma is accepted but physically meaningless.
  bool academic() const { return T < sigma; }

  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

/// Returns `params` unchanged when every invariant holds, throws
/// InvalidParameter otherwise.
SystemParams validate(const SystemParams& params);

/// Weaker check used by the model modules: lambda = 0 is allowed there.
void require_model_params(const SystemParams& params);

/// Probability that a sampled slot is a full slot.
class BusyProb {
 public:
  explicit BusyProb(double r);

  /// r = 1 - (1 - tau)^M.
  static BusyProb from_peers(double tau, int M);

  double value() const { return r_; }

  friend bool operator==(const BusyProb&, const BusyProb&) = default;

 private:
  double r_;
};

/// Everything a CLI run can read from a config file.
struct RunConfig {
  SystemParams params;
  std::optional<double> r;
  ChannelMode mode = ChannelMode::Greedy;
  std::uint64_t seed = 1;
  std::int64_t slots = 10'000'000;
  int n_max = 60;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Plain-text config: one `key = value` per line, '#' starts a comment.
// Keys: lambda, T, sigma, W, M, r, mode, seed, slots, n_max.  Unknown keys
// are an error.  Keys absent from the text keep the values in `base`.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});
std::string format_config(const RunConfig& config);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace bcastq
