#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "bcastq/params.hpp"

namespace bcastq {

struct StationState {
  int K = 0;        // back-off counter
  std::int64_t N = 0;  // queue length
  double clock = 0.0;

  friend bool operator==(const StationState&, const StationState&) = default;
};

/// Length of the slot that starts in `state`.  Greedy: a head-of-line
/// packet with K = 0 forces a full slot; otherwise the slot is full iff
/// `busy_draw`.  Fair: full iff `busy_draw`.
double slot_length(ChannelMode mode, const StationState& state, bool busy_draw,
                   const SystemParams& params);

/// One embedded step.  `arrivals` must be drawn with mean lambda times the
/// slot length; `backoff_draw` in [0, W] is used only when a fresh back-off
/// starts.
StationState step_greedy(StationState state, bool busy_draw, std::int64_t arrivals, int backoff_draw,
                         const SystemParams& params);
StationState step_fair(StationState state, bool busy_draw, std::int64_t arrivals, int backoff_draw,
                       const SystemParams& params);
StationState step(ChannelMode mode, StationState state, bool busy_draw, std::int64_t arrivals,
                  int backoff_draw, const SystemParams& params);

/// Sample mean with a batch-means standard error.
class BatchAccumulator {
 public:
  BatchAccumulator() = default;
  explicit BatchAccumulator(int batches);

  void add(int batch, double value);
  void merge(const BatchAccumulator& other);

  double mean() const;
  /// Standard deviation of the non-empty batch means over sqrt(#batches).
  double se() const;
  std::int64_t count() const;
  int batches() const { return static_cast<int>(sum_.size()); }
  std::vector<double> batch_means() const;

  friend bool operator==(const BatchAccumulator&, const BatchAccumulator&) = default;

 private:
  std::vector<double> sum_;
  std::vector<std::int64_t> n_;
};

struct SimOptions {
  std::int64_t epochs = 10'000'000;  // after warm-up
  std::int64_t warmup = 100'000;
  int batches = 100;
  std::vector<double> laplace_s{0.1, 0.5, 1.0};
  bool track_waits = true;
  int hist_n_max = 60;   // queue lengths above this are binned at hist_n_max
  int hist_stride = 1;   // histogram records every stride-th epoch
  double residual_busy = 0.0;  // network runs: exogenous full-slot probability
  std::ostream* trace = nullptr;  // per-epoch dump, debugging only
};

struct SimStats {
  ChannelMode mode = ChannelMode::Greedy;
  std::uint64_t seed = 0;
  double r = 0.0;          // exogenous busy probability (station runs)
  int stations = 1;        // 1 for station runs
  std::int64_t epochs = 0;

  BatchAccumulator idle;       // state (0, 0)
  BatchAccumulator transmit;   // K = 0 and N > 0
  BatchAccumulator queue;      // N
  BatchAccumulator cycle;      // slot length
  BatchAccumulator busy;       // full slot indicator
  BatchAccumulator virtual_wait;
  BatchAccumulator arrival_wait;  // FIFO delay of real arrivals up to service start
  std::vector<double> laplace_s;
  std::vector<BatchAccumulator> laplace;  // e^{-s * virtual wait}

  std::int64_t full_slots = 0;
  std::int64_t mini_slots = 0;
  std::int64_t success_slots = 0;
  std::int64_t collision_slots = 0;
  double total_time = 0.0;

  int hist_W = 0;
  int hist_n_max = 0;
  std::vector<std::int64_t> histogram;  // k * (hist_n_max + 1) + n
  std::int64_t hist_samples = 0;

  bool drift_warning = false;
  std::vector<std::string> warnings;

  /// Channel time spent in success slots per unit time (network runs).
  double success_throughput(double T) const;

  /// Associative: batches are concatenated, counters added.
  void merge(const SimStats& other);

  void write_csv(std::ostream& os) const;

  friend bool operator==(const SimStats&, const SimStats&) = default;
};

/// Independent generator for substream `id` of `seed`.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t id);

/// Single station against an exogenous Bernoulli(r) slot sequence.
SimStats run_station(ChannelMode mode, const SystemParams& params, BusyProb r, std::uint64_t seed,
                     const SimOptions& options = {});

/// `stations` coupled stations sharing one channel.  Greedy: the slot is
/// full iff some station has K = 0, N > 0 (all of them send) or the
/// residual draw fires.  Fair: the slot is full iff at least two stations
/// are ready or the residual draw fires; ready stations send in a full slot
/// and redraw their back-off in a mini-slot.  Statistics are per station.
SimStats run_network(ChannelMode mode, const SystemParams& params, int stations, std::uint64_t seed,
                     const SimOptions& options = {});

}  // namespace bcastq
