#include "bcastq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <stdexcept>

#include "bcastq/errors.hpp"

namespace bcastq {

namespace {

enum Stream : std::uint64_t { kSlot = 1, kArrival = 2, kBackoff = 3, kAux = 4, kStamp = 5 };

void check_invariant(const StationState& s) {
  if (s.K >= 1 && s.N < 1) throw std::logic_error("simulator reached K >= 1 with an empty queue");
}

// Poisson arrivals for either slot length; lambda = 0 is allowed.
class ArrivalSource {
 public:
  ArrivalSource(const SystemParams& p)
      : T_(p.T), on_(p.lambda > 0.0), full_(on_ ? p.lambda * p.T : 1.0),
        mini_(on_ ? p.lambda * p.sigma : 1.0) {}

  std::int64_t draw(double len, std::mt19937_64& gen) {
    if (!on_) return 0;
    return len == T_ ? full_(gen) : mini_(gen);
  }

 private:
  double T_;
  bool on_;
  std::poisson_distribution<std::int64_t> full_, mini_;
};

// Least-squares slope of the queue batch means with its t statistic.
bool queue_drifts(const BatchAccumulator& queue) {
  const auto m = queue.batch_means();
  const std::size_t B = m.size();
  if (B < 10) return false;
  double xbar = (B - 1) / 2.0, ybar = 0.0;
  for (double v : m) ybar += v;
  ybar /= B;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    sxx += (i - xbar) * (i - xbar);
    sxy += (i - xbar) * (m[i] - ybar);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const double e = m[i] - ybar - slope * (i - xbar);
    rss += e * e;
  }
  const double se = std::sqrt(rss / (B - 2) / sxx);
  const double t = se > 0.0 ? slope / se : (slope > 0.0 ? INFINITY : 0.0);
  return t > 5.0 && m.back() > 1.5 * m.front() + 1.0;
}

}  // namespace

double slot_length(ChannelMode mode, const StationState& s, bool busy_draw, const SystemParams& p) {
  if (mode == ChannelMode::Greedy && s.K == 0 && s.N > 0) return p.T;
  return busy_draw ? p.T : p.sigma;
}

StationState step_greedy(StationState s, bool busy_draw, std::int64_t arrivals, int backoff_draw,
                         const SystemParams& p) {
  s.clock += slot_length(ChannelMode::Greedy, s, busy_draw, p);
  if (s.K > 0) {
    if (!busy_draw) --s.K;
    s.N += arrivals;
  } else if (s.N > 0) {
    s.N += arrivals - 1;
    s.K = s.N >= 1 ? backoff_draw : 0;
  } else if (arrivals >= 1) {
    s.N = arrivals;
    s.K = backoff_draw;
  }
  return s;
}

StationState step_fair(StationState s, bool busy_draw, std::int64_t arrivals, int backoff_draw,
                       const SystemParams& p) {
  if (s.K == 0 && s.N > 0 && !busy_draw) {
    // mini-slot: back to back-off
    s.clock += p.sigma;
    s.N += arrivals;
    s.K = backoff_draw;
    return s;
  }
  // every other case reads like greedy once the slot is full or K > 0
  return step_greedy(s, busy_draw, arrivals, backoff_draw, p);
}

StationState step(ChannelMode mode, StationState s, bool busy_draw, std::int64_t arrivals,
                  int backoff_draw, const SystemParams& p) {
  return mode == ChannelMode::Greedy ? step_greedy(s, busy_draw, arrivals, backoff_draw, p)
                                     : step_fair(s, busy_draw, arrivals, backoff_draw, p);
}

BatchAccumulator::BatchAccumulator(int batches)
    : sum_(static_cast<std::size_t>(batches), 0.0), n_(static_cast<std::size_t>(batches), 0) {}

void BatchAccumulator::add(int batch, double value) {
  sum_[batch] += value;
  ++n_[batch];
}

void BatchAccumulator::merge(const BatchAccumulator& other) {
  sum_.insert(sum_.end(), other.sum_.begin(), other.sum_.end());
  n_.insert(n_.end(), other.n_.begin(), other.n_.end());
}

std::int64_t BatchAccumulator::count() const {
  std::int64_t c = 0;
  for (auto v : n_) c += v;
  return c;
}

double BatchAccumulator::mean() const {
  double s = 0.0;
  for (double v : sum_) s += v;
  const auto c = count();
  return c == 0 ? std::nan("") : s / static_cast<double>(c);
}

std::vector<double> BatchAccumulator::batch_means() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < sum_.size(); ++i)
    if (n_[i] > 0) out.push_back(sum_[i] / static_cast<double>(n_[i]));
  return out;
}

double BatchAccumulator::se() const {
  const auto m = batch_means();
  if (m.size() < 2) return std::nan("");
  double mu = 0.0;
  for (double v : m) mu += v;
  mu /= m.size();
  double ss = 0.0;
  for (double v : m) ss += (v - mu) * (v - mu);
  return std::sqrt(ss / (m.size() - 1) / m.size());
}

double SimStats::success_throughput(double T) const {
  return total_time > 0.0 ? success_slots * T / total_time : 0.0;
}

void SimStats::merge(const SimStats& o) {
  epochs += o.epochs;
  idle.merge(o.idle);
  transmit.merge(o.transmit);
  queue.merge(o.queue);
  cycle.merge(o.cycle);
  busy.merge(o.busy);
  virtual_wait.merge(o.virtual_wait);
  arrival_wait.merge(o.arrival_wait);
  for (std::size_t i = 0; i < laplace.size() && i < o.laplace.size(); ++i) laplace[i].merge(o.laplace[i]);
  full_slots += o.full_slots;
  mini_slots += o.mini_slots;
  success_slots += o.success_slots;
  collision_slots += o.collision_slots;
  total_time += o.total_time;
  if (histogram.size() == o.histogram.size())
    for (std::size_t i = 0; i < histogram.size(); ++i) histogram[i] += o.histogram[i];
  hist_samples += o.hist_samples;
  drift_warning = drift_warning || o.drift_warning;
  warnings.insert(warnings.end(), o.warnings.begin(), o.warnings.end());
}

void SimStats::write_csv(std::ostream& os) const {
  os << "# bcastq " << kVersion << " simulate\n";
  os << "# mode = " << to_string(mode) << "\n";
  os << "# seed = " << seed << "\n";
  os << "# r = " << format_double(r) << "\n";
  os << "# stations = " << stations << "\n";
  os << "# epochs = " << epochs << "\n";
  for (const auto& w : warnings) os << "# warning: " << w << "\n";
  os << "metric,mean,stderr,count\n";
  const auto row = [&os](const std::string& name, const BatchAccumulator& a) {
    os << name << ',' << format_double(a.mean()) << ',' << format_double(a.se()) << ',' << a.count()
       << '\n';
  };
  row("idle_fraction", idle);
  row("transmit_fraction", transmit);
  row("mean_queue", queue);
  row("mean_cycle", cycle);
  row("busy_fraction", busy);
  row("mean_wait", virtual_wait);
  row("mean_arrival_wait", arrival_wait);
  for (std::size_t i = 0; i < laplace.size(); ++i)
    row("laplace_wait(" + format_double(laplace_s[i]) + ")", laplace[i]);
  os << "full_slots," << full_slots << ",,\n";
  os << "mini_slots," << mini_slots << ",,\n";
  os << "success_slots," << success_slots << ",,\n";
  os << "collision_slots," << collision_slots << ",,\n";
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

namespace {

SimStats make_stats(ChannelMode mode, const SystemParams& p, std::uint64_t seed, const SimOptions& o) {
  if (o.epochs < 1 || o.warmup < 0 || o.batches < 2) throw InvalidParameter("bad simulation options");
  if (o.hist_stride < 1 || o.hist_n_max < 1) throw InvalidParameter("bad histogram options");
  SimStats st;
  st.mode = mode;
  st.seed = seed;
  st.epochs = o.epochs;
  for (auto* acc : {&st.idle, &st.transmit, &st.queue, &st.cycle, &st.busy, &st.virtual_wait,
                    &st.arrival_wait})
    *acc = BatchAccumulator(o.batches);
  st.laplace_s = o.laplace_s;
  st.laplace.assign(o.laplace_s.size(), BatchAccumulator(o.batches));
  st.hist_W = p.W;
  st.hist_n_max = o.hist_n_max;
  st.histogram.assign(static_cast<std::size_t>(p.W + 1) * (o.hist_n_max + 1), 0);
  return st;
}

void record_histogram(SimStats& st, const StationState& s) {
  const auto n = std::min<std::int64_t>(s.N, st.hist_n_max);
  ++st.histogram[static_cast<std::size_t>(s.K) * (st.hist_n_max + 1) + static_cast<std::size_t>(n)];
  ++st.hist_samples;
}

void finish(SimStats& st) {
  if (queue_drifts(st.queue)) {
    st.drift_warning = true;
    st.warnings.push_back("queue length trends upward across batches; parameters may be non-ergodic");
  }
}

}  // namespace

SimStats run_station(ChannelMode mode, const SystemParams& p, BusyProb r_, std::uint64_t seed,
                     const SimOptions& o) {
  require_model_params(p);
  const double r = r_.value();
  if (r >= 1.0) throw InvalidParameter("run_station needs r < 1");
  SimStats st = make_stats(mode, p, seed, o);
  st.r = r;

  auto slot_rng = substream(seed, kSlot);
  auto arr_rng = substream(seed, kArrival);
  auto bo_rng = substream(seed, kBackoff);
  auto aux_rng = substream(seed, kAux);
  auto stamp_rng = substream(seed, kStamp);
  std::bernoulli_distribution busy_d(r);
  std::uniform_int_distribution<int> redraw(0, p.W);
  std::geometric_distribution<int> full_run(1.0 - r);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ArrivalSource arrivals(p);

  // tagged virtual arrivals: done once `departures` reaches `target`
  struct Tag {
    std::int64_t target;
    double start;
  };
  std::deque<Tag> tags;
  std::deque<double> fifo;  // arrival times of queued packets
  std::vector<double> stamps;
  std::int64_t departures = 0;

  const auto fresh_backoff = [&]() {
    double t = 0.0;
    for (int u = redraw(aux_rng); u > 0; --u) t += p.sigma + p.T * full_run(aux_rng);
    return t;
  };
  const auto record_wait = [&](int batch, double w) {
    st.virtual_wait.add(batch, w);
    for (std::size_t i = 0; i < st.laplace_s.size(); ++i)
      st.laplace[i].add(batch, std::exp(-st.laplace_s[i] * w));
  };

  const std::int64_t batch_len = (o.epochs + o.batches - 1) / o.batches;
  const std::int64_t total = o.warmup + o.epochs;
  StationState s;
  for (std::int64_t e = 0; e < total; ++e) {
    const bool measuring = e >= o.warmup;
    const int b = measuring ? static_cast<int>((e - o.warmup) / batch_len) : 0;
    if (measuring) {
      st.idle.add(b, s.K == 0 && s.N == 0 ? 1.0 : 0.0);
      st.transmit.add(b, s.K == 0 && s.N > 0 ? 1.0 : 0.0);
      st.queue.add(b, static_cast<double>(s.N));
      if ((e - o.warmup) % o.hist_stride == 0) record_histogram(st, s);
      if (o.track_waits) {
        if (s.N == 0) record_wait(b, 0.0);
        else tags.push_back({departures + s.N, s.clock});
      }
    }

    const bool busy = busy_d(slot_rng);
    const double len = slot_length(mode, s, busy, p);
    const std::int64_t a = arrivals.draw(len, arr_rng);
    const int u = redraw(bo_rng);
    const bool sends = s.K == 0 && s.N > 0 && (mode == ChannelMode::Greedy || busy);

    if (o.track_waits) {
      if (sends) {
        if (measuring) st.arrival_wait.add(b, s.clock - fifo.front());
        fifo.pop_front();
      }
      stamps.resize(static_cast<std::size_t>(a));
      for (auto& t : stamps) t = s.clock + len * unit(stamp_rng);
      std::sort(stamps.begin(), stamps.end());
      fifo.insert(fifo.end(), stamps.begin(), stamps.end());
    }

    const StationState next = step(mode, s, busy, a, u, p);
    check_invariant(next);
    if (measuring) {
      st.cycle.add(b, len);
      const bool full = len == p.T;
      st.busy.add(b, full ? 1.0 : 0.0);
      (full ? st.full_slots : st.mini_slots) += 1;
      if (sends) ++st.success_slots;
      st.total_time += len;
    }
    if (sends) {
      ++departures;
      while (!tags.empty() && tags.front().target == departures) {
        record_wait(b, next.clock - tags.front().start + fresh_backoff());
        tags.pop_front();
      }
    }
    if (o.trace)
      *o.trace << e << ',' << (len == p.T ? 'T' : 's') << ',' << s.K << ',' << s.N << '\n';
    s = next;
  }
  finish(st);
  return st;
}

SimStats run_network(ChannelMode mode, const SystemParams& p, int stations, std::uint64_t seed,
                     const SimOptions& o) {
  require_model_params(p);
  if (stations < 1) throw InvalidParameter("run_network needs at least one station");
  if (o.residual_busy < 0.0 || o.residual_busy > 1.0)
    throw InvalidParameter("residual busy probability must lie in [0, 1]");
  SimStats st = make_stats(mode, p, seed, o);
  st.stations = stations;
  st.r = o.residual_busy;

  auto slot_rng = substream(seed, kSlot);
  auto arr_rng = substream(seed, kArrival);
  auto bo_rng = substream(seed, kBackoff);
  std::bernoulli_distribution residual(o.residual_busy);
  std::uniform_int_distribution<int> redraw(0, p.W);
  ArrivalSource arrivals(p);

  std::vector<StationState> s(static_cast<std::size_t>(stations));
  const std::int64_t batch_len = (o.epochs + o.batches - 1) / o.batches;
  const std::int64_t total = o.warmup + o.epochs;
  for (std::int64_t e = 0; e < total; ++e) {
    const bool measuring = e >= o.warmup;
    const int b = measuring ? static_cast<int>((e - o.warmup) / batch_len) : 0;
    int ready = 0;
    for (const auto& x : s) ready += x.K == 0 && x.N > 0;
    const bool extra = residual(slot_rng);
    const bool full = mode == ChannelMode::Greedy ? (ready >= 1 || extra) : (ready >= 2 || extra);
    const double len = full ? p.T : p.sigma;
    const int senders = mode == ChannelMode::Greedy || full ? ready : 0;

    if (measuring) {
      for (const auto& x : s) {
        st.idle.add(b, x.K == 0 && x.N == 0 ? 1.0 : 0.0);
        st.transmit.add(b, x.K == 0 && x.N > 0 ? 1.0 : 0.0);
        st.queue.add(b, static_cast<double>(x.N));
      }
      if ((e - o.warmup) % o.hist_stride == 0) record_histogram(st, s[0]);
      st.cycle.add(b, len);
      st.busy.add(b, full ? 1.0 : 0.0);
      (full ? st.full_slots : st.mini_slots) += 1;
      if (senders == 1) ++st.success_slots;
      if (senders >= 2) ++st.collision_slots;
      st.total_time += len;
    }
    if (o.trace) *o.trace << e << ',' << (full ? 'T' : 's');
    for (auto& x : s) {
      const std::int64_t a = arrivals.draw(len, arr_rng);
      const int u = redraw(bo_rng);
      if (o.trace) *o.trace << ',' << x.K << ',' << x.N;
      x = step(mode, x, full, a, u, p);
      check_invariant(x);
    }
    if (o.trace) *o.trace << '\n';
  }
  finish(st);
  return st;
}

}  // namespace bcastq
