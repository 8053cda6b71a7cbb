#include "bcastq/validation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "bcastq/chain_oracle.hpp"
#include "bcastq/errors.hpp"
#include "bcastq/fair.hpp"
#include "bcastq/greedy.hpp"
#include "bcastq/network.hpp"
#include "bcastq/simulator.hpp"
#include "bcastq/waiting_time.hpp"

namespace bcastq {

ValidationLevel parse_level(std::string_view text) {
  if (text == "fast") return ValidationLevel::Fast;
  if (text == "full") return ValidationLevel::Full;
  throw InvalidParameter("validation level must be fast or full");
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

void ValidationReport::print(std::ostream& os) const {
  for (const auto& c : checks) {
    os << (c.pass ? "PASS " : "FAIL ") << std::left << std::setw(28) << c.id
       << " measured=" << std::setprecision(3) << std::scientific << c.measured
       << " tol=" << c.tolerance << std::defaultfloat;
    if (!c.note.empty()) os << "  " << c.note;
    os << '\n';
  }
  const auto failed = std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.pass; });
  os << checks.size() - failed << '/' << checks.size() << " checks passed\n";
}

namespace {

const SystemParams kGreedySet{0.05, 1.0, 0.05, 4, std::nullopt};
constexpr double kGreedyR = 0.3;
const SystemParams kFairSet{0.04, 1.0, 0.05, 4, std::nullopt};
constexpr double kFairR = 0.4;

class Collector {
 public:
  Collector(ValidationReport& report, std::ostream* progress) : report_(report), progress_(progress) {}

  void add(std::string id, double measured, double tol, std::string note = {}) {
    CheckResult c{std::move(id), std::isfinite(measured) && measured <= tol, measured, tol, std::move(note)};
    if (progress_) *progress_ << (c.pass ? "  ok   " : "  FAIL ") << c.id << '\n';
    report_.checks.push_back(std::move(c));
  }

  // Runs `body`; an exception becomes a failed check under `id`.
  void guard(const std::string& id, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(id, INFINITY, 0.0, std::string("threw: ") + e.what());
    }
  }

 private:
  ValidationReport& report_;
  std::ostream* progress_;
};

double z_score(const BatchAccumulator& acc, double target) {
  const double se = acc.se();
  if (se == 0.0) return std::abs(acc.mean() - target) == 0.0 ? 0.0 : INFINITY;
  return std::abs(acc.mean() - target) / se;
}

std::vector<double> sample_points(int count) {
  std::vector<double> xs;
  for (int i = 1; i <= count; ++i) xs.push_back(0.02 + 0.96 * i / (count + 1));
  return xs;
}

void analytic_checks(Collector& out) {
  const GreedyStation g(kGreedySet, BusyProb(kGreedyR));
  const FairStation f(kFairSet, BusyProb(kFairR));

  out.guard("gf.shared-kernel", [&] {
    const GreedyStation g2(kFairSet, BusyProb(kFairR));
    double diff = 0.0;
    for (double x : sample_points(10)) {
      diff = std::max(diff, std::abs(g2.kernel().a(x) - f.kernel().a(x)));
      diff = std::max(diff, std::abs(g2.kernel().b(x) - f.kernel().b(x)));
      diff = std::max(diff, std::abs(g2.kernel().u(x) - f.kernel().u(x)));
    }
    out.add("gf.shared-kernel", diff, 0.0);
  });

  out.guard("greedy.oracle", [&] {
    const auto analytic = g.stationary_table(60);
    const auto chain = solve_stationary(TruncatedChain::build(ChannelMode::Greedy, kGreedySet, BusyProb(kGreedyR), 60));
    double d = analytic.max_abs_diff(chain.table);
    d = std::max(d, std::abs(g.p00() - chain.table.at(0, 0)));
    d = std::max(d, std::abs(g.tau() - chain.table.transmit_mass()));
    out.add("greedy.oracle", d, 1e-8, "table, p00, tau vs truncated chain");
  });
  out.guard("greedy.p00-routes", [&] {
    double d = std::abs(g.p00() - g.p00_by_normalization());
    d = std::max(d, std::abs(g.tau() - g.tau_from_F0()));
    d = std::max(d, std::abs(g.tau() - g.tau_from_derivatives()));
    out.add("greedy.p00-routes", d, 1e-10);
  });
  out.guard("greedy.gf-residual", [&] {
    double d = 0.0;
    for (double x : sample_points(20)) d = std::max({d, g.system_residual(x), g.summed_balance_residual(x)});
    out.add("greedy.gf-residual", d, 1e-10, "20 points in (0,1)");
  });

  out.guard("fair.oracle", [&] {
    const auto analytic = f.stationary_table(60);
    const auto chain = solve_stationary(TruncatedChain::build(ChannelMode::Fair, kFairSet, BusyProb(kFairR), 60));
    double d = analytic.max_abs_diff(chain.table);
    d = std::max(d, std::abs(f.q00() - chain.table.at(0, 0)));
    d = std::max(d, std::abs(f.taubar() - chain.table.transmit_mass()));
    out.add("fair.oracle", d, 1e-8, "table, q00, taubar vs truncated chain");
  });
  out.guard("fair.q00-routes", [&] {
    double d = std::abs(f.q00() - f.q00_by_derivative());
    d = std::max(d, std::abs(f.q00() - f.q00_by_normalization()));
    d = std::max(d, std::abs(f.taubar() - f.taubar_from_G0()));
    out.add("fair.q00-routes", d, 1e-10);
  });
  out.guard("fair.gf-residual", [&] {
    double d = 0.0;
    for (double x : sample_points(20)) d = std::max({d, f.system_residual(x), f.summed_balance_residual(x)});
    out.add("fair.gf-residual", d, 1e-10, "20 points in (0,1)");
  });

  out.guard("ergodicity.routes", [&] {
    std::mt19937_64 gen(12345);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int mismatches = 0, tested = 0;
    for (int i = 0; i < 1000; ++i) {
      SystemParams p;
      p.T = 0.5 + U(gen);
      p.sigma = 0.01 + 0.2 * U(gen);
      p.W = 1 + static_cast<int>(63 * U(gen));
      p.lambda = 0.3 * U(gen);
      const double r = 0.95 * U(gen);
      const GreedyStation gs(p, BusyProb(r));
      if (std::abs(p.lambda * gs.B() - 1.0) > 1e-9) {
        ++tested;
        mismatches += gs.is_ergodic() != gs.ergodic_by_threshold();
        if (i % 10 == 0) mismatches += gs.is_ergodic() != gs.ergodic_by_root_scan();
      }
      if (r > 0.0) {
        const FairStation fs(p, BusyProb(r));
        if (std::abs(fs.Rbar1()) > 1e-12) mismatches += fs.is_ergodic() != fs.ergodic_by_threshold();
      }
    }
    out.add("ergodicity.routes", mismatches, 0.0, std::to_string(tested) + " greedy tuples");
  });

  out.guard("limits.lambda-zero", [&] {
    SystemParams p = kGreedySet;
    p.lambda = 1e-12;
    const double d = std::max(std::abs(GreedyStation(p, BusyProb(0.3)).p00() - 1.0),
                              std::abs(FairStation(p, BusyProb(0.3)).q00() - 1.0));
    out.add("limits.lambda-zero", d, 1e-9);
  });
  out.guard("limits.r-zero-threshold", [&] {
    const GreedyStation gs(kGreedySet, BusyProb(0.0));
    const double closed = 1.0 / (kGreedySet.T + kGreedySet.W * kGreedySet.sigma / 2.0);
    out.add("limits.r-zero-threshold", std::abs(gs.lambda_threshold() - closed) / closed, 1e-12);
  });
}

void chain_checks(Collector& out) {
  out.guard("chain.row-sums", [&] {
    double d = 0.0;
    for (auto mode : {ChannelMode::Greedy, ChannelMode::Fair}) {
      const auto c = TruncatedChain::build(mode, kGreedySet, BusyProb(kGreedyR), 60);
      for (double s : c.row_sums()) d = std::max(d, std::abs(s - 1.0));
    }
    out.add("chain.row-sums", d, 1e-15);
  });
  for (auto mode : {ChannelMode::Greedy, ChannelMode::Fair}) {
    const auto& p = mode == ChannelMode::Greedy ? kGreedySet : kFairSet;
    const BusyProb r(mode == ChannelMode::Greedy ? kGreedyR : kFairR);
    const std::string tag = std::string(to_string(mode));
    out.guard("chain.balance." + tag, [&] {
      const auto sol = solve_stationary(TruncatedChain::build(mode, p, r, 60));
      out.add("chain.balance." + tag, balance_residual(sol.table, mode, p, r), 1e-13);
      out.add("chain.boundary." + tag, boundary_residual(sol.table, mode, p, r), 1e-13);
      out.add("chain.unreachable." + tag, unreachable_mass(sol.table), 1e-15);
      out.add("chain.leak." + tag, sol.table.leak, 1e-9);
    });
    out.guard("chain.truncation." + tag, [&] {
      const auto a = solve_stationary_auto(mode, p, r, 60, 1e-10);
      out.add("chain.truncation." + tag, a.p00_change, 1e-10, "n_max " + std::to_string(a.n_max));
    });
  }
}

void network_checks(Collector& out) {
  out.guard("network.roots", [&] {
    double resid = 0.0;
    int bad_scans = 0;
    SystemParams p = kGreedySet;
    for (int M = 0; M <= 100; M += 5) {
      const double z = solve_z(p, M);
      resid = std::max(resid, std::abs(fixed_point_polynomial(p, M, z)));
      bad_scans += count_fixed_point_sign_changes(p, M) != 1;
      for (int W : {1, 7, 31, 255, 1024}) {
        const long double u = solve_u_extended(W, M);
        resid = std::max(resid, static_cast<double>(std::abs(2.0L * std::pow(u, static_cast<long double>(M + 1)) -
                                                             W * (1.0L - u))));
        bad_scans += count_window_sign_changes(W, M) != 1;
      }
    }
    out.add("network.root-residual", resid, 1e-12);
    out.add("network.root-uniqueness", bad_scans, 0.0);
  });
  out.guard("network.factorization", [&] {
    std::mt19937_64 gen(777);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double d = 0.0;
    for (int i = 0; i < 200; ++i) {
      SystemParams p;
      p.T = 0.5 + U(gen);
      p.sigma = 0.01 + 0.2 * U(gen);
      p.W = 1 + static_cast<int>(63 * U(gen));
      // load drawn around the stability boundary so z^M stays representable
      const int M = static_cast<int>(50 * U(gen));
      p.lambda = std::min(lambda_max_greedy(p, M) * (0.1 + 1.8 * U(gen)), 0.999 / p.T);
      const double z = solve_z(p, M);
      const double r = 1.0 - std::pow(z, M);
      const GreedyStation gs(p, BusyProb(r));
      const double one_minus_lb = 1.0 - p.lambda * gs.B();
      // relative once |1 - lambda B| > 1; handing r rather than z^M to the station costs eps/(1-r)
      const double cond = 1e-10 + 64 * std::numeric_limits<double>::epsilon() / (1.0 - r);
      const double dev = std::abs(greedy_ergodicity_factor(p, M, z) - one_minus_lb) /
                         std::max(1.0, std::abs(one_minus_lb));
      d = std::max(d, dev / cond);
      consistency_tau_r(p, M, z);  // throws on mismatch
    }
    out.add("network.factorization", d, 1.0, "deviation over conditioning-aware tolerance, incl. 1-(1-tau)^M = r");
  });
  out.guard("network.lambda-max", [&] {
    double forms = 0.0;
    int order = 0;
    bool over_one = false;
    SystemParams p{0.05, 1.0, 0.05, 31, std::nullopt};
    for (int M = 1; M <= 100; ++M) {
      const auto g = lambda_max_greedy_forms(p, M);
      const auto f = lambda_max_fair_forms(p, M);
      forms = std::max({forms, g.rel_diff(), f.rel_diff()});
      order += !(f.first < g.first);
      over_one = over_one || (M + 1) * g.first > 1.0;
    }
    out.add("network.lmax-forms", forms, 1e-12);
    out.add("network.fair-below-greedy", order, 0.0);
    out.add("network.offered-load-above-one", over_one ? 0.0 : 1.0, 0.0);
  });
  out.guard("network.fair-fixed-point", [&] {
    SystemParams p{0.0, 1.0, 0.05, 31, std::nullopt};
    const double lmax = lambda_max_fair(p, 10);
    int multi = 0, verdicts = 0;
    for (int i = 1; i <= 100; ++i) {
      p.lambda = 1.2 * lmax * i / 100.0;
      const auto op = fair_fixed_point(p, 10);
      multi += op.multiplicity != 1;
      if (std::abs(p.lambda / lmax - 1.0) > 1e-6) verdicts += op.ergodic != (p.lambda < lmax);
    }
    out.add("network.fair-multiplicity", multi, 0.0, "100-point lambda grid, M = 10");
    out.add("network.fair-ergodic-vs-lmax", verdicts, 0.0);
  });
}

void wait_checks(Collector& out) {
  const GreedyStation g(kGreedySet, BusyProb(kGreedyR));
  const WaitTransform w(g);
  out.add("wait.psi-zero", std::abs(w.psi_star(0.0) - 1.0), 0.0);
  out.guard("wait.table-sum", [&] {
    const auto table = solve_stationary(TruncatedChain::build(ChannelMode::Greedy, kGreedySet, BusyProb(kGreedyR), 120)).table;
    double d = 0.0;
    for (int i = 1; i <= 10; ++i) {
      const double s = 0.2 * i;
      const double fs = w.f(s), vs = w.v(s);
      double sum = 0.0;
      for (int k = 0; k <= table.W; ++k)
        for (int n = 0; n <= table.n_max; ++n) sum += table.at(k, n) * std::pow(fs, k) * std::pow(vs, n);
      d = std::max(d, std::abs(sum - w.psi_star(s)));
    }
    out.add("wait.table-sum", d, 1e-9);
  });
  out.guard("wait.monotone", [&] {
    int bad = 0;
    double prev = 1.0;
    for (double s = 1e-3; s < 100.0; s *= 1.5) {
      const double cur = w.psi_star(s);
      bad += cur > prev + 1e-15 || cur > 1.0;
      prev = cur;
    }
    out.add("wait.monotone", bad, 0.0);
  });
  out.guard("wait.mean-nonnegative", [&] {
    int bad = 0;
    for (int i = 0; i < 200; ++i) {
      SystemParams p = kGreedySet;
      const double r = 0.05 + 0.9 * (i % 20) / 20.0;
      p.lambda = (0.05 + 0.9 * (i / 20) / 10.0) * GreedyStation(p, BusyProb(r)).lambda_threshold();
      bad += !(WaitTransform(GreedyStation(p, BusyProb(r))).mean_wait() >= 0.0);
    }
    out.add("wait.mean-nonnegative", bad, 0.0, "200-point ergodic grid");
  });
}

void simulation_checks(Collector& out, ValidationLevel level, std::uint64_t seed) {
  SimOptions o;
  o.epochs = level == ValidationLevel::Full ? 10'000'000 : 1'000'000;

  out.guard("sim.greedy", [&] {
    const GreedyStation g(kGreedySet, BusyProb(kGreedyR));
    const WaitTransform w(g);
    const auto table = solve_stationary(TruncatedChain::build(ChannelMode::Greedy, kGreedySet, BusyProb(kGreedyR), 120)).table;
    const auto st = run_station(ChannelMode::Greedy, kGreedySet, BusyProb(kGreedyR), seed, o);
    out.add("sim.greedy.tau", z_score(st.transmit, g.tau()), 3.0, "z-score");
    out.add("sim.greedy.p00", z_score(st.idle, g.p00()), 3.0, "z-score");
    out.add("sim.greedy.queue", z_score(st.queue, table.mean_queue()), 3.0, "z-score");
    out.add("sim.greedy.cycle", z_score(st.cycle, w.mean_cycle_length()), 3.0, "z-score");
    out.add("sim.greedy.mean-wait", z_score(st.virtual_wait, w.mean_wait()), 3.0, "z-score");
    for (std::size_t i = 0; i < st.laplace_s.size(); ++i)
      out.add("sim.greedy.laplace(" + format_double(st.laplace_s[i]) + ")",
              z_score(st.laplace[i], w.psi_star(st.laplace_s[i])), 3.0, "z-score");
    out.add("sim.greedy.drift", st.drift_warning ? 1.0 : 0.0, 0.0);
  });
  out.guard("sim.fair", [&] {
    const FairStation f(kFairSet, BusyProb(kFairR));
    const auto table = solve_stationary(TruncatedChain::build(ChannelMode::Fair, kFairSet, BusyProb(kFairR), 120)).table;
    const auto st = run_station(ChannelMode::Fair, kFairSet, BusyProb(kFairR), seed, o);
    out.add("sim.fair.taubar", z_score(st.transmit, f.taubar()), 3.0, "z-score");
    out.add("sim.fair.q00", z_score(st.idle, f.q00()), 3.0, "z-score");
    out.add("sim.fair.queue", z_score(st.queue, table.mean_queue()), 3.0, "z-score");
    out.add("sim.fair.cycle", z_score(st.cycle, f.mean_slot_length()), 3.0, "z-score");
  });
  out.guard("sim.determinism", [&] {
    SimOptions small;
    small.epochs = 200'000;
    small.warmup = 10'000;
    const auto a = run_station(ChannelMode::Greedy, kGreedySet, BusyProb(kGreedyR), seed, small);
    const auto b = run_station(ChannelMode::Greedy, kGreedySet, BusyProb(kGreedyR), seed, small);
    out.add("sim.determinism", a == b ? 0.0 : 1.0, 0.0);
  });
  if (level == ValidationLevel::Full) {
    out.guard("sim.network.mean-field", [&] {
      SystemParams p{0.005, 1.0, 0.05, 31, std::nullopt};
      const int M = 10;
      const auto op = greedy_operating_point(p, M);
      SimOptions no;
      no.epochs = 2'000'000;
      no.track_waits = false;
      const auto st = run_network(ChannelMode::Greedy, p, M + 1, seed, no);
      const double rel = std::abs(st.transmit.mean() - op.tau) / op.tau;
      std::ostringstream note;
      note << "diagnostic: sim tau " << st.transmit.mean() << " vs fixed point " << op.tau << ", S sim "
           << st.success_throughput(p.T);
      out.add("sim.network.mean-field", 0.0, 0.0, note.str() + " (rel dev " + format_double(rel) + ")");
    });
  }
}

}  // namespace

ValidationReport run_validation(ValidationLevel level, std::uint64_t seed, std::ostream* progress) {
  ValidationReport report;
  Collector out(report, progress);
  analytic_checks(out);
  chain_checks(out);
  network_checks(out);
  wait_checks(out);
  simulation_checks(out, level, seed);
  return report;
}

}  // namespace bcastq
