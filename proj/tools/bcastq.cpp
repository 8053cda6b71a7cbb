// Command-line front end: parameter sweeps, waiting time, simulation, validation.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bcastq/chain_oracle.hpp"
#include "bcastq/errors.hpp"
#include "bcastq/experiments.hpp"
#include "bcastq/fair.hpp"
#include "bcastq/greedy.hpp"
#include "bcastq/network.hpp"
#include "bcastq/simulator.hpp"
#include "bcastq/validation.hpp"
#include "bcastq/waiting_time.hpp"

namespace {

using namespace bcastq;

constexpr int kOk = 0;
constexpr int kValidationFailed = 2;
constexpr int kNonErgodic = 3;
constexpr int kBadInput = 4;
constexpr int kInternal = 1;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::string> mode;
  std::string convention = "peers";
  std::optional<double> lambda, T, sigma, r;
  std::optional<int> W;
};

struct Range {
  std::optional<double> from, to, step;
};

RunConfig resolve(const Globals& g, const RunConfig& defaults) {
  RunConfig c = defaults;
  if (!g.config.empty()) c = load_config(g.config, c);
  if (g.seed) c.seed = *g.seed;
  if (g.mode) c.mode = parse_mode(*g.mode);
  if (g.lambda) c.params.lambda = *g.lambda;
  if (g.T) c.params.T = *g.T;
  if (g.sigma) c.params.sigma = *g.sigma;
  if (g.W) c.params.W = *g.W;
  if (g.r) c.r = *g.r;
  require_model_params(c.params);
  return c;
}

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(g.out, std::ios::binary);
  if (!os) throw InvalidParameter("cannot write '" + g.out + "'");
  os << text;
}

SweepSpec sweep_spec(const Globals& g, const RunConfig& c, const Range& range, double from, double to) {
  SweepSpec s;
  s.params = c.params;
  s.params.M.reset();
  s.mode = c.mode;
  s.seed = c.seed;
  s.convention = parse_convention(g.convention);
  s.from = range.from.value_or(from);
  s.to = range.to.value_or(to);
  s.step = range.step.value_or(1.0);
  return s;
}

void add_range(CLI::App* cmd, Range& range) {
  cmd->add_option("--from", range.from, "First sweep value");
  cmd->add_option("--to", range.to, "Last sweep value");
  cmd->add_option("--step", range.step, "Sweep step");
}

void write_gnuplot(const std::string& path, const Globals& g, std::string_view title, int column,
                   std::string_view ylabel) {
  if (path.empty()) return;
  std::ofstream os(path);
  if (!os) throw InvalidParameter("cannot write '" + path + "'");
  os << gnuplot_script(g.out.empty() ? "data.csv" : g.out, title, column, ylabel);
}

double require_r(const RunConfig& c) {
  if (!c.r) throw InvalidParameter("this command needs a busy probability (--r or r = ... in the config)");
  return *c.r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Back-off broadcast queue: analytic model, chain oracle and simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Globals g;
  app.add_option("--config", g.config, "Config file (key = value lines)");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--out", g.out, "Output file (default stdout)");
  app.add_option("--mode", g.mode, "greedy or fair");
  app.add_option("--convention", g.convention, "Sweep value counts peers (M) or stations (M + 1)")
      ->check(CLI::IsMember({"peers", "stations"}));
  app.add_option("--lambda", g.lambda, "Arrival rate");
  app.add_option("--T", g.T, "Full slot length");
  app.add_option("--sigma", g.sigma, "Mini-slot length");
  app.add_option("--W", g.W, "Back-off window");
  app.add_option("--r", g.r, "Busy probability");

  std::string gnuplot;

  Range tau_range;
  auto* tau_cmd = app.add_subcommand("tau-vs-m", "Greedy fixed point tau over M");
  add_range(tau_cmd, tau_range);
  tau_cmd->add_option("--gnuplot", gnuplot, "Also write a gnuplot script");

  Range lmax_range;
  auto* lmax_cmd = app.add_subcommand("lambda-max", "Greedy maximum throughput over M");
  add_range(lmax_cmd, lmax_range);
  lmax_cmd->add_option("--gnuplot", gnuplot, "Also write a gnuplot script");

  Range w_range;
  int w_lo = 1, w_hi = 4096;
  auto* w_cmd = app.add_subcommand("optimal-w", "Throughput-optimal window over M");
  add_range(w_cmd, w_range);
  w_cmd->add_option("--w-min", w_lo, "Smallest W searched");
  w_cmd->add_option("--w-max", w_hi, "Largest W searched");
  w_cmd->add_option("--gnuplot", gnuplot, "Also write a gnuplot script");

  Range fvg_range;
  auto* fvg_cmd = app.add_subcommand("fair-vs-greedy", "Maximum throughput, fair vs greedy, over M");
  add_range(fvg_cmd, fvg_range);
  fvg_cmd->add_option("--gnuplot", gnuplot, "Also write a gnuplot script");

  Range stab_range;
  std::string stab_var = "lambda";
  auto* stab_cmd = app.add_subcommand("stability", "Single-station stability table over lambda, r or W");
  add_range(stab_cmd, stab_range);
  stab_cmd->add_option("--var", stab_var, "Swept variable")->check(CLI::IsMember({"lambda", "r", "W"}));

  std::vector<double> wait_s{0.1, 0.5, 1.0};
  std::vector<double> wait_t;
  auto* wait_cmd = app.add_subcommand("wait", "Virtual waiting time of a greedy station");
  wait_cmd->add_option("--s", wait_s, "Transform arguments");
  wait_cmd->add_option("--cdf", wait_t, "Times at which to invert for P(wait <= t)");

  std::string table_source = "analytic";
  auto* table_cmd = app.add_subcommand("table", "Stationary p(k, n) table as CSV");
  table_cmd->add_option("--source", table_source, "analytic or chain")
      ->check(CLI::IsMember({"analytic", "chain"}));

  SimOptions sim;
  std::optional<std::int64_t> epochs;
  int network = 0;
  std::string trace_path;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo run (single station or network)");
  sim_cmd->add_option("--epochs", epochs, "Measured epochs");
  sim_cmd->add_option("--warmup", sim.warmup, "Discarded epochs");
  sim_cmd->add_option("--batches", sim.batches, "Batches for standard errors");
  sim_cmd->add_option("--network", network, "Number of coupled stations (0: single station)");
  sim_cmd->add_option("--residual-busy", sim.residual_busy, "Network runs: exogenous full-slot probability");
  sim_cmd->add_option("--trace", trace_path, "Per-epoch trace file (debugging)");

  std::string level = "fast";
  auto* val_cmd = app.add_subcommand("validate", "Run the cross-check suite");
  val_cmd->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*tau_cmd) {
      const auto c = resolve(g, {});
      const auto spec = sweep_spec(g, c, tau_range, 1, 100);
      emit(g, cmd_tau_vs_m(spec));
      write_gnuplot(gnuplot, g, "tau vs M", 4, "tau");
    } else if (*lmax_cmd) {
      const auto c = resolve(g, {});
      emit(g, cmd_lambda_max(sweep_spec(g, c, lmax_range, 1, 100)));
      write_gnuplot(gnuplot, g, "maximum throughput vs M", 3, "lambda_max");
    } else if (*w_cmd) {
      const auto c = resolve(g, {});
      emit(g, cmd_optimal_w(sweep_spec(g, c, w_range, 1, 100), w_lo, w_hi));
      write_gnuplot(gnuplot, g, "optimal W vs M", 2, "W_opt");
    } else if (*fvg_cmd) {
      RunConfig defaults;
      defaults.params.lambda = 0.01;
      const auto c = resolve(g, defaults);
      emit(g, cmd_fair_vs_greedy(sweep_spec(g, c, fvg_range, 1, 100)));
      write_gnuplot(gnuplot, g, "fair vs greedy maximum throughput", 5, "ratio");
    } else if (*stab_cmd) {
      RunConfig defaults;
      defaults.r = 0.3;
      const auto c = resolve(g, defaults);
      auto spec = sweep_spec(g, c, stab_range, 0.0, 0.2);
      spec.variable = parse_sweep_variable(stab_var);
      if (!stab_range.step) spec.step = spec.variable == SweepVariable::W ? 1.0 : 0.01;
      if (spec.variable == SweepVariable::R && !stab_range.to) spec.to = 0.9;
      if (spec.variable == SweepVariable::W && !stab_range.from) spec.from = 1;
      if (spec.variable == SweepVariable::W && !stab_range.to) spec.to = 64;
      spec.r = require_r(c);
      emit(g, cmd_stability(spec));
    } else if (*wait_cmd) {
      const auto c = resolve(g, {});
      if (c.mode != ChannelMode::Greedy) throw InvalidParameter("wait is defined for greedy stations only");
      const GreedyStation station(c.params, BusyProb(require_r(c)));
      if (!station.is_ergodic()) throw NonErgodic("greedy station is not ergodic at these parameters");
      const WaitTransform w(station);
      std::ostringstream os;
      RunConfig shown = c;
      os << "# bcastq " << kVersion << " wait\n";
      std::istringstream cfg(format_config(shown));
      for (std::string line; std::getline(cfg, line);) os << "# " << line << '\n';
      os << "quantity,argument,value\n";
      os << "mean_wait,," << format_double(w.mean_wait()) << '\n';
      os << "mean_cycle,," << format_double(w.mean_cycle_length()) << '\n';
      for (double s : wait_s) os << "psi," << format_double(s) << ',' << format_double(w.psi_star(s)) << '\n';
      for (double t : wait_t) os << "cdf," << format_double(t) << ',' << format_double(w.cdf(t)) << '\n';
      emit(g, os.str());
    } else if (*table_cmd) {
      const auto c = resolve(g, {});
      const BusyProb r(require_r(c));
      StationaryTable table;
      if (table_source == "chain") {
        table = solve_stationary(TruncatedChain::build(c.mode, c.params, r, c.n_max)).table;
      } else if (c.mode == ChannelMode::Greedy) {
        table = GreedyStation(c.params, r).stationary_table(c.n_max);
      } else {
        table = FairStation(c.params, r).stationary_table(c.n_max);
      }
      std::ostringstream os;
      os << "# bcastq " << kVersion << " table (" << table_source << ")\n";
      std::istringstream cfg(format_config(c));
      for (std::string line; std::getline(cfg, line);) os << "# " << line << '\n';
      table.write_csv(os);
      emit(g, os.str());
    } else if (*sim_cmd) {
      const auto c = resolve(g, {});
      sim.epochs = epochs.value_or(c.slots);
      std::ofstream trace;
      if (!trace_path.empty()) {
        trace.open(trace_path);
        if (!trace) throw InvalidParameter("cannot write '" + trace_path + "'");
        sim.trace = &trace;
      }
      SimStats st;
      if (network > 0) {
        sim.track_waits = false;
        st = run_network(c.mode, c.params, network, c.seed, sim);
      } else {
        st = run_station(c.mode, c.params, BusyProb(require_r(c)), c.seed, sim);
      }
      std::ostringstream os;
      st.write_csv(os);
      if (network > 0) os << "success_throughput," << format_double(st.success_throughput(c.params.T)) << ",,\n";
      for (const auto& w : st.warnings) std::cerr << "warning: " << w << '\n';
      emit(g, os.str());
    } else if (*val_cmd) {
      const auto c = resolve(g, {});
      const auto report = run_validation(parse_level(level), c.seed, &std::cerr);
      std::ostringstream os;
      report.print(os);
      emit(g, os.str());
      return report.all_passed() ? kOk : kValidationFailed;
    }
  } catch (const NonErgodic& e) {
    std::cerr << "non-ergodic: " << e.what() << '\n';
    return kNonErgodic;
  } catch (const InvalidParameter& e) {
    std::cerr << "bad input: " << e.what() << '\n';
    return kBadInput;
  } catch (const DomainError& e) {
    std::cerr << "bad input: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
