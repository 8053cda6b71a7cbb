#include "bcastq/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <sstream>
#include <thread>

#include "bcastq/errors.hpp"
#include "bcastq/fair.hpp"
#include "bcastq/greedy.hpp"

namespace bcastq {

namespace {

// Fills out[i] = row(i) on a few threads; output order is the index order.
std::vector<std::string> parallel_rows(std::size_t n, const std::function<std::string(std::size_t)>& row) {
  std::vector<std::string> out(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) out[i] = row(i);
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t threads = std::min<std::size_t>(hw, n);
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  return out;
}

std::string fmt(double v) { return format_double(v); }

std::string clean(std::string msg) {
  std::replace(msg.begin(), msg.end(), ',', ';');
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  return msg;
}

std::string join(const std::vector<std::string>& rows) {
  std::string out;
  for (const auto& r : rows) out += r;
  return out;
}

int as_int(double v) { return static_cast<int>(std::lround(v)); }

const char* sweep_label(const SweepSpec& spec) {
  return spec.convention == StationCount::Peers ? "M" : "stations";
}

}  // namespace

std::string_view to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::M: return "M";
    case SweepVariable::W: return "W";
    case SweepVariable::Lambda: return "lambda";
    case SweepVariable::R: return "r";
  }
  return "?";
}

SweepVariable parse_sweep_variable(std::string_view text) {
  if (text == "M") return SweepVariable::M;
  if (text == "W") return SweepVariable::W;
  if (text == "lambda") return SweepVariable::Lambda;
  if (text == "r") return SweepVariable::R;
  throw InvalidParameter("unknown sweep variable '" + std::string(text) + "'");
}

void SweepSpec::check() const {
  if (!(step > 0.0) || !std::isfinite(from) || !std::isfinite(to) || from > to)
    throw InvalidParameter("sweep range is empty");
  if (variable == SweepVariable::M && params.M)
    throw InvalidParameter("M is swept, so it cannot also be fixed");
  if ((variable == SweepVariable::M || variable == SweepVariable::W) &&
      (from != std::floor(from) || step != std::floor(step)))
    throw InvalidParameter("integer sweeps need integer bounds and step");
  if (variable == SweepVariable::M && from < 0) throw InvalidParameter("M must be >= 0");
  if (variable == SweepVariable::W && from < 1) throw InvalidParameter("W must be >= 1");
  if (variable == SweepVariable::Lambda && from < 0) throw InvalidParameter("lambda must be >= 0");
  if (variable == SweepVariable::R && (from < 0 || to >= 1)) throw InvalidParameter("r must lie in [0, 1)");
}

std::vector<double> SweepSpec::values() const {
  check();
  std::vector<double> out;
  const double slack = 1e-9 * step;
  for (long i = 0;; ++i) {
    const double v = from + static_cast<double>(i) * step;
    if (v > to + slack) break;
    out.push_back(v);
  }
  return out;
}

std::string header_block(std::string_view command, const SweepSpec& spec,
                         const std::vector<std::string>& extra) {
  std::ostringstream os;
  os << "# bcastq " << kVersion << ' ' << command << '\n';
  os << "# lambda = " << fmt(spec.params.lambda) << '\n';
  os << "# T = " << fmt(spec.params.T) << '\n';
  os << "# sigma = " << fmt(spec.params.sigma) << '\n';
  os << "# W = " << spec.params.W << '\n';
  if (spec.params.M) os << "# M = " << *spec.params.M << '\n';
  os << "# mode = " << to_string(spec.mode) << '\n';
  os << "# seed = " << spec.seed << '\n';
  os << "# convention = " << to_string(spec.convention) << '\n';
  os << "# sweep = " << to_string(spec.variable) << ' ' << fmt(spec.from) << ' ' << fmt(spec.to)
     << ' ' << fmt(spec.step) << '\n';
  for (const auto& line : extra) os << "# " << line << '\n';
  return os.str();
}

std::string cmd_tau_vs_m(const SweepSpec& spec) {
  const auto values = spec.values();
  const auto rows = parallel_rows(values.size(), [&](std::size_t i) {
    const int sweep = as_int(values[i]);
    std::ostringstream os;
    os << sweep << ',';
    try {
      const int M = peers_from_sweep(sweep, spec.convention);
      const auto op = greedy_operating_point(spec.params, M);
      os << fmt(op.z) << ',' << fmt(op.r) << ',' << fmt(op.tau) << ',' << (op.ergodic ? 1 : 0)
         << ",ok\n";
    } catch (const std::exception& e) {
      os << "nan,nan,nan,0,error: " << clean(e.what()) << '\n';
    }
    return os.str();
  });
  return header_block("tau-vs-m", spec, {"tau: transmission probability at the greedy fixed point"}) +
         sweep_label(spec) + std::string(",z,r,tau,ergodic,status\n") + join(rows);
}

std::string cmd_lambda_max(const SweepSpec& spec) {
  const auto values = spec.values();
  const auto rows = parallel_rows(values.size(), [&](std::size_t i) {
    const int sweep = as_int(values[i]);
    std::ostringstream os;
    os << sweep << ',';
    try {
      const int M = peers_from_sweep(sweep, spec.convention);
      const long double u = solve_u_extended(spec.params.W, M);
      const double lmax = lambda_max_greedy_forms(spec.params, M, u).first;
      const long double resid =
          2.0L * std::pow(u, static_cast<long double>(M + 1)) - spec.params.W * (1.0L - u);
      os << fmt(static_cast<double>(u)) << ',' << fmt(lmax) << ',' << fmt((M + 1) * lmax) << ','
         << fmt(static_cast<double>(std::abs(resid))) << ",ok\n";
    } catch (const std::exception& e) {
      os << "nan,nan,nan,nan,error: " << clean(e.what()) << '\n';
    }
    return os.str();
  });
  return header_block("lambda-max", spec,
                      {"network_offered_load = (M + 1) * lambda_max, M + 1 stations in total"}) +
         sweep_label(spec) + std::string(",u,lambda_max,network_offered_load,u_residual,status\n") +
         join(rows);
}

std::string cmd_optimal_w(const SweepSpec& spec, int W_lo, int W_hi) {
  const auto values = spec.values();
  const auto rows = parallel_rows(values.size(), [&](std::size_t i) {
    const int sweep = as_int(values[i]);
    std::ostringstream os;
    os << sweep << ',';
    try {
      const int M = peers_from_sweep(sweep, spec.convention);
      const auto best = optimal_window(spec.params, M, W_lo, W_hi);
      const double S_fixed = saturation_throughput(spec.params, M);
      os << best.W_opt << ',' << fmt(best.S_opt) << ',' << fmt(S_fixed) << ','
         << (best.unimodal ? 1 : 0) << ",ok\n";
    } catch (const std::exception& e) {
      os << "nan,nan,nan,0,error: " << clean(e.what()) << '\n';
    }
    return os.str();
  });
  std::ostringstream range;
  range << "W search: golden section over integers in [" << W_lo << ", " << W_hi
        << "], ties to the smaller W; unimodal from an exhaustive scan";
  return header_block("optimal-w", spec,
                      {"S = N tau (1-tau)^(N-1) T / (r T + (1-r) sigma), N = M + 1, "
                       "r = 1 - (1-tau)^N, tau = 1 - u (saturation)",
                       range.str(), "S_W: S at the fixed W above"}) +
         sweep_label(spec) + std::string(",W_opt,S_opt,S_W,unimodal,status\n") + join(rows);
}

std::string cmd_fair_vs_greedy(const SweepSpec& spec) {
  const auto values = spec.values();
  const auto rows = parallel_rows(values.size(), [&](std::size_t i) {
    const int sweep = as_int(values[i]);
    std::ostringstream os;
    os << sweep << ',';
    try {
      const int M = peers_from_sweep(sweep, spec.convention);
      const long double u = solve_u_extended(spec.params.W, M);  // shared by both columns
      const double g = lambda_max_greedy_forms(spec.params, M, u).first;
      const double f = lambda_max_fair_forms(spec.params, M, u).first;
      os << fmt(static_cast<double>(u)) << ',' << fmt(g) << ',' << fmt(f) << ',' << fmt(f / g)
         << ',' << (f < g ? "ok" : "fair not below greedy") << '\n';
    } catch (const std::exception& e) {
      os << "nan,nan,nan,nan,error: " << clean(e.what()) << '\n';
    }
    return os.str();
  });
  return header_block("fair-vs-greedy", spec, {"ratio = lambda_max_fair / lambda_max_greedy"}) +
         sweep_label(spec) + std::string(",u,lambda_max_greedy,lambda_max_fair,ratio,status\n") +
         join(rows);
}

std::string cmd_stability(const SweepSpec& spec) {
  if (spec.variable == SweepVariable::M) throw InvalidParameter("stability sweeps lambda, r or W");
  const auto values = spec.values();
  const auto rows = parallel_rows(values.size(), [&](std::size_t i) {
    SystemParams p = spec.params;
    double r = spec.r;
    switch (spec.variable) {
      case SweepVariable::W: p.W = as_int(values[i]); break;
      case SweepVariable::Lambda: p.lambda = values[i]; break;
      case SweepVariable::R: r = values[i]; break;
      case SweepVariable::M: break;
    }
    std::ostringstream os;
    os << fmt(values[i]) << ',';
    try {
      const GreedyStation g(p, BusyProb(r));
      const FairStation f(p, BusyProb(r));
      os << fmt(g.lambda_threshold()) << ',' << (g.is_ergodic() ? 1 : 0) << ','
         << (g.is_ergodic() ? fmt(g.p00()) : "nan") << ',';
      if (r > 0.0)
        os << fmt(f.lambda_threshold()) << ',' << (f.is_ergodic() ? 1 : 0) << ','
           << (f.is_ergodic() ? fmt(f.q00()) : "nan");
      else
        os << "0,0,nan";
      os << ",ok\n";
    } catch (const std::exception& e) {
      os << "nan,0,nan,nan,0,nan,error: " << clean(e.what()) << '\n';
    }
    return os.str();
  });
  return header_block("stability", spec, {"r = " + fmt(spec.r)}) + std::string(to_string(spec.variable)) +
         ",greedy_threshold,greedy_ergodic,p00,fair_threshold,fair_ergodic,q00,status\n" + join(rows);
}

std::string gnuplot_script(std::string_view csv_path, std::string_view title, int column,
                           std::string_view ylabel) {
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set datafile commentschars '#'\n"
     << "set key autotitle columnhead\n"
     << "set title '" << title << "'\n"
     << "set ylabel '" << ylabel << "'\n"
     << "plot '" << csv_path << "' using 1:" << column << " with linespoints\n";
  return os.str();
}

}  // namespace bcastq
