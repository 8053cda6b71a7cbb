#include "bcastq/params.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bcastq/errors.hpp"

namespace bcastq {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class Int>
Int parse_integer(std::string_view key, std::string_view text) {
  Int value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    throw InvalidParameter("config: '" + std::string(key) + "' expects an integer, got '" +
                           std::string(text) + "'");
  return value;
}

}  // namespace

std::string_view to_string(ChannelMode mode) {
  return mode == ChannelMode::Greedy ? "greedy" : "fair";
}

ChannelMode parse_mode(std::string_view text) {
  if (text == "greedy") return ChannelMode::Greedy;
  if (text == "fair") return ChannelMode::Fair;
  throw InvalidParameter("unknown channel mode '" + std::string(text) + "'");
}

void require_model_params(const SystemParams& p) {
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda))
    throw InvalidParameter("lambda must be finite and >= 0");
  if (!(p.T > 0.0) || !std::isfinite(p.T)) throw InvalidParameter("T must be finite and > 0");
  // sigma = 0 is a legal limit case for the formulas, not for a run
  if (!(p.sigma >= 0.0) || !std::isfinite(p.sigma))
    throw InvalidParameter("sigma must be finite and >= 0");
  if (p.W < 1) throw InvalidParameter("W must be >= 1");
  if (p.M && *p.M < 0) throw InvalidParameter("M must be >= 0");
}

SystemParams validate(const SystemParams& params) {
  require_model_params(params);
  if (!(params.lambda > 0.0)) throw InvalidParameter("lambda must be > 0");
  if (!(params.sigma > 0.0)) throw InvalidParameter("sigma must be > 0");
  return params;
}

BusyProb::BusyProb(double r) : r_(r) {
  if (!(r >= 0.0 && r <= 1.0)) throw InvalidParameter("busy probability must lie in [0,1]");
}

BusyProb BusyProb::from_peers(double tau, int M) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidParameter("tau must lie in [0,1]");
  if (M < 0) throw InvalidParameter("M must be >= 0");
  return BusyProb(1.0 - std::pow(1.0 - tau, M));
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    throw InvalidParameter("expected a number, got '" + std::string(text) + "'");
  return value;
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  RunConfig out = std::move(base);
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InvalidParameter("config line " + std::to_string(line_no) + ": missing '='");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (value.empty())
      throw InvalidParameter("config line " + std::to_string(line_no) + ": empty value");

    if (key == "lambda") out.params.lambda = parse_double(value);
    else if (key == "T") out.params.T = parse_double(value);
    else if (key == "sigma") out.params.sigma = parse_double(value);
    else if (key == "W") out.params.W = parse_integer<int>(key, value);
    else if (key == "M") out.params.M = parse_integer<int>(key, value);
    else if (key == "r") out.r = parse_double(value);
    else if (key == "mode") out.mode = parse_mode(value);
    else if (key == "seed") out.seed = parse_integer<std::uint64_t>(key, value);
    else if (key == "slots") out.slots = parse_integer<std::int64_t>(key, value);
    else if (key == "n_max") out.n_max = parse_integer<int>(key, value);
    else
      throw InvalidParameter("config line " + std::to_string(line_no) + ": unknown key '" +
                             std::string(key) + "'");
  }
  return out;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string format_config(const RunConfig& c) {
  std::ostringstream os;
  os << "lambda = " << format_double(c.params.lambda) << '\n'
     << "T = " << format_double(c.params.T) << '\n'
     << "sigma = " << format_double(c.params.sigma) << '\n'
     << "W = " << c.params.W << '\n';
  if (c.params.M) os << "M = " << *c.params.M << '\n';
  if (c.r) os << "r = " << format_double(*c.r) << '\n';
  os << "mode = " << to_string(c.mode) << '\n'
     << "seed = " << c.seed << '\n'
     << "slots = " << c.slots << '\n'
     << "n_max = " << c.n_max << '\n';
  return os.str();
}

}  // namespace bcastq
