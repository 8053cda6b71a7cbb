#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace bcastq {

enum class ValidationLevel { Fast, Full };

ValidationLevel parse_level(std::string_view text);

struct CheckResult {
  std::string id;
  bool pass = false;
  double measured = 0.0;   // deviation, mismatch count or z-score
  double tolerance = 0.0;
  std::string note;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  void print(std::ostream& os) const;
};

/// Cross-checks analytic routes, the truncated chain and the simulator.
/// Fast keeps simulations at 10^6 epochs; Full runs 10^7 and a network run.
ValidationReport run_validation(ValidationLevel level, std::uint64_t seed = 1,
                                std::ostream* progress = nullptr);

}  // namespace bcastq
