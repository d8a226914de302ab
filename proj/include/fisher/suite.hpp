#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fisher/market.hpp"
#include "fisher/reports.hpp"

namespace fisher {

struct SuiteRow {
  std::string theorem;
  long instances = 0;
  double worst = 0.0;
  std::string bound;  // e.g. "<=1e-06" or ">=0.999999"
  bool pass = false;
};

struct SuiteResult {
  std::vector<SuiteRow> rows;
  bool all_pass = true;
};

/// The property battery behind `suite` and the acceptance tests: checks the
/// proven guarantees of this library's solvers over instances generated from
/// the given seed range.
SuiteResult run_suite(std::uint64_t seed_lo, std::uint64_t seed_hi);

Report suite_report(const SuiteResult& result);

/// Deterministic instance schedules used by the battery.
MarketSpec schedule_mixed_instance(std::uint64_t seed);     // may contain zero values
MarketSpec schedule_positive_instance(std::uint64_t seed);  // all values positive
Matrix schedule_boosts(std::uint64_t seed, const MarketSpec& spec);

}  // namespace fisher
