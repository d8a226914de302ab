#pragma once

#include <cstdint>
#include <vector>

#include "fisher/incentives.hpp"
#include "fisher/market.hpp"

namespace fisher {

/// Strategy profile of the seller competition game: per-buyer utilities each
/// seller delivers, with the witness allocations that implement them.
struct UtilityProfile {
  Matrix utilities;               // buyers x sellers
  std::vector<Matrix> witnesses;  // per seller, buyers x (its items)
};

/// R_k = sum_i B_i * u_i(k) / u_i(K). Throws if some buyer's utility from
/// the other sellers falls below the epsilon floor.
std::vector<double> revenue_profile(const std::vector<double>& budgets, const Matrix& utilities,
                                    double epsilon);

/// Feasible starting profile; seed 0 splits every item evenly over the
/// buyers that value it, other seeds draw random splits.
UtilityProfile initial_profile(const ValidatedMarket& vm, std::uint64_t seed);

struct PneResult {
  UtilityProfile profile;
  std::vector<double> revenues;
  std::vector<double> improvements;  // last cycle's per-seller revenue gains
  double movement = 0.0;             // last cycle's largest utility change
  long rounds = 0;
  bool converged = false;
};

/// Cyclic best response over sellers. Stops when a full cycle moves no
/// utility entry by more than tol; per-seller revenue improvements are
/// reported alongside. Non-convergence is a reported outcome, not a throw.
PneResult solve_pne(const ValidatedMarket& vm, double tol, long max_rounds,
                    std::uint64_t init_seed = 0, const FwOptions& fw = {});

struct PneVerification {
  std::vector<double> improvements;
  double max_improvement = 0.0;
  bool pass = false;
};

PneVerification verify_pne(const ValidatedMarket& vm, const UtilityProfile& profile, double tol,
                           const FwOptions& fw = {});

struct FairnessReport {
  double delta = 0.0;  // largest CE budget share a single seller takes
  double nsw_pne = 0.0;
  double nsw_ce = 0.0;
  double ratio = 0.0;
  double bound = 0.0;  // 1 - delta
  bool pass = false;
};

FairnessReport fairness(const ValidatedMarket& vm, const UtilityProfile& profile, double tol);

/// Saddle diagnostic: f(u, u) must equal the total budget for any feasible
/// profile, and no seller may improve against the profile. Returns the
/// largest violation over identity, best responses and random samples.
double minimax_residual(const ValidatedMarket& vm, const UtilityProfile& profile, int samples,
                        std::uint64_t seed = 1);

}  // namespace fisher
