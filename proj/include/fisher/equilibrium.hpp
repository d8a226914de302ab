#pragma once

#include <vector>

#include "fisher/market.hpp"
#include "fisher/matrix.hpp"

namespace fisher {

/// Steady state of one seller's simultaneous first-price auctions: every
/// buyer bids alpha_i * v_{i,j} (plus an optional additive boost used for
/// ranking only), items go to the highest boosted bid, winners pay their
/// unboosted bid, and each buyer's spend equals its submitted budget.
struct PacingOutcome {
  std::vector<double> alphas;  // 0 for buyers excluded from the solve
  std::vector<double> prices;
  Matrix allocation;
  std::vector<double> utilities;
  std::vector<double> spend;
  long iterations = 0;
  double residual = 0.0;
};

struct SolveOptions {
  double tol = 1e-9;
  long max_inner = 100000;
  enum class Init { Uniform, ValueWeighted } init = Init::Uniform;
  const Matrix* warm = nullptr;  // previous bids (plain) or allocation (boosted)
};

/// Fixed point of per-item proportional response: each buyer re-bids its
/// budget across items in proportion to the value received last round.
PacingOutcome solve_submarket(const Matrix& values, const std::vector<double>& budgets,
                              const SolveOptions& opts = {});

/// Multiplicative updates of the allocation with the boosted-market gradient,
/// renormalized on each item's simplex.
PacingOutcome solve_submarket_boosted(const Matrix& values, const std::vector<double>& budgets,
                                      const Matrix& boosts, const SolveOptions& opts = {});

/// Per-condition residuals; `pass` holds at the tolerance handed to
/// verify_pacing. Budget depletion is measured relative to each budget.
struct PacingReport {
  double price_residual = 0.0;
  double winner_residual = 0.0;
  double clearing_residual = 0.0;
  double budget_residual = 0.0;
  int unclearable_items = 0;  // items no participating buyer values or boosts
  bool pass = false;
  double max_residual() const;
};

inline constexpr double kActiveThreshold = 1e-7;  // x > delta counts as winning

PacingReport verify_pacing(const PacingOutcome& outcome, const Matrix& values,
                           const std::vector<double>& budgets, const Matrix* boosts, double tol);

/// Whole-market equilibrium with per-seller regroupings of the outcome.
struct MarketEquilibrium {
  PacingOutcome whole;
  Matrix utilities;             // buyers x sellers
  Matrix budget_split;          // buyers x sellers, money spent per seller
  std::vector<double> total_utilities;
  double eg_objective = 0.0;
  double nsw = 0.0;
};

MarketEquilibrium solve_market_ce(const ValidatedMarket& vm, const SolveOptions& opts = {});
MarketEquilibrium solve_market_boosted(const ValidatedMarket& vm, const Matrix& boosts,
                                       const SolveOptions& opts = {});

double eg_objective(const std::vector<double>& budgets, const std::vector<double>& utilities);
double nsw(const std::vector<double>& budgets, const std::vector<double>& utilities);

struct GridSearchResult {
  Matrix allocation;
  double objective = 0.0;
};

/// Exhaustive search over per-item simplex grids; ground truth for tiny
/// markets (buyers * items <= 6).
GridSearchResult grid_search_eg(const MarketSpec& spec, int resolution);

/// Nearest grid point of an allocation (largest-remainder rounding per item).
Matrix round_allocation_to_grid(const Matrix& allocation, int resolution);

}  // namespace fisher
