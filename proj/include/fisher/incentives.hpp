#pragma once

#include <vector>

#include "fisher/equilibrium.hpp"
#include "fisher/market.hpp"

namespace fisher {

/// Default floor for "utility a buyer receives from everyone else".
double default_epsilon(const std::vector<double>& budgets);

/// Split of one buyer's budget over sellers that equalizes its
/// bang-per-buck u_i(k)/B_i(k), holding all other buyers fixed. Computed by
/// iterating the single-buyer proportional update to its fixed point.
std::vector<double> buyer_equalized_split(const ValidatedMarket& vm, int buyer,
                                          const Matrix& others, double tol,
                                          long max_rounds = 20000, double tol_inner = 1e-10);

/// Bang-per-buck spread of a split: max minus min of u_i(k)/B_i(k) over the
/// sellers where the buyer spends money.
double bang_per_buck_spread(const ValidatedMarket& vm, int buyer,
                            const std::vector<double>& split, const Matrix& others,
                            double tol_inner = 1e-10);

struct GridBestResponse {
  std::vector<double> split;
  double utility = 0.0;
  double grid_slack = 0.0;  // largest utility change between neighbouring grid points
  long evaluated = 0;
};

/// Exhaustive search of the buyer's budget simplex; the deviation oracle.
GridBestResponse buyer_best_response_grid(const ValidatedMarket& vm, int buyer,
                                          const Matrix& others, int resolution,
                                          double tol_inner = 1e-9);

/// Best response when every seller owns exactly one item (the classic
/// trading-post case); projected gradient ascent on a closed-form objective.
std::vector<double> buyer_best_response_one_item(const ValidatedMarket& vm, int buyer,
                                                 const Matrix& others, double tol = 1e-10,
                                                 long max_iterations = 100000);

/// Closed-form utility of the second buyer in the two-item sub-market with
/// values [[2,1],[1,2]] when buyer 1 submits 2 and buyer 2 submits b.
double closed_form_utility_2x2(double b);

struct BoostSynthesis {
  std::vector<double> alphas;
  Matrix boosts;
  PacingOutcome outcome;  // target allocation with the implied prices/spends
};

/// Boosts that make the given market-clearing allocation the pacing
/// equilibrium of the sub-market at the given budgets. Strict winners beat
/// losers by a small margin; boost columns are shifted so their minimum is 0.
BoostSynthesis synthesize_boosts(const Matrix& values, const std::vector<double>& budgets,
                                 const Matrix& target);

/// Exact maximizer of sum_i weights[i] * u_i over the seller's feasible
/// utility set: give each item to the buyer with the largest weighted value,
/// ties to the lowest index.
std::vector<double> seller_linear_oracle(const Matrix& seller_values,
                                         const std::vector<double>& weights);

struct FwOptions {
  long max_iterations = 50000;
  double gap_tol = 1e-7;      // certificate the caller asks for
  double gap_polish = 1e-13;  // keep iterating below gap_tol for a stable point
  double epsilon = 0.0;       // opponent-mass floor; 0 means "caller checked"
  const Matrix* warm = nullptr;
};

struct BestResponse {
  std::vector<double> utilities;
  Matrix allocation;
  double revenue = 0.0;
  double fw_gap = 0.0;
  long iterations = 0;
};

/// Maximize sum_i B_i * u_i / (u_i + w_i) over the seller's feasible
/// utilities: Frank-Wolfe on the allocation with the exact linear oracle,
/// pairwise mass moves and exact line search.
BestResponse seller_best_response(const Matrix& seller_values, const std::vector<double>& budgets,
                                  const std::vector<double>& opponent_mass,
                                  const FwOptions& opts = {});

double seller_revenue(const std::vector<double>& budgets, const std::vector<double>& utilities,
                      const std::vector<double>& opponent_mass);

struct SellerDeviationReport {
  int seller = 0;
  double ce_revenue = 0.0;
  double best_revenue = 0.0;
  double ratio = 0.0;
  double fw_gap = 0.0;
  int floor_clamps = 0;  // buyers whose opponent mass was lifted to epsilon
  std::vector<double> best_utilities;
};

/// Theorem audit: fix every other seller at the competitive equilibrium and
/// measure how much this seller can gain by re-allocating its own items.
SellerDeviationReport incentive_ratio(const ValidatedMarket& vm, int seller, double tol,
                                      const FwOptions& fw = {});

struct BuyerDeviationReport {
  int buyer = 0;
  std::vector<double> proportional_split;
  double proportional_utility = 0.0;
  std::vector<double> best_split;
  double best_utility = 0.0;
  double ratio = 0.0;
  double grid_slack = 0.0;
  double spread = 0.0;  // bang-per-buck spread at the proportional split
};

/// Grid deviation audit against opponents held at the given split. The
/// candidate set includes the proportional split itself, so ratio >= 1 up to
/// re-solve noise.
BuyerDeviationReport buyer_deviation_report(const ValidatedMarket& vm, int buyer,
                                            const Matrix& others, int resolution,
                                            double tol = 1e-6);

}  // namespace fisher
