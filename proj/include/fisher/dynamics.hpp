#pragma once

#include <string>
#include <vector>

#include "fisher/equilibrium.hpp"
#include "fisher/market.hpp"

namespace fisher {

/// One recorded round: the budget split played, the per-seller utilities it
/// produced, and the convergence diagnostics at that round.
struct TraceRound {
  Matrix split;      // buyers x sellers
  Matrix utilities;  // buyers x sellers
  double phi = 0.0;
  double eg = 0.0;
  double avg_gap = 0.0;
  double wall_seconds = 0.0;
};

struct DynamicsTrace {
  std::vector<TraceRound> rounds;
  Matrix reference_split;      // budget split of the equilibrium used for phi
  std::vector<double> reference_utilities;
  double reference_objective = 0.0;
  std::string reference_note;  // which equilibrium phi is measured against
  bool boosted = false;
  bool converged = false;      // stop_early triggered before the round cap
};

/// Equal split of each budget over the sellers the buyer values.
Matrix init_split(const ValidatedMarket& vm);

struct StepResult {
  Matrix utilities;
  Matrix next_split;
};

/// One round: solve every seller's pacing equilibrium at the given split,
/// then move each budget in proportion to the utilities received.
StepResult step(const ValidatedMarket& vm, const Matrix& split, const Matrix* boosts,
                double tol_inner);

struct RunOptions {
  long rounds = 10000;
  double tol_inner = 1e-9;
  double stop_early = 1e-10;  // relative utility change per round
};

DynamicsTrace run(const ValidatedMarket& vm, const Matrix* boosts, const RunOptions& opts = {});

/// Sum of reference_split * ln(reference_split / split) over entries where
/// the reference is positive. Rows with equal mass make every buyer's
/// contribution non-negative.
double potential(const Matrix& split, const Matrix& reference_split);

struct RateReport {
  std::vector<double> avg_gap;      // g(T) for each prefix T
  std::vector<double> scaled_gap;   // T * g(T)
  double sup_scaled_gap = 0.0;
  double phi1 = 0.0;
  double worst_excess = 0.0;        // max_T (T*g(T) - phi1)
};

RateReport rate_report(const DynamicsTrace& trace, double reference_objective);

/// Trace CSV: one row per (round, buyer, seller).
void write_trace_csv(const DynamicsTrace& trace, const std::string& path);

}  // namespace fisher
