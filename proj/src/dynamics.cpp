#include "fisher/dynamics.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace fisher {

Matrix init_split(const ValidatedMarket& vm) {
  const int n = vm.spec.buyers();
  const int K = vm.spec.sellers();
  Matrix split(n, K);
  for (int i = 0; i < n; ++i) {
    const auto& sellers = vm.positive_sellers[static_cast<std::size_t>(i)];
    if (sellers.empty())
      throw BuyerValuesNothing("buyer " + std::to_string(i) + " values no seller's items");
    double share = vm.spec.budgets[static_cast<std::size_t>(i)] / sellers.size();
    for (int k : sellers) split(i, k) = share;
  }
  return split;
}

namespace {

struct WarmState {
  std::vector<Matrix> per_seller;  // bids (plain) or allocations (boosted)
};

void check_split(const ValidatedMarket& vm, const Matrix& split) {
  const int n = vm.spec.buyers();
  if (split.rows != n || split.cols != vm.spec.sellers())
    throw std::invalid_argument("split shape does not match the market");
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int k = 0; k < split.cols; ++k) {
      if (split(i, k) < 0.0) throw std::invalid_argument("split entries must be non-negative");
      sum += split(i, k);
    }
    double budget = vm.spec.budgets[static_cast<std::size_t>(i)];
    if (std::abs(sum - budget) > 1e-6 * std::max(budget, 1.0))
      throw std::invalid_argument("split row " + std::to_string(i) +
                                  " does not sum to the buyer's budget");
  }
}

/// Proportional update with an exact-conservation fixup: the last funded
/// seller absorbs rounding so each row sums to the budget bit-for-bit.
Matrix proportional_update(const ValidatedMarket& vm, const Matrix& utilities) {
  const int n = vm.spec.buyers();
  const int K = vm.spec.sellers();
  Matrix next(n, K);
  for (int i = 0; i < n; ++i) {
    double total = 0.0;
    int last = -1;
    for (int k = 0; k < K; ++k) {
      total += utilities(i, k);
      if (utilities(i, k) > 0.0) last = k;
    }
    double budget = vm.spec.budgets[static_cast<std::size_t>(i)];
    if (last < 0) throw DomainError("buyer " + std::to_string(i) + " received zero utility");
    double partial = 0.0;
    for (int k = 0; k < K; ++k) {
      if (k == last) continue;
      next(i, k) = budget * (utilities(i, k) / total);
      partial += next(i, k);
    }
    double rest = budget - partial;
    for (int guard = 0; guard < 4; ++guard) {
      double sum = 0.0;
      for (int k = 0; k < K; ++k) sum += k == last ? rest : next(i, k);
      if (sum == budget) break;
      rest += budget - sum;
    }
    next(i, last) = std::max(rest, 0.0);
  }
  return next;
}

StepResult step_impl(const ValidatedMarket& vm, const Matrix& split, const Matrix* boosts,
                     double tol_inner, WarmState* warm) {
  check_split(vm, split);
  const int n = vm.spec.buyers();
  const int K = vm.spec.sellers();
  Matrix utilities(n, K);
  for (int k = 0; k < K; ++k) {
    const auto& items = vm.seller_items[static_cast<std::size_t>(k)];
    Matrix values = vm.spec.values.select_columns(items);
    std::vector<double> budgets = split.column(k);
    SolveOptions opts;
    opts.tol = tol_inner;
    if (warm != nullptr && warm->per_seller.size() == static_cast<std::size_t>(K) &&
        warm->per_seller[static_cast<std::size_t>(k)].rows == n)
      opts.warm = &warm->per_seller[static_cast<std::size_t>(k)];
    PacingOutcome out;
    if (boosts != nullptr) {
      Matrix c = boosts->select_columns(items);
      out = solve_submarket_boosted(values, budgets, c, opts);
      if (warm != nullptr) {
        if (warm->per_seller.size() != static_cast<std::size_t>(K))
          warm->per_seller.assign(static_cast<std::size_t>(K), Matrix());
        warm->per_seller[static_cast<std::size_t>(k)] = out.allocation;
      }
    } else {
      out = solve_submarket(values, budgets, opts);
      if (warm != nullptr) {
        if (warm->per_seller.size() != static_cast<std::size_t>(K))
          warm->per_seller.assign(static_cast<std::size_t>(K), Matrix());
        // proportional response state is the bid matrix: price * allocation
        Matrix bids(n, static_cast<int>(items.size()));
        for (int i = 0; i < n; ++i)
          for (int q = 0; q < bids.cols; ++q)
            bids(i, q) = out.prices[static_cast<std::size_t>(q)] * out.allocation(i, q);
        warm->per_seller[static_cast<std::size_t>(k)] = std::move(bids);
      }
    }
    for (int i = 0; i < n; ++i) utilities(i, k) = out.utilities[static_cast<std::size_t>(i)];
  }
  return {utilities, proportional_update(vm, utilities)};
}

}  // namespace

StepResult step(const ValidatedMarket& vm, const Matrix& split, const Matrix* boosts,
                double tol_inner) {
  return step_impl(vm, split, boosts, tol_inner, nullptr);
}

double potential(const Matrix& split, const Matrix& reference_split) {
  if (split.rows != reference_split.rows || split.cols != reference_split.cols)
    throw std::invalid_argument("split shapes disagree");
  double phi = 0.0;
  for (std::size_t e = 0; e < split.data.size(); ++e) {
    double ref = reference_split.data[e];
    if (ref <= 0.0) continue;  // buyer never trades there; term drops
    double cur = split.data[e];
    if (!(cur > 0.0))
      throw DomainError("split is zero where the reference split is positive");
    phi += ref * std::log(ref / cur);
  }
  return phi;
}

DynamicsTrace run(const ValidatedMarket& vm, const Matrix* boosts, const RunOptions& opts) {
  if (opts.rounds < 1) throw std::invalid_argument("rounds must be at least 1");
  DynamicsTrace trace;
  trace.boosted = boosts != nullptr;

  SolveOptions ref_opts;
  ref_opts.tol = std::min(opts.tol_inner, 1e-10);
  MarketEquilibrium ref = boosts != nullptr ? solve_market_boosted(vm, *boosts, ref_opts)
                                            : solve_market_ce(vm, ref_opts);
  trace.reference_split = ref.budget_split;
  trace.reference_utilities = ref.total_utilities;
  trace.reference_objective = ref.eg_objective;
  trace.reference_note = boosts != nullptr
                             ? "whole-market pacing equilibrium with the given boosts"
                             : "whole-market competitive equilibrium (splits of one solver run; "
                               "equilibrium splits need not be unique)";

  Matrix split = init_split(vm);
  WarmState warm;
  std::vector<double> prev_totals;
  double gap_sum = 0.0;

  for (long t = 1; t <= opts.rounds; ++t) {
    auto started = std::chrono::steady_clock::now();
    StepResult res = step_impl(vm, split, boosts, opts.tol_inner, &warm);

    TraceRound round;
    round.split = split;
    round.utilities = res.utilities;
    round.phi = potential(split, trace.reference_split);
    std::vector<double> totals(static_cast<std::size_t>(vm.spec.buyers()), 0.0);
    for (int i = 0; i < vm.spec.buyers(); ++i)
      for (int k = 0; k < vm.spec.sellers(); ++k) totals[static_cast<std::size_t>(i)] +=
          res.utilities(i, k);
    round.eg = eg_objective(vm.spec.budgets, totals);
    gap_sum += trace.reference_objective - round.eg;
    round.avg_gap = gap_sum / static_cast<double>(t);
    round.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    trace.rounds.push_back(std::move(round));

    if (!prev_totals.empty()) {
      double change = 0.0;
      for (std::size_t i = 0; i < totals.size(); ++i)
        change = std::max(change, std::abs(totals[i] - prev_totals[i]) /
                                      std::max(totals[i], 1e-300));
      if (change < opts.stop_early) {
        trace.converged = true;
        break;
      }
    }
    prev_totals = std::move(totals);
    split = std::move(res.next_split);
  }
  return trace;
}

RateReport rate_report(const DynamicsTrace& trace, double reference_objective) {
  if (trace.rounds.empty()) throw std::invalid_argument("trace is empty");
  RateReport rep;
  rep.phi1 = trace.rounds.front().phi;
  rep.worst_excess = -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (std::size_t t = 0; t < trace.rounds.size(); ++t) {
    acc += reference_objective - trace.rounds[t].eg;
    double g = acc / static_cast<double>(t + 1);
    rep.avg_gap.push_back(g);
    rep.scaled_gap.push_back(acc);
    rep.sup_scaled_gap = std::max(rep.sup_scaled_gap, acc);
    rep.worst_excess = std::max(rep.worst_excess, acc - rep.phi1);
  }
  return rep;
}

void write_trace_csv(const DynamicsTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write trace file '" + path + "'");
  out << "t,buyer,seller,budget,utility,phi,eg_objective,avg_gap\n";
  for (std::size_t t = 0; t < trace.rounds.size(); ++t) {
    const TraceRound& r = trace.rounds[t];
    for (int i = 0; i < r.split.rows; ++i)
      for (int k = 0; k < r.split.cols; ++k)
        out << t + 1 << ',' << i << ',' << k << ',' << format_real(r.split(i, k)) << ','
            << format_real(r.utilities(i, k)) << ',' << format_real(r.phi) << ','
            << format_real(r.eg) << ',' << format_real(r.avg_gap) << '\n';
  }
}

}  // namespace fisher
