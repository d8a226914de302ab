#include "fisher/suite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fisher/dynamics.hpp"
#include "fisher/equilibrium.hpp"
#include "fisher/incentives.hpp"
#include "fisher/seller_game.hpp"

namespace fisher {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Shape {
  int buyers;
  int items;
  int sellers;
};

Shape shape_from(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t h = mix(seed * 2654435761ULL + salt);
  int buyers = 2 + static_cast<int>(h % 4);             // 2..5
  int sellers = 2 + static_cast<int>((h >> 8) % 2);     // 2..3
  int items = sellers + static_cast<int>((h >> 16) % static_cast<std::uint64_t>(9 - sellers));
  return {buyers, items, sellers};
}

std::vector<std::uint64_t> seed_range(std::uint64_t lo, std::uint64_t hi) {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  return seeds;
}

std::vector<std::uint64_t> take(const std::vector<std::uint64_t>& seeds, std::size_t count) {
  return {seeds.begin(), seeds.begin() + std::min(count, seeds.size())};
}

struct RowBuilder {
  SuiteRow row;
  bool lower_bound = false;  // pass when worst >= threshold instead of <=
  double threshold = 0.0;

  RowBuilder(std::string theorem, double bound, bool lower) {
    row.theorem = std::move(theorem);
    threshold = bound;
    lower_bound = lower;
    row.bound = (lower ? ">=" : "<=") + format_real(bound);
    row.worst = lower ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
  }
  void observe(double value) {
    ++row.instances;
    row.worst = lower_bound ? std::min(row.worst, value) : std::max(row.worst, value);
  }
  SuiteRow done() {
    row.pass = row.instances > 0 &&
               (lower_bound ? row.worst >= threshold : row.worst <= threshold);
    return row;
  }
};

}  // namespace

MarketSpec schedule_mixed_instance(std::uint64_t seed) {
  Shape s = shape_from(seed, 0xd1);
  GeneratorOptions opts;
  switch (seed % 3) {
    case 0: opts.distribution = ValueDistribution::Uniform01; break;
    case 1: opts.distribution = ValueDistribution::Lognormal; break;
    default:
      opts.distribution = ValueDistribution::Sparse;
      opts.sparse_zero_fraction = 0.5;
  }
  return generate_market(seed, s.buyers, s.items, s.sellers, opts);
}

MarketSpec schedule_positive_instance(std::uint64_t seed) {
  Shape s = shape_from(seed, 0x70);
  GeneratorOptions opts;
  opts.distribution =
      seed % 2 == 0 ? ValueDistribution::Uniform01 : ValueDistribution::Lognormal;
  return generate_market(seed, s.buyers, s.items, s.sellers, opts);
}

Matrix schedule_boosts(std::uint64_t seed, const MarketSpec& spec) {
  std::mt19937_64 rng(mix(seed ^ 0xb005ULL));
  double vmax = 0.0;
  for (double v : spec.values.data) vmax = std::max(vmax, v);
  Matrix c(spec.buyers(), spec.items());
  for (double& entry : c.data) {
    double gate = unit(rng);
    double level = unit(rng);
    entry = gate < 0.5 ? 0.0 : 0.5 * vmax * level;
  }
  return c;
}

SuiteResult run_suite(std::uint64_t seed_lo, std::uint64_t seed_hi) {
  if (seed_hi < seed_lo) throw std::invalid_argument("empty seed range");
  const auto seeds = seed_range(seed_lo, seed_hi);

  SuiteResult result;
  auto push = [&](SuiteRow row) {
    result.all_pass = result.all_pass && row.pass;
    result.rows.push_back(std::move(row));
  };

  // Closed-form regression of the worked 2x2 sub-market.
  {
    RowBuilder row("closed_form_submarket_curve", 1e-6, false);
    const Matrix values = [] {
      Matrix v(2, 2);
      v(0, 0) = 2.0; v(0, 1) = 1.0; v(1, 0) = 1.0; v(1, 1) = 2.0;
      return v;
    }();
    SolveOptions opts;
    opts.tol = 1e-10;
    for (double b : {0.25, 0.5, 1.0, 2.0, 4.0, 10.0}) {
      PacingOutcome out = solve_submarket(values, {2.0, b}, opts);
      row.observe(std::abs(out.utilities[1] - closed_form_utility_2x2(b)));
    }
    push(row.done());
  }

  // Dynamics convergence, potential monotonicity, ergodic rate, fixed point.
  {
    RowBuilder conv("dynamics_match_equilibrium_utilities", 1e-4, false);
    RowBuilder mono("potential_non_increasing", 1e-8, false);
    RowBuilder rate("averaged_gap_times_rounds_below_phi1", 1e-6, false);
    RowBuilder fixed("equilibrium_split_is_fixed_point", 1e-8, false);
    for (std::uint64_t seed : seeds) {
      ValidatedMarket vm = validate_or_throw(schedule_mixed_instance(seed));
      RunOptions opts;
      opts.rounds = 10000;
      opts.tol_inner = 1e-9;
      opts.stop_early = 1e-9;
      DynamicsTrace trace = run(vm, nullptr, opts);

      const TraceRound& last = trace.rounds.back();
      double err = 0.0;
      for (int i = 0; i < vm.spec.buyers(); ++i) {
        double total = 0.0;
        for (int k = 0; k < vm.spec.sellers(); ++k) total += last.utilities(i, k);
        double ref = trace.reference_utilities[static_cast<std::size_t>(i)];
        err = std::max(err, std::abs(total - ref) / ref);
      }
      conv.observe(err);

      double increase = 0.0;
      for (std::size_t t = 1; t < trace.rounds.size(); ++t)
        increase = std::max(increase, trace.rounds[t].phi - trace.rounds[t - 1].phi);
      mono.observe(increase);

      rate.observe(rate_report(trace, trace.reference_objective).worst_excess);

      StepResult one = step(vm, trace.reference_split, nullptr, 1e-9);
      double move = 0.0;
      for (std::size_t e = 0; e < one.next_split.data.size(); ++e)
        move = std::max(move,
                        std::abs(one.next_split.data[e] - trace.reference_split.data[e]));
      fixed.observe(move);
    }
    push(conv.done());
    push(mono.done());
    push(rate.done());
    push(fixed.done());
  }

  // Dynamics with fixed boosts reach a market-wide boosted pacing equilibrium.
  {
    RowBuilder row("boosted_dynamics_reach_pacing_equilibrium", 1e-6, false);
    for (std::uint64_t seed : take(seeds, 20)) {
      ValidatedMarket vm = validate_or_throw(schedule_positive_instance(seed));
      Matrix boosts = schedule_boosts(seed, vm.spec);
      RunOptions opts;
      opts.rounds = 10000;
      opts.tol_inner = 1e-10;
      opts.stop_early = 1e-11;
      DynamicsTrace trace = run(vm, &boosts, opts);

      // assemble the whole-market outcome at the final split
      const Matrix& split = trace.rounds.back().split;
      const int n = vm.spec.buyers();
      PacingOutcome global;
      global.alphas.assign(static_cast<std::size_t>(n), 0.0);
      global.prices.assign(static_cast<std::size_t>(vm.spec.items()), 0.0);
      global.allocation = Matrix(n, vm.spec.items());
      global.utilities.assign(static_cast<std::size_t>(n), 0.0);
      global.spend.assign(static_cast<std::size_t>(n), 0.0);
      for (int k = 0; k < vm.spec.sellers(); ++k) {
        const auto& items = vm.seller_items[static_cast<std::size_t>(k)];
        SolveOptions sopts;
        sopts.tol = 1e-10;
        PacingOutcome sub = solve_submarket_boosted(vm.spec.values.select_columns(items),
                                                    split.column(k),
                                                    boosts.select_columns(items), sopts);
        for (int q = 0; q < static_cast<int>(items.size()); ++q) {
          int j = items[static_cast<std::size_t>(q)];
          global.prices[static_cast<std::size_t>(j)] = sub.prices[static_cast<std::size_t>(q)];
          for (int i = 0; i < n; ++i) global.allocation(i, j) = sub.allocation(i, q);
        }
        for (int i = 0; i < n; ++i) {
          global.utilities[static_cast<std::size_t>(i)] += sub.utilities[static_cast<std::size_t>(i)];
          global.spend[static_cast<std::size_t>(i)] += sub.spend[static_cast<std::size_t>(i)];
        }
      }
      for (int i = 0; i < n; ++i)
        global.alphas[static_cast<std::size_t>(i)] =
            vm.spec.budgets[static_cast<std::size_t>(i)] /
            global.utilities[static_cast<std::size_t>(i)];
      PacingReport rep = verify_pacing(global, vm.spec.values, vm.spec.budgets, &boosts, 1e-6);
      row.observe(rep.max_residual());
    }
    push(row.done());
  }

  // Buyer deviation: grid best response against the equalized split.
  {
    RowBuilder cap("buyer_best_response_at_most_twice_equalized", 2.0, false);
    RowBuilder floor("buyer_best_response_at_least_equalized", 1.0 - 1e-6, true);
    for (std::uint64_t seed : take(seeds, 30)) {
      ValidatedMarket vm = validate_or_throw(schedule_positive_instance(seed));
      SolveOptions copts;
      copts.tol = 1e-10;
      MarketEquilibrium ce = solve_market_ce(vm, copts);
      int buyer = static_cast<int>(seed % static_cast<std::uint64_t>(vm.spec.buyers()));
      BuyerDeviationReport dev = buyer_deviation_report(vm, buyer, ce.budget_split, 200);
      cap.observe((dev.best_utility - dev.grid_slack) / dev.proportional_utility);
      floor.observe(dev.ratio);
    }
    push(cap.done());
    push(floor.done());
  }

  // Utility and bang-per-buck monotonicity in the submitted budget.
  {
    RowBuilder row("utility_monotone_in_submitted_budget", 1e-8, false);
    const double ladder[] = {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0};
    for (std::uint64_t seed : seeds) {
      for (int rep = 0; rep < 20; ++rep) {
        std::mt19937_64 rng(mix(seed * 64 + static_cast<std::uint64_t>(rep)));
        int n = 2 + static_cast<int>(rng() % 3);
        int m = 1 + static_cast<int>(rng() % 4);
        MarketSpec sub = generate_market(rng(), n, m, 1, {});
        int buyer = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        SolveOptions opts;
        opts.tol = 1e-10;
        double violation = 0.0;
        double prev_u = 0.0;
        double prev_bpb = std::numeric_limits<double>::infinity();
        for (double b : ladder) {
          std::vector<double> budgets = sub.budgets;
          budgets[static_cast<std::size_t>(buyer)] = b;
          PacingOutcome out = solve_submarket(sub.values, budgets, opts);
          double u = out.utilities[static_cast<std::size_t>(buyer)];
          violation = std::max(violation, prev_u - u);
          violation = std::max(violation, u / b - prev_bpb);
          prev_u = u;
          prev_bpb = u / b;
        }
        row.observe(violation);
      }
    }
    push(row.done());
  }

  // Boost synthesis implements arbitrary market-clearing targets.
  {
    RowBuilder row("boost_synthesis_verifies_against_target", 1e-9, false);
    for (std::uint64_t seed : seeds) {
      for (int t = 0; t < 2; ++t) {
        ValidatedMarket vm = validate_or_throw(schedule_positive_instance(seed));
        int k = static_cast<int>((seed + static_cast<std::uint64_t>(t)) %
                                 static_cast<std::uint64_t>(vm.spec.sellers()));
        const auto& items = vm.seller_items[static_cast<std::size_t>(k)];
        Matrix values = vm.spec.values.select_columns(items);
        std::mt19937_64 rng(mix(seed * 16 + static_cast<std::uint64_t>(t)));
        Matrix target(values.rows, values.cols);
        for (int j = 0; j < target.cols; ++j) {
          double total = 0.0;
          for (int i = 0; i < target.rows; ++i) {
            target(i, j) = 0.01 + unit(rng);
            total += target(i, j);
          }
          for (int i = 0; i < target.rows; ++i) target(i, j) /= total;
        }
        BoostSynthesis syn = synthesize_boosts(values, vm.spec.budgets, target);
        PacingReport rep =
            verify_pacing(syn.outcome, values, vm.spec.budgets, &syn.boosts, 1e-9);
        double util_err = 0.0;
        for (int i = 0; i < values.rows; ++i)
          util_err = std::max(util_err, std::abs(syn.outcome.utilities[static_cast<std::size_t>(i)] -
                                                 row_dot(values, target, i)));
        row.observe(std::max(rep.max_residual(), util_err));
      }
    }
    push(row.done());
  }

  // Seller incentive ratio and its Frank-Wolfe certificate.
  {
    RowBuilder cap("seller_best_response_at_most_five_times_revenue", 5.0, false);
    RowBuilder floor("seller_best_response_at_least_revenue", 1.0 - 1e-6, true);
    RowBuilder gap("frank_wolfe_duality_gap", 1e-7, false);
    for (std::uint64_t seed : take(seeds, 30)) {
      ValidatedMarket vm = validate_or_throw(schedule_positive_instance(seed));
      for (int k = 0; k < vm.spec.sellers(); ++k) {
        SellerDeviationReport dev = incentive_ratio(vm, k, 1e-6);
        cap.observe(dev.ratio);
        floor.observe(dev.ratio);
        gap.observe(dev.fw_gap);
      }
    }
    push(cap.done());
    push(floor.done());
    push(gap.done());
  }

  // Unique seller-game equilibrium, no profitable deviation, fairness bound.
  {
    RowBuilder agree("pne_multistart_agreement_over_tolerance", 10.0, false);
    RowBuilder verify("pne_no_profitable_deviation_over_tolerance", 1.0, false);
    RowBuilder floor("nsw_ratio_above_one_minus_delta", -1e-6, true);
    RowBuilder cap("nsw_ratio_at_most_one", 1.0 + 1e-6, false);
    for (std::uint64_t seed : take(seeds, 30)) {
      ValidatedMarket vm = validate_or_throw(schedule_positive_instance(seed));
      double tol = 1e-7 * vm.total_budget;
      std::vector<PneResult> runs;
      for (std::uint64_t s = 0; s < 5; ++s) runs.push_back(solve_pne(vm, tol, 1000, s));
      double disagreement = 0.0;
      bool converged = true;
      for (const auto& r : runs) converged = converged && r.converged;
      for (std::size_t a = 0; a < runs.size(); ++a)
        for (std::size_t b = a + 1; b < runs.size(); ++b)
          for (std::size_t e = 0; e < runs[a].profile.utilities.data.size(); ++e)
            disagreement = std::max(disagreement,
                                    std::abs(runs[a].profile.utilities.data[e] -
                                             runs[b].profile.utilities.data[e]));
      agree.observe(converged ? disagreement / tol
                              : std::numeric_limits<double>::infinity());
      PneVerification ver = verify_pne(vm, runs.front().profile, tol);
      verify.observe(ver.max_improvement / tol);

      FairnessReport fair = fairness(vm, runs.front().profile, 1e-6);
      floor.observe(fair.ratio - fair.bound);
      cap.observe(fair.ratio);
    }
    push(agree.done());
    push(verify.done());
    push(floor.done());
    push(cap.done());
  }

  // Brute-force oracles agree with the solvers on desk-scale instances.
  {
    RowBuilder eg_row("eg_objective_matches_grid_oracle", 1e-3, false);
    const Shape tiny_shapes[] = {{1, 4, 2}, {2, 2, 2}, {2, 3, 2}, {3, 2, 2}, {1, 6, 3}, {2, 3, 3}};
    for (std::uint64_t seed : take(seeds, 12)) {
      Shape s = tiny_shapes[seed % 6];
      MarketSpec spec = generate_market(seed, s.buyers, s.items, s.sellers, {});
      ValidatedMarket vm = validate_or_throw(spec);
      SolveOptions opts;
      opts.tol = 1e-10;
      MarketEquilibrium eq = solve_market_ce(vm, opts);
      GridSearchResult grid = grid_search_eg(spec, 100);
      double stat = grid.objective - eq.eg_objective;
      Matrix rounded = round_allocation_to_grid(eq.whole.allocation, 100);
      std::vector<double> rounded_utils(static_cast<std::size_t>(spec.buyers()), 0.0);
      bool positive = true;
      for (int i = 0; i < spec.buyers(); ++i) {
        rounded_utils[static_cast<std::size_t>(i)] = row_dot(spec.values, rounded, i);
        positive = positive && rounded_utils[static_cast<std::size_t>(i)] > 0.0;
      }
      if (positive)
        stat = std::max(stat, eg_objective(spec.budgets, rounded_utils) - grid.objective);
      eg_row.observe(stat);
    }
    push(eg_row.done());

    RowBuilder br_row("seller_best_response_matches_grid_oracle", 1e-4, false);
    for (std::uint64_t seed : take(seeds, 10)) {
      MarketSpec spec = generate_market(seed, 2, 4, 2, {});
      ValidatedMarket vm = validate_or_throw(spec);
      SolveOptions opts;
      opts.tol = 1e-11;
      MarketEquilibrium ce = solve_market_ce(vm, opts);
      int k = static_cast<int>(seed % 2);
      double epsilon = default_epsilon(spec.budgets);
      std::vector<double> mass(2);
      for (int i = 0; i < 2; ++i)
        mass[static_cast<std::size_t>(i)] = std::max(
            ce.total_utilities[static_cast<std::size_t>(i)] - ce.utilities(i, k), epsilon);
      const auto& items = vm.seller_items[static_cast<std::size_t>(k)];
      Matrix values = vm.spec.values.select_columns(items);
      FwOptions fw;
      fw.epsilon = epsilon;
      BestResponse br = seller_best_response(values, spec.budgets, mass, fw);

      // dense per-item grid over the two buyers' shares
      const int r = 200;
      double grid_best = 0.0;
      std::vector<int> counts(static_cast<std::size_t>(values.cols), 0);
      auto recurse = [&](auto&& self, int j) -> void {
        if (j == values.cols) {
          std::vector<double> u(2, 0.0);
          for (int q = 0; q < values.cols; ++q) {
            double share = static_cast<double>(counts[static_cast<std::size_t>(q)]) / r;
            u[0] += values(0, q) * share;
            u[1] += values(1, q) * (1.0 - share);
          }
          grid_best = std::max(grid_best, seller_revenue(spec.budgets, u, mass));
          return;
        }
        for (int c = 0; c <= r; ++c) {
          counts[static_cast<std::size_t>(j)] = c;
          self(self, j + 1);
        }
      };
      recurse(recurse, 0);
      br_row.observe(std::abs(br.revenue - grid_best));
    }
    push(br_row.done());
  }

  return result;
}

Report suite_report(const SuiteResult& result) {
  Report rep;
  rep.name = "property suite";
  rep.headers = {"theorem", "instances", "worst_ratio", "bound", "pass"};
  for (const SuiteRow& row : result.rows) {
    rep.rows.push_back({row.theorem, std::to_string(row.instances), format_real(row.worst),
                        row.bound, row.pass ? "1" : "0"});
    rep.all_pass = rep.all_pass && row.pass;
  }
  rep.summary.push_back(std::string("all_pass=") + (result.all_pass ? "1" : "0"));
  return rep;
}

}  // namespace fisher
