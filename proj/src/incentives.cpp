#include "fisher/incentives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fisher {

double default_epsilon(const std::vector<double>& budgets) {
  double mn = std::numeric_limits<double>::infinity();
  for (double b : budgets) mn = std::min(mn, b);
  return 1e-6 * mn;
}

namespace {

/// Utility buyer gets from seller k when it submits `budget` there and the
/// other buyers submit the column of `others`. Warm bids are reused across
/// repeated evaluations of the same sub-market.
double submarket_utility(const ValidatedMarket& vm, int seller, int buyer, double budget,
                         const Matrix& others, double tol_inner, Matrix* warm) {
  if (budget <= 0.0) return 0.0;
  const auto& items = vm.seller_items[static_cast<std::size_t>(seller)];
  Matrix values = vm.spec.values.select_columns(items);
  std::vector<double> budgets = others.column(seller);
  budgets[static_cast<std::size_t>(buyer)] = budget;
  SolveOptions opts;
  opts.tol = tol_inner;
  if (warm != nullptr && warm->rows == values.rows) opts.warm = warm;
  PacingOutcome out = solve_submarket(values, budgets, opts);
  if (warm != nullptr) {
    Matrix bids(values.rows, values.cols);
    for (int i = 0; i < values.rows; ++i)
      for (int j = 0; j < values.cols; ++j)
        bids(i, j) = out.prices[static_cast<std::size_t>(j)] * out.allocation(i, j);
    *warm = std::move(bids);
  }
  return out.utilities[static_cast<std::size_t>(buyer)];
}

}  // namespace

std::vector<double> buyer_equalized_split(const ValidatedMarket& vm, int buyer,
                                          const Matrix& others, double tol, long max_rounds,
                                          double tol_inner) {
  const int K = vm.spec.sellers();
  const auto& mine = vm.positive_sellers[static_cast<std::size_t>(buyer)];
  if (mine.empty())
    throw BuyerValuesNothing("buyer " + std::to_string(buyer) + " values no seller");
  const double budget = vm.spec.budgets[static_cast<std::size_t>(buyer)];
  std::vector<double> split(static_cast<std::size_t>(K), 0.0);
  for (int k : mine) split[static_cast<std::size_t>(k)] = budget / mine.size();
  if (mine.size() == 1) return split;

  std::vector<Matrix> warm(static_cast<std::size_t>(K));
  std::vector<double> utils(static_cast<std::size_t>(K), 0.0);
  for (long round = 1; round <= max_rounds; ++round) {
    double total = 0.0;
    for (int k : mine) {
      utils[static_cast<std::size_t>(k)] =
          submarket_utility(vm, k, buyer, split[static_cast<std::size_t>(k)], others, tol_inner,
                            &warm[static_cast<std::size_t>(k)]);
      total += utils[static_cast<std::size_t>(k)];
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int k : mine) {
      double bpb = utils[static_cast<std::size_t>(k)] / split[static_cast<std::size_t>(k)];
      lo = std::min(lo, bpb);
      hi = std::max(hi, bpb);
    }
    if (hi - lo < tol) return split;
    for (int k : mine)
      split[static_cast<std::size_t>(k)] = budget * utils[static_cast<std::size_t>(k)] / total;
  }
  throw NoConvergence(max_rounds, 0.0, "bang-per-buck equalization stalled");
}

double bang_per_buck_spread(const ValidatedMarket& vm, int buyer, const std::vector<double>& split,
                            const Matrix& others, double tol_inner) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int k = 0; k < vm.spec.sellers(); ++k) {
    double b = split[static_cast<std::size_t>(k)];
    if (b <= 0.0) continue;
    double u = submarket_utility(vm, k, buyer, b, others, tol_inner, nullptr);
    lo = std::min(lo, u / b);
    hi = std::max(hi, u / b);
  }
  return hi > lo ? hi - lo : 0.0;
}

GridBestResponse buyer_best_response_grid(const ValidatedMarket& vm, int buyer,
                                          const Matrix& others, int resolution,
                                          double tol_inner) {
  const int K = vm.spec.sellers();
  if (K > 3) throw TooLarge("grid best response is limited to 3 sellers");
  if (resolution < 10) throw std::invalid_argument("resolution must be at least 10");
  const auto& mine = vm.positive_sellers[static_cast<std::size_t>(buyer)];
  if (mine.empty())
    throw BuyerValuesNothing("buyer " + std::to_string(buyer) + " values no seller");
  const double budget = vm.spec.budgets[static_cast<std::size_t>(buyer)];

  GridBestResponse best;
  best.utility = -1.0;
  std::vector<Matrix> warm(static_cast<std::size_t>(K));
  double prev_utility = std::numeric_limits<double>::quiet_NaN();

  // money on a seller the buyer does not value is wasted, so the grid runs
  // over the buyer's positive-value sellers only
  const int d = static_cast<int>(mine.size());
  std::vector<int> counts(static_cast<std::size_t>(d), 0);
  auto evaluate = [&](const std::vector<int>& c) {
    std::vector<double> split(static_cast<std::size_t>(K), 0.0);
    double utility = 0.0;
    for (int q = 0; q < d; ++q) {
      int k = mine[static_cast<std::size_t>(q)];
      double b = budget * static_cast<double>(c[static_cast<std::size_t>(q)]) / resolution;
      split[static_cast<std::size_t>(k)] = b;
      utility += submarket_utility(vm, k, buyer, b, others, tol_inner,
                                   &warm[static_cast<std::size_t>(k)]);
    }
    ++best.evaluated;
    if (!std::isnan(prev_utility))
      best.grid_slack = std::max(best.grid_slack, std::abs(utility - prev_utility));
    prev_utility = utility;
    if (utility > best.utility) {
      best.utility = utility;
      best.split = split;
    }
  };
  auto recurse = [&](auto&& self, int q, int remaining) -> void {
    if (q == d - 1) {
      counts[static_cast<std::size_t>(q)] = remaining;
      evaluate(counts);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[static_cast<std::size_t>(q)] = c;
      self(self, q + 1, remaining - c);
    }
  };
  recurse(recurse, 0, resolution);
  return best;
}

std::vector<double> buyer_best_response_one_item(const ValidatedMarket& vm, int buyer,
                                                 const Matrix& others, double tol,
                                                 long max_iterations) {
  const int K = vm.spec.sellers();
  for (const auto& items : vm.seller_items)
    if (items.size() != 1)
      throw std::invalid_argument("every seller must own exactly one item");
  const double budget = vm.spec.budgets[static_cast<std::size_t>(buyer)];

  std::vector<double> value(static_cast<std::size_t>(K), 0.0);
  std::vector<double> mass(static_cast<std::size_t>(K), 0.0);
  std::vector<int> free_vars;
  for (int k = 0; k < K; ++k) {
    int item = vm.seller_items[static_cast<std::size_t>(k)][0];
    value[static_cast<std::size_t>(k)] = vm.spec.values(buyer, item);
    double w = 0.0;
    for (int i = 0; i < vm.spec.buyers(); ++i)
      if (i != buyer) w += others(i, k);
    mass[static_cast<std::size_t>(k)] = w;
    // an uncontested item is won with any positive bid; no money needed
    if (value[static_cast<std::size_t>(k)] > 0.0 && w > 0.0) free_vars.push_back(k);
  }
  std::vector<double> b(static_cast<std::size_t>(K), 0.0);
  if (free_vars.empty()) {
    // nothing to optimize; park the budget on the first valued seller
    for (int k = 0; k < K; ++k)
      if (value[static_cast<std::size_t>(k)] > 0.0) {
        b[static_cast<std::size_t>(k)] = budget;
        return b;
      }
    b[0] = budget;
    return b;
  }
  for (int k : free_vars) b[static_cast<std::size_t>(k)] = budget / free_vars.size();

  auto objective = [&](const std::vector<double>& pt) {
    double f = 0.0;
    for (int k : free_vars) {
      double x = pt[static_cast<std::size_t>(k)];
      double w = mass[static_cast<std::size_t>(k)];
      f += value[static_cast<std::size_t>(k)] * x / (x + w);
    }
    return f;
  };
  auto gradient = [&](const std::vector<double>& pt, std::vector<double>& g) {
    for (int k : free_vars) {
      double x = pt[static_cast<std::size_t>(k)];
      double w = mass[static_cast<std::size_t>(k)];
      double denom = (x + w) * (x + w);
      g[static_cast<std::size_t>(k)] = value[static_cast<std::size_t>(k)] * w / denom;
    }
  };
  auto project = [&](std::vector<double>& pt) {
    // Euclidean projection of the free coordinates onto the scaled simplex
    std::vector<double> vals;
    for (int k : free_vars) vals.push_back(pt[static_cast<std::size_t>(k)]);
    std::vector<double> sorted = vals;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    int rho = 0;
    for (std::size_t q = 0; q < sorted.size(); ++q) {
      cumulative += sorted[q];
      double candidate = (cumulative - budget) / static_cast<double>(q + 1);
      if (sorted[q] - candidate > 0.0) {
        theta = candidate;
        rho = static_cast<int>(q + 1);
      }
    }
    (void)rho;
    for (std::size_t q = 0; q < vals.size(); ++q)
      pt[static_cast<std::size_t>(free_vars[q])] = std::max(vals[q] - theta, 0.0);
  };

  std::vector<double> g(static_cast<std::size_t>(K), 0.0);
  double step = budget;
  for (long it = 0; it < max_iterations; ++it) {
    gradient(b, g);
    double top = 0.0;
    double support_min = std::numeric_limits<double>::infinity();
    for (int k : free_vars) {
      top = std::max(top, g[static_cast<std::size_t>(k)]);
      if (b[static_cast<std::size_t>(k)] > 1e-12 * budget)
        support_min = std::min(support_min, g[static_cast<std::size_t>(k)]);
    }
    if (top - support_min < tol) return b;

    double f0 = objective(b);
    for (;;) {
      std::vector<double> trial = b;
      for (int k : free_vars)
        trial[static_cast<std::size_t>(k)] += step * g[static_cast<std::size_t>(k)];
      project(trial);
      if (objective(trial) >= f0) {
        b = std::move(trial);
        step *= 1.3;
        break;
      }
      step *= 0.5;
      if (step < 1e-18 * budget) return b;  // at numerical stationarity
    }
  }
  throw NoConvergence(max_iterations, 0.0, "projected gradient ascent stalled");
}

double closed_form_utility_2x2(double b) {
  if (b < 0.0) throw std::invalid_argument("budget must be non-negative");
  if (b <= 1.0) return 6.0 * b / (b + 2.0);
  if (b <= 4.0) return 2.0;
  return 3.0 - 6.0 / (b + 2.0);
}

BoostSynthesis synthesize_boosts(const Matrix& values, const std::vector<double>& budgets,
                                 const Matrix& target) {
  const int n = values.rows;
  const int m = values.cols;
  if (target.rows != n || target.cols != m)
    throw std::invalid_argument("target shape does not match values");
  for (int j = 0; j < m; ++j) {
    double col = 0.0;
    for (int i = 0; i < n; ++i) {
      if (target(i, j) < 0.0) throw InfeasibleTarget("target entries must be non-negative");
      col += target(i, j);
    }
    if (std::abs(col - 1.0) > 1e-9)
      throw InfeasibleTarget("target does not clear item " + std::to_string(j));
  }

  BoostSynthesis out;
  out.alphas.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> utilities(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double u = row_dot(values, target, i);
    utilities[static_cast<std::size_t>(i)] = u;
    double budget = budgets[static_cast<std::size_t>(i)];
    if (budget > 0.0) {
      if (!(u > 0.0))
        throw InfeasibleTarget("buyer " + std::to_string(i) +
                               " has positive budget but zero utility under the target");
      out.alphas[static_cast<std::size_t>(i)] = budget / u;
    } else {
      for (int j = 0; j < m; ++j)
        if (target(i, j) > 0.0)
          throw InfeasibleTarget("target allocates to zero-budget buyer " + std::to_string(i));
    }
  }

  out.boosts = Matrix(n, m);
  std::vector<double> prices(static_cast<std::size_t>(m), 0.0);
  for (int j = 0; j < m; ++j) {
    double max_bid = 0.0;
    for (int i = 0; i < n; ++i)
      max_bid = std::max(max_bid, out.alphas[static_cast<std::size_t>(i)] * values(i, j));
    double margin = 1e-6 * max_bid;
    double price = 0.0;
    for (int i = 0; i < n; ++i) {
      double bid = out.alphas[static_cast<std::size_t>(i)] * values(i, j);
      price = std::max(price, target(i, j) > 0.0 ? bid : bid + margin);
    }
    double min_boost = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double bid = out.alphas[static_cast<std::size_t>(i)] * values(i, j);
      out.boosts(i, j) = target(i, j) > 0.0 ? price - bid : 0.0;
      min_boost = std::min(min_boost, out.boosts(i, j));
    }
    if (min_boost > 0.0) {
      for (int i = 0; i < n; ++i) out.boosts(i, j) -= min_boost;
      price -= min_boost;
    }
    prices[static_cast<std::size_t>(j)] = price;
  }

  out.outcome.alphas = out.alphas;
  out.outcome.prices = prices;
  out.outcome.allocation = target;
  out.outcome.utilities = utilities;
  out.outcome.spend.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < m; ++j)
      s += (prices[static_cast<std::size_t>(j)] - out.boosts(i, j)) * target(i, j);
    out.outcome.spend[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

std::vector<double> seller_linear_oracle(const Matrix& seller_values,
                                         const std::vector<double>& weights) {
  std::vector<double> u(static_cast<std::size_t>(seller_values.rows), 0.0);
  for (int j = 0; j < seller_values.cols; ++j) {
    int winner = 0;
    double best = weights[0] * seller_values(0, j);
    for (int i = 1; i < seller_values.rows; ++i) {
      double score = weights[static_cast<std::size_t>(i)] * seller_values(i, j);
      if (score > best) {
        best = score;
        winner = i;
      }
    }
    u[static_cast<std::size_t>(winner)] += seller_values(winner, j);
  }
  return u;
}

double seller_revenue(const std::vector<double>& budgets, const std::vector<double>& utilities,
                      const std::vector<double>& opponent_mass) {
  double r = 0.0;
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    double denom = utilities[i] + opponent_mass[i];
    if (denom > 0.0) r += budgets[i] * utilities[i] / denom;
  }
  return r;
}

BestResponse seller_best_response(const Matrix& seller_values, const std::vector<double>& budgets,
                                  const std::vector<double>& opponent_mass, const FwOptions& opts) {
  const int n = seller_values.rows;
  const int m = seller_values.cols;
  if (static_cast<int>(budgets.size()) != n || static_cast<int>(opponent_mass.size()) != n)
    throw std::invalid_argument("vector sizes do not match the value matrix");
  for (double w : opponent_mass)
    if (w < opts.epsilon || !(w > 0.0))
      throw EpsilonFloorViolated("opponent utility below the required floor");

  Matrix x(n, m);
  if (opts.warm != nullptr && opts.warm->rows == n && opts.warm->cols == m) {
    x = *opts.warm;
    for (int j = 0; j < m; ++j) {
      double col = 0.0;
      for (int i = 0; i < n; ++i) col += std::max(x(i, j), 0.0);
      for (int i = 0; i < n; ++i) x(i, j) = col > 0.0 ? std::max(x(i, j), 0.0) / col : (i == 0);
    }
  } else {
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) x(i, j) = 1.0 / n;
  }

  std::vector<double> u(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] = row_dot(seller_values, x, i);
  std::vector<double> g(static_cast<std::size_t>(n), 0.0);
  auto fill_gradient = [&](const std::vector<double>& point) {
    for (int i = 0; i < n; ++i) {
      double denom = point[static_cast<std::size_t>(i)] + opponent_mass[static_cast<std::size_t>(i)];
      g[static_cast<std::size_t>(i)] =
          budgets[static_cast<std::size_t>(i)] * opponent_mass[static_cast<std::size_t>(i)] /
          (denom * denom);
    }
  };
  // exact 1-D maximization of the concave restriction R(u + t * du)
  auto line_search = [&](const std::vector<double>& du, double t_max) {
    auto slope = [&](double t) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        double ui = u[static_cast<std::size_t>(i)] + t * du[static_cast<std::size_t>(i)];
        double denom = ui + opponent_mass[static_cast<std::size_t>(i)];
        s += budgets[static_cast<std::size_t>(i)] * opponent_mass[static_cast<std::size_t>(i)] /
             (denom * denom) * du[static_cast<std::size_t>(i)];
      }
      return s;
    };
    if (slope(t_max) >= 0.0) return t_max;
    double lo = 0.0, hi = t_max;
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  BestResponse out;
  double gap = std::numeric_limits<double>::infinity();
  long it = 0;
  std::vector<double> du(static_cast<std::size_t>(n), 0.0);
  for (it = 1; it <= opts.max_iterations; ++it) {
    fill_gradient(u);
    // Frank-Wolfe atom and per-item pairwise candidates
    gap = 0.0;
    int pw_item = -1, pw_to = -1, pw_from = -1;
    double pw_score = 0.0;
    std::vector<int> fw_winner(static_cast<std::size_t>(m), 0);
    for (int j = 0; j < m; ++j) {
      int winner = 0;
      double best = g[0] * seller_values(0, j);
      for (int i = 1; i < n; ++i) {
        double score = g[static_cast<std::size_t>(i)] * seller_values(i, j);
        if (score > best) {
          best = score;
          winner = i;
        }
      }
      fw_winner[static_cast<std::size_t>(j)] = winner;
      double held = 0.0;
      int worst = -1;
      double worst_score = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        double score = g[static_cast<std::size_t>(i)] * seller_values(i, j);
        held += score * x(i, j);
        if (x(i, j) > 1e-15 && score < worst_score) {
          worst_score = score;
          worst = i;
        }
      }
      gap += best - held;
      if (worst >= 0 && worst != winner) {
        double s = (best - worst_score) * x(worst, j);
        if (s > pw_score) {
          pw_score = s;
          pw_item = j;
          pw_to = winner;
          pw_from = worst;
        }
      }
    }
    if (gap < opts.gap_polish) break;

    bool pairwise = pw_item >= 0 && pw_score >= 0.25 * gap;
    if (pairwise) {
      std::fill(du.begin(), du.end(), 0.0);
      du[static_cast<std::size_t>(pw_to)] = seller_values(pw_to, pw_item);
      du[static_cast<std::size_t>(pw_from)] = -seller_values(pw_from, pw_item);
      double t = line_search(du, x(pw_from, pw_item));
      if (t <= 0.0) break;
      x(pw_to, pw_item) += t;
      x(pw_from, pw_item) -= t;
      u[static_cast<std::size_t>(pw_to)] += t * seller_values(pw_to, pw_item);
      u[static_cast<std::size_t>(pw_from)] -= t * seller_values(pw_from, pw_item);
    } else {
      for (int i = 0; i < n; ++i) du[static_cast<std::size_t>(i)] = -u[static_cast<std::size_t>(i)];
      for (int j = 0; j < m; ++j)
        du[static_cast<std::size_t>(fw_winner[static_cast<std::size_t>(j)])] +=
            seller_values(fw_winner[static_cast<std::size_t>(j)], j);
      double t = line_search(du, 1.0);
      if (t <= 0.0) break;
      for (int j = 0; j < m; ++j) {
        int w = fw_winner[static_cast<std::size_t>(j)];
        for (int i = 0; i < n; ++i) x(i, j) *= 1.0 - t;
        x(w, j) += t;
      }
      for (int i = 0; i < n; ++i) u[static_cast<std::size_t>(i)] = row_dot(seller_values, x, i);
    }
  }

  out.utilities = std::move(u);
  out.allocation = std::move(x);
  out.revenue = seller_revenue(budgets, out.utilities, opponent_mass);
  out.fw_gap = gap;
  out.iterations = it;
  return out;
}

SellerDeviationReport incentive_ratio(const ValidatedMarket& vm, int seller, double tol,
                                      const FwOptions& fw) {
  if (vm.spec.sellers() < 2) throw std::invalid_argument("need at least two sellers");
  (void)tol;
  SolveOptions ce_opts;
  ce_opts.tol = 1e-11;
  MarketEquilibrium ce = solve_market_ce(vm, ce_opts);

  const int n = vm.spec.buyers();
  double epsilon = default_epsilon(vm.spec.budgets);
  std::vector<double> mass(static_cast<std::size_t>(n), 0.0);
  SellerDeviationReport rep;
  rep.seller = seller;
  for (int i = 0; i < n; ++i) {
    double w = ce.total_utilities[static_cast<std::size_t>(i)] - ce.utilities(i, seller);
    if (w < epsilon) {
      w = epsilon;
      ++rep.floor_clamps;
    }
    mass[static_cast<std::size_t>(i)] = w;
  }

  rep.ce_revenue =
      seller_revenue(vm.spec.budgets, ce.utilities.column(seller), mass);
  FwOptions opts = fw;
  opts.epsilon = epsilon;
  const auto& items = vm.seller_items[static_cast<std::size_t>(seller)];
  Matrix values = vm.spec.values.select_columns(items);
  BestResponse br = seller_best_response(values, vm.spec.budgets, mass, opts);
  rep.best_revenue = br.revenue;
  rep.best_utilities = br.utilities;
  rep.fw_gap = br.fw_gap;
  rep.ratio = rep.best_revenue / rep.ce_revenue;
  return rep;
}

BuyerDeviationReport buyer_deviation_report(const ValidatedMarket& vm, int buyer,
                                            const Matrix& others, int resolution, double tol) {
  BuyerDeviationReport rep;
  rep.buyer = buyer;
  rep.proportional_split = buyer_equalized_split(vm, buyer, others, tol);
  rep.spread = bang_per_buck_spread(vm, buyer, rep.proportional_split, others);
  double proportional_utility = 0.0;
  for (int k = 0; k < vm.spec.sellers(); ++k) {
    double b = rep.proportional_split[static_cast<std::size_t>(k)];
    if (b > 0.0) proportional_utility += submarket_utility(vm, k, buyer, b, others, 1e-10, nullptr);
  }
  rep.proportional_utility = proportional_utility;

  GridBestResponse grid = buyer_best_response_grid(vm, buyer, others, resolution);
  rep.grid_slack = grid.grid_slack;
  if (grid.utility > proportional_utility) {
    rep.best_utility = grid.utility;
    rep.best_split = grid.split;
  } else {
    rep.best_utility = proportional_utility;
    rep.best_split = rep.proportional_split;
  }
  rep.ratio = rep.best_utility / rep.proportional_utility;
  return rep;
}

}  // namespace fisher
