#include "fisher/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fisher {

namespace {

std::vector<char> active_buyers(const Matrix& values, const std::vector<double>& budgets) {
  std::vector<char> active(static_cast<std::size_t>(values.rows), 0);
  for (int i = 0; i < values.rows; ++i) {
    if (!(budgets[static_cast<std::size_t>(i)] > 0.0)) continue;
    for (int j = 0; j < values.cols; ++j)
      if (values(i, j) > 0.0) {
        active[static_cast<std::size_t>(i)] = 1;
        break;
      }
  }
  return active;
}

int count_active(const std::vector<char>& active) {
  return static_cast<int>(std::count(active.begin(), active.end(), char(1)));
}

/// Items nobody funded end up with price zero; hand them to the active
/// buyers in equal shares so the market still clears.
void allocate_leftovers(Matrix& x, const std::vector<double>& prices,
                        const std::vector<char>& active, int n_active) {
  if (n_active == 0) return;
  for (int j = 0; j < x.cols; ++j) {
    if (prices[static_cast<std::size_t>(j)] > 0.0) continue;
    double col = 0.0;
    for (int i = 0; i < x.rows; ++i) col += x(i, j);
    if (col > 0.0) continue;
    for (int i = 0; i < x.rows; ++i)
      if (active[static_cast<std::size_t>(i)]) x(i, j) = 1.0 / n_active;
  }
}

PacingOutcome empty_outcome(int n, int m) {
  PacingOutcome out;
  out.alphas.assign(static_cast<std::size_t>(n), 0.0);
  out.prices.assign(static_cast<std::size_t>(m), 0.0);
  out.allocation = Matrix(n, m);
  out.utilities.assign(static_cast<std::size_t>(n), 0.0);
  out.spend.assign(static_cast<std::size_t>(n), 0.0);
  return out;
}

}  // namespace

double PacingReport::max_residual() const {
  return std::max(std::max(price_residual, winner_residual),
                  std::max(clearing_residual, budget_residual));
}

PacingOutcome solve_submarket(const Matrix& values, const std::vector<double>& budgets,
                              const SolveOptions& opts) {
  const int n = values.rows;
  const int m = values.cols;
  if (static_cast<int>(budgets.size()) != n)
    throw std::invalid_argument("budgets size does not match value matrix rows");
  const auto active = active_buyers(values, budgets);
  const int n_active = count_active(active);
  if (n_active == 0) return empty_outcome(n, m);

  Matrix bids(n, m);
  bool seeded = false;
  if (opts.warm != nullptr && opts.warm->rows == n && opts.warm->cols == m) {
    for (int i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      double sum = 0.0;
      for (int j = 0; j < m; ++j) {
        double b = values(i, j) > 0.0 ? std::max((*opts.warm)(i, j), 0.0) : 0.0;
        bids(i, j) = b;
        sum += b;
      }
      if (sum > 0.0) {
        double scale = budgets[static_cast<std::size_t>(i)] / sum;
        for (int j = 0; j < m; ++j) bids(i, j) *= scale;
      } else {
        goto cold_init;  // unusable warm row; fall back for everyone
      }
    }
    seeded = true;
  }
cold_init:
  if (!seeded) {
    for (int i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      double weight = 0.0;
      for (int j = 0; j < m; ++j)
        weight += opts.init == SolveOptions::Init::Uniform ? (values(i, j) > 0.0 ? 1.0 : 0.0)
                                                           : values(i, j);
      for (int j = 0; j < m; ++j) {
        double w = opts.init == SolveOptions::Init::Uniform ? (values(i, j) > 0.0 ? 1.0 : 0.0)
                                                            : values(i, j);
        bids(i, j) = budgets[static_cast<std::size_t>(i)] * w / weight;
      }
    }
  }

  std::vector<double> prices(static_cast<std::size_t>(m), 0.0);
  std::vector<double> utilities(static_cast<std::size_t>(n), 0.0);
  std::vector<double> alphas(static_cast<std::size_t>(n), 0.0);
  Matrix x(n, m);
  double residual = std::numeric_limits<double>::infinity();
  long iter = 0;

  for (iter = 1; iter <= opts.max_inner; ++iter) {
    for (int j = 0; j < m; ++j) {
      double p = 0.0;
      for (int i = 0; i < n; ++i) p += bids(i, j);
      prices[static_cast<std::size_t>(j)] = p;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        double p = prices[static_cast<std::size_t>(j)];
        x(i, j) = p > 0.0 ? bids(i, j) / p : 0.0;
      }
    for (int i = 0; i < n; ++i) {
      utilities[static_cast<std::size_t>(i)] = active[static_cast<std::size_t>(i)]
                                                   ? row_dot(values, x, i)
                                                   : 0.0;
      alphas[static_cast<std::size_t>(i)] =
          active[static_cast<std::size_t>(i)]
              ? budgets[static_cast<std::size_t>(i)] / utilities[static_cast<std::size_t>(i)]
              : 0.0;
    }

    double r_price = 0.0;
    double r_winner = 0.0;
    for (int j = 0; j < m; ++j) {
      double q = 0.0;
      for (int i = 0; i < n; ++i)
        if (active[static_cast<std::size_t>(i)])
          q = std::max(q, alphas[static_cast<std::size_t>(i)] * values(i, j));
      r_price = std::max(r_price, std::abs(prices[static_cast<std::size_t>(j)] - q));
      for (int i = 0; i < n; ++i)
        if (active[static_cast<std::size_t>(i)] && x(i, j) > kActiveThreshold)
          r_winner = std::max(r_winner, q - alphas[static_cast<std::size_t>(i)] * values(i, j));
    }
    residual = std::max(r_price, r_winner);
    if (residual < opts.tol) break;

    for (int i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      double bi_over_ui =
          budgets[static_cast<std::size_t>(i)] / utilities[static_cast<std::size_t>(i)];
      for (int j = 0; j < m; ++j) bids(i, j) = bi_over_ui * values(i, j) * x(i, j);
    }
  }
  if (residual >= opts.tol)
    throw NoConvergence(opts.max_inner, residual, "submarket proportional response stalled");

  PacingOutcome out;
  out.alphas = std::move(alphas);
  out.prices = std::move(prices);
  out.allocation = std::move(x);
  out.utilities = std::move(utilities);
  out.iterations = iter;
  out.residual = residual;
  allocate_leftovers(out.allocation, out.prices, active, n_active);
  out.spend.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += out.prices[static_cast<std::size_t>(j)] * out.allocation(i, j);
    out.spend[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

PacingOutcome solve_submarket_boosted(const Matrix& values, const std::vector<double>& budgets,
                                      const Matrix& boosts, const SolveOptions& opts) {
  const int n = values.rows;
  const int m = values.cols;
  if (static_cast<int>(budgets.size()) != n)
    throw std::invalid_argument("budgets size does not match value matrix rows");
  if (boosts.rows != n || boosts.cols != m)
    throw std::invalid_argument("boost matrix shape does not match values");
  for (double c : boosts.data)
    if (c < 0.0) throw std::invalid_argument("boosts must be non-negative");
  const auto active = active_buyers(values, budgets);
  const int n_active = count_active(active);
  if (n_active == 0) return empty_outcome(n, m);

  Matrix x(n, m);
  bool seeded = false;
  if (opts.warm != nullptr && opts.warm->rows == n && opts.warm->cols == m) {
    seeded = true;
    for (int j = 0; j < m; ++j) {
      double col = 0.0;
      for (int i = 0; i < n; ++i) {
        double v = active[static_cast<std::size_t>(i)] ? std::max((*opts.warm)(i, j), 0.0) : 0.0;
        x(i, j) = v;
        col += v;
      }
      if (col > 0.0) {
        for (int i = 0; i < n; ++i) x(i, j) /= col;
      } else {
        seeded = false;
        break;
      }
    }
  }
  if (!seeded) {
    for (int j = 0; j < m; ++j) {
      double weight = 0.0;
      for (int i = 0; i < n; ++i)
        if (active[static_cast<std::size_t>(i)])
          weight += opts.init == SolveOptions::Init::Uniform ? 1.0 : 1.0 + values(i, j);
      for (int i = 0; i < n; ++i)
        x(i, j) = active[static_cast<std::size_t>(i)]
                      ? (opts.init == SolveOptions::Init::Uniform ? 1.0 : 1.0 + values(i, j)) /
                            weight
                      : 0.0;
    }
  }

  std::vector<double> utilities(static_cast<std::size_t>(n), 0.0);
  std::vector<double> alphas(static_cast<std::size_t>(n), 0.0);
  std::vector<double> prices(static_cast<std::size_t>(m), 0.0);
  Matrix beta(n, m);
  double residual = std::numeric_limits<double>::infinity();
  double best_residual = residual;
  double damp = 1.0;  // halved if the plain multiplicative update stalls
  long iter = 0;

  for (iter = 1; iter <= opts.max_inner; ++iter) {
    for (int i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      double u = std::max(row_dot(values, x, i), 1e-300);
      utilities[static_cast<std::size_t>(i)] = u;
      alphas[static_cast<std::size_t>(i)] = budgets[static_cast<std::size_t>(i)] / u;
    }
    for (int j = 0; j < m; ++j) {
      double q = 0.0;
      for (int i = 0; i < n; ++i) {
        if (!active[static_cast<std::size_t>(i)]) continue;
        double b = alphas[static_cast<std::size_t>(i)] * values(i, j) + boosts(i, j);
        beta(i, j) = b;
        q = std::max(q, b);
      }
      prices[static_cast<std::size_t>(j)] = q;
    }

    double r_winner = 0.0;
    double r_budget = 0.0;
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i)
        if (active[static_cast<std::size_t>(i)] && x(i, j) > kActiveThreshold)
          r_winner = std::max(r_winner, prices[static_cast<std::size_t>(j)] - beta(i, j));
    for (int i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      double s = 0.0;
      for (int j = 0; j < m; ++j)
        s += (prices[static_cast<std::size_t>(j)] - boosts(i, j)) * x(i, j);
      r_budget = std::max(r_budget, std::abs(s - budgets[static_cast<std::size_t>(i)]) /
                                        std::max(budgets[static_cast<std::size_t>(i)], 1e-300));
    }
    residual = std::max(r_winner, r_budget);
    if (residual < opts.tol) break;

    if (iter % 500 == 0) {
      if (residual > 0.5 * best_residual && damp == 1.0) damp = 0.5;
      best_residual = std::min(best_residual, residual);
    }

    for (int j = 0; j < m; ++j) {
      double norm = 0.0;
      for (int i = 0; i < n; ++i) {
        if (!active[static_cast<std::size_t>(i)]) continue;
        double f = damp == 1.0 ? beta(i, j) : std::pow(beta(i, j), damp);
        x(i, j) *= f;
        norm += x(i, j);
      }
      if (norm > 0.0) {
        for (int i = 0; i < n; ++i) x(i, j) /= norm;
      }
      // all-zero gradient column: worthless unboosted item, any split is fine
    }
  }
  if (residual >= opts.tol)
    throw NoConvergence(opts.max_inner, residual, "boosted submarket solve stalled");

  for (int i = 0; i < n; ++i)
    if (!active[static_cast<std::size_t>(i)])
      for (int j = 0; j < m; ++j) x(i, j) = 0.0;

  PacingOutcome out;
  out.alphas = std::move(alphas);
  out.prices = std::move(prices);
  out.allocation = std::move(x);
  out.utilities = std::move(utilities);
  out.iterations = iter;
  out.residual = residual;
  allocate_leftovers(out.allocation, out.prices, active, n_active);
  out.spend.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < m; ++j)
      s += (out.prices[static_cast<std::size_t>(j)] - boosts(i, j)) * out.allocation(i, j);
    out.spend[static_cast<std::size_t>(i)] = active[static_cast<std::size_t>(i)] ? s : 0.0;
  }
  return out;
}

PacingReport verify_pacing(const PacingOutcome& outcome, const Matrix& values,
                           const std::vector<double>& budgets, const Matrix* boosts, double tol) {
  const int n = values.rows;
  const int m = values.cols;
  const auto active = active_buyers(values, budgets);
  const int n_active = count_active(active);
  PacingReport rep;
  auto boost_at = [&](int i, int j) { return boosts != nullptr ? (*boosts)(i, j) : 0.0; };

  for (int j = 0; j < m; ++j) {
    double q = 0.0;
    bool funded = false;
    for (int i = 0; i < n; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      double b = outcome.alphas[static_cast<std::size_t>(i)] * values(i, j) + boost_at(i, j);
      q = std::max(q, b);
      funded = funded || values(i, j) > 0.0 || boost_at(i, j) > 0.0;
    }
    if (!funded) ++rep.unclearable_items;
    rep.price_residual =
        std::max(rep.price_residual, std::abs(outcome.prices[static_cast<std::size_t>(j)] - q));
    double col = 0.0;
    for (int i = 0; i < n; ++i) {
      col += outcome.allocation(i, j);
      if (active[static_cast<std::size_t>(i)] && outcome.allocation(i, j) > kActiveThreshold) {
        double b = outcome.alphas[static_cast<std::size_t>(i)] * values(i, j) + boost_at(i, j);
        rep.winner_residual = std::max(rep.winner_residual, q - b);
      }
    }
    if (n_active > 0) rep.clearing_residual = std::max(rep.clearing_residual, std::abs(col - 1.0));
  }
  for (int i = 0; i < n; ++i) {
    if (!active[static_cast<std::size_t>(i)]) continue;
    double s = 0.0;
    for (int j = 0; j < m; ++j)
      s += (outcome.prices[static_cast<std::size_t>(j)] - boost_at(i, j)) *
           outcome.allocation(i, j);
    rep.budget_residual =
        std::max(rep.budget_residual, std::abs(s - budgets[static_cast<std::size_t>(i)]) /
                                          std::max(budgets[static_cast<std::size_t>(i)], 1e-300));
  }
  rep.pass = rep.max_residual() < tol;
  return rep;
}

namespace {

MarketEquilibrium regroup(const ValidatedMarket& vm, PacingOutcome whole, const Matrix* boosts) {
  const int n = vm.spec.buyers();
  const int K = vm.spec.sellers();
  MarketEquilibrium eq;
  eq.utilities = Matrix(n, K);
  eq.budget_split = Matrix(n, K);
  for (int k = 0; k < K; ++k)
    for (int j : vm.seller_items[static_cast<std::size_t>(k)])
      for (int i = 0; i < n; ++i) {
        eq.utilities(i, k) += vm.spec.values(i, j) * whole.allocation(i, j);
        double c = boosts != nullptr ? (*boosts)(i, j) : 0.0;
        eq.budget_split(i, k) +=
            (whole.prices[static_cast<std::size_t>(j)] - c) * whole.allocation(i, j);
      }
  eq.total_utilities.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double u = 0.0;
    for (int k = 0; k < K; ++k) u += eq.utilities(i, k);
    eq.total_utilities[static_cast<std::size_t>(i)] = u;
  }
  eq.eg_objective = eg_objective(vm.spec.budgets, eq.total_utilities);
  eq.nsw = nsw(vm.spec.budgets, eq.total_utilities);
  eq.whole = std::move(whole);
  return eq;
}

}  // namespace

MarketEquilibrium solve_market_ce(const ValidatedMarket& vm, const SolveOptions& opts) {
  return regroup(vm, solve_submarket(vm.spec.values, vm.spec.budgets, opts), nullptr);
}

MarketEquilibrium solve_market_boosted(const ValidatedMarket& vm, const Matrix& boosts,
                                       const SolveOptions& opts) {
  return regroup(vm, solve_submarket_boosted(vm.spec.values, vm.spec.budgets, boosts, opts),
                 &boosts);
}

double eg_objective(const std::vector<double>& budgets, const std::vector<double>& utilities) {
  double s = 0.0;
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (!(utilities[i] > 0.0)) throw NonPositiveUtility("utility must be positive for buyer " +
                                                        std::to_string(i));
    s += budgets[i] * std::log(utilities[i]);
  }
  return s;
}

double nsw(const std::vector<double>& budgets, const std::vector<double>& utilities) {
  double total = std::accumulate(budgets.begin(), budgets.end(), 0.0);
  return std::exp(eg_objective(budgets, utilities) / total);
}

namespace {

void grid_recurse(const MarketSpec& spec, int item, int resolution,
                  std::vector<int>& counts_scratch, Matrix& current,
                  std::vector<double>& partial_utils, GridSearchResult& best) {
  const int n = spec.buyers();
  if (item == spec.items()) {
    double obj = 0.0;
    for (int i = 0; i < n; ++i) {
      double b = spec.budgets[static_cast<std::size_t>(i)];
      if (b <= 0.0) continue;
      if (!(partial_utils[static_cast<std::size_t>(i)] > 0.0)) return;  // log undefined
      obj += b * std::log(partial_utils[static_cast<std::size_t>(i)]);
    }
    if (obj > best.objective || best.allocation.rows == 0) {
      best.objective = obj;
      best.allocation = current;
    }
    return;
  }
  // enumerate compositions of `resolution` into n parts for this item
  auto enumerate = [&](auto&& self, int buyer, int remaining) -> void {
    if (buyer == n - 1) {
      counts_scratch[static_cast<std::size_t>(buyer)] = remaining;
      for (int i = 0; i < n; ++i) {
        double share =
            static_cast<double>(counts_scratch[static_cast<std::size_t>(i)]) / resolution;
        current(i, item) = share;
        partial_utils[static_cast<std::size_t>(i)] += spec.values(i, item) * share;
      }
      grid_recurse(spec, item + 1, resolution, counts_scratch, current, partial_utils, best);
      for (int i = 0; i < n; ++i) {
        double share =
            static_cast<double>(counts_scratch[static_cast<std::size_t>(i)]) / resolution;
        partial_utils[static_cast<std::size_t>(i)] -= spec.values(i, item) * share;
        current(i, item) = 0.0;
      }
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts_scratch[static_cast<std::size_t>(buyer)] = c;
      self(self, buyer + 1, remaining - c);
    }
  };
  enumerate(enumerate, 0, resolution);
}

}  // namespace

GridSearchResult grid_search_eg(const MarketSpec& spec, int resolution) {
  const int n = spec.buyers();
  const int m = spec.items();
  if (n * m > 6) throw TooLarge("grid search is limited to buyers*items <= 6");
  if (resolution < 1) throw std::invalid_argument("resolution must be at least 1");
  GridSearchResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  Matrix current(n, m);
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  std::vector<double> partial(static_cast<std::size_t>(n), 0.0);
  grid_recurse(spec, 0, resolution, counts, current, partial, best);
  if (best.allocation.rows == 0)
    throw DomainError("no grid allocation gives every funded buyer positive utility");
  return best;
}

Matrix round_allocation_to_grid(const Matrix& allocation, int resolution) {
  Matrix out(allocation.rows, allocation.cols);
  for (int j = 0; j < allocation.cols; ++j) {
    std::vector<int> floors(static_cast<std::size_t>(allocation.rows));
    std::vector<double> frac(static_cast<std::size_t>(allocation.rows));
    int used = 0;
    for (int i = 0; i < allocation.rows; ++i) {
      double scaled = std::max(allocation(i, j), 0.0) * resolution;
      int f = static_cast<int>(std::floor(scaled));
      floors[static_cast<std::size_t>(i)] = f;
      frac[static_cast<std::size_t>(i)] = scaled - f;
      used += f;
    }
    int leftover = resolution - used;
    std::vector<int> order(static_cast<std::size_t>(allocation.rows));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return frac[static_cast<std::size_t>(a)] > frac[static_cast<std::size_t>(b)];
    });
    for (int q = 0; q < allocation.rows && leftover > 0; ++q, --leftover)
      ++floors[static_cast<std::size_t>(order[static_cast<std::size_t>(q)])];
    for (int i = 0; i < allocation.rows; ++i)
      out(i, j) = static_cast<double>(floors[static_cast<std::size_t>(i)]) / resolution;
  }
  return out;
}

}  // namespace fisher
