#include "fisher/seller_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace fisher {

std::vector<double> revenue_profile(const std::vector<double>& budgets, const Matrix& utilities,
                                    double epsilon) {
  const int n = utilities.rows;
  const int K = utilities.cols;
  std::vector<double> totals(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < K; ++k) totals[static_cast<std::size_t>(i)] += utilities(i, k);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < K; ++k)
      if (totals[static_cast<std::size_t>(i)] - utilities(i, k) < epsilon)
        throw EpsilonFloorViolated("buyer " + std::to_string(i) + " gets less than epsilon from "
                                   "sellers other than " + std::to_string(k));
  std::vector<double> revenues(static_cast<std::size_t>(K), 0.0);
  for (int k = 0; k < K; ++k) {
    double r = 0.0;
    for (int i = 0; i < n; ++i)
      r += budgets[static_cast<std::size_t>(i)] * utilities(i, k) /
           totals[static_cast<std::size_t>(i)];
    revenues[static_cast<std::size_t>(k)] = r;
  }
  return revenues;
}

namespace {

void require_two_positive_sellers(const ValidatedMarket& vm) {
  for (int i = 0; i < vm.spec.buyers(); ++i)
    if (vm.positive_sellers[static_cast<std::size_t>(i)].size() < 2)
      throw DomainError("buyer " + std::to_string(i) +
                        " needs positive value for at least two sellers");
}

Matrix utilities_of_witness(const ValidatedMarket& vm, int seller, const Matrix& witness,
                            Matrix& utilities) {
  const auto& items = vm.seller_items[static_cast<std::size_t>(seller)];
  for (int i = 0; i < vm.spec.buyers(); ++i) {
    double u = 0.0;
    for (int q = 0; q < static_cast<int>(items.size()); ++q)
      u += vm.spec.values(i, items[static_cast<std::size_t>(q)]) * witness(i, q);
    utilities(i, seller) = u;
  }
  return utilities;
}

std::vector<double> clamped_opponent_mass(const Matrix& utilities, int seller, double epsilon,
                                          int* clamps = nullptr) {
  std::vector<double> mass(static_cast<std::size_t>(utilities.rows), 0.0);
  for (int i = 0; i < utilities.rows; ++i) {
    double w = 0.0;
    for (int k = 0; k < utilities.cols; ++k)
      if (k != seller) w += utilities(i, k);
    if (w < epsilon) {
      w = epsilon;
      if (clamps != nullptr) ++*clamps;
    }
    mass[static_cast<std::size_t>(i)] = w;
  }
  return mass;
}

}  // namespace

UtilityProfile initial_profile(const ValidatedMarket& vm, std::uint64_t seed) {
  const int n = vm.spec.buyers();
  const int K = vm.spec.sellers();
  UtilityProfile profile;
  profile.utilities = Matrix(n, K);
  profile.witnesses.resize(static_cast<std::size_t>(K));
  std::mt19937_64 rng(seed);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int k = 0; k < K; ++k) {
    const auto& items = vm.seller_items[static_cast<std::size_t>(k)];
    Matrix w(n, static_cast<int>(items.size()));
    for (int q = 0; q < w.cols; ++q) {
      int j = items[static_cast<std::size_t>(q)];
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        double weight = vm.spec.values(i, j) > 0.0 ? (seed == 0 ? 1.0 : 0.05 + unit()) : 0.0;
        w(i, q) = weight;
        total += weight;
      }
      for (int i = 0; i < n; ++i) w(i, q) /= total;
    }
    utilities_of_witness(vm, k, w, profile.utilities);
    profile.witnesses[static_cast<std::size_t>(k)] = std::move(w);
  }
  return profile;
}

PneResult solve_pne(const ValidatedMarket& vm, double tol, long max_rounds,
                    std::uint64_t init_seed, const FwOptions& fw) {
  require_two_positive_sellers(vm);
  const int K = vm.spec.sellers();
  const double epsilon = default_epsilon(vm.spec.budgets);

  PneResult res;
  res.profile = initial_profile(vm, init_seed);
  res.improvements.assign(static_cast<std::size_t>(K), 0.0);

  for (long round = 1; round <= max_rounds; ++round) {
    double movement = 0.0;
    for (int k = 0; k < K; ++k) {
      std::vector<double> mass = clamped_opponent_mass(res.profile.utilities, k, epsilon);
      double current = seller_revenue(vm.spec.budgets, res.profile.utilities.column(k), mass);
      FwOptions opts = fw;
      opts.epsilon = epsilon;
      opts.warm = &res.profile.witnesses[static_cast<std::size_t>(k)];
      const auto& items = vm.seller_items[static_cast<std::size_t>(k)];
      Matrix values = vm.spec.values.select_columns(items);
      BestResponse br = seller_best_response(values, vm.spec.budgets, mass, opts);
      for (int i = 0; i < vm.spec.buyers(); ++i)
        movement = std::max(movement, std::abs(br.utilities[static_cast<std::size_t>(i)] -
                                               res.profile.utilities(i, k)));
      res.improvements[static_cast<std::size_t>(k)] = br.revenue - current;
      res.profile.witnesses[static_cast<std::size_t>(k)] = std::move(br.allocation);
      for (int i = 0; i < vm.spec.buyers(); ++i)
        res.profile.utilities(i, k) = br.utilities[static_cast<std::size_t>(i)];
    }
    res.movement = movement;
    res.rounds = round;
    if (movement < tol) {
      res.converged = true;
      break;
    }
  }
  res.revenues = revenue_profile(vm.spec.budgets, res.profile.utilities, 0.0);
  return res;
}

PneVerification verify_pne(const ValidatedMarket& vm, const UtilityProfile& profile, double tol,
                           const FwOptions& fw) {
  const int K = vm.spec.sellers();
  const double epsilon = default_epsilon(vm.spec.budgets);
  PneVerification ver;
  for (int k = 0; k < K; ++k) {
    std::vector<double> mass = clamped_opponent_mass(profile.utilities, k, epsilon);
    double current = seller_revenue(vm.spec.budgets, profile.utilities.column(k), mass);
    FwOptions opts = fw;
    opts.epsilon = epsilon;
    const auto& items = vm.seller_items[static_cast<std::size_t>(k)];
    Matrix values = vm.spec.values.select_columns(items);
    BestResponse br = seller_best_response(values, vm.spec.budgets, mass, opts);
    double improvement = br.revenue - current;
    ver.improvements.push_back(improvement);
    ver.max_improvement = std::max(ver.max_improvement, improvement);
  }
  ver.pass = ver.max_improvement < tol;
  return ver;
}

FairnessReport fairness(const ValidatedMarket& vm, const UtilityProfile& profile, double tol) {
  SolveOptions opts;
  opts.tol = 1e-11;
  MarketEquilibrium ce = solve_market_ce(vm, opts);
  FairnessReport rep;
  for (int i = 0; i < vm.spec.buyers(); ++i)
    for (int k = 0; k < vm.spec.sellers(); ++k)
      rep.delta = std::max(rep.delta, ce.budget_split(i, k) /
                                          vm.spec.budgets[static_cast<std::size_t>(i)]);
  std::vector<double> pne_totals(static_cast<std::size_t>(vm.spec.buyers()), 0.0);
  for (int i = 0; i < vm.spec.buyers(); ++i)
    for (int k = 0; k < vm.spec.sellers(); ++k)
      pne_totals[static_cast<std::size_t>(i)] += profile.utilities(i, k);
  rep.nsw_pne = nsw(vm.spec.budgets, pne_totals);
  rep.nsw_ce = ce.nsw;
  rep.ratio = rep.nsw_pne / rep.nsw_ce;
  rep.bound = 1.0 - rep.delta;
  rep.pass = rep.ratio >= rep.bound - tol && rep.ratio <= 1.0 + tol;
  return rep;
}

double minimax_residual(const ValidatedMarket& vm, const UtilityProfile& profile, int samples,
                        std::uint64_t seed) {
  const int n = vm.spec.buyers();
  const int K = vm.spec.sellers();
  const double epsilon = default_epsilon(vm.spec.budgets);
  const double total_budget = vm.total_budget;

  auto f_against_profile = [&](const Matrix& u) {
    double f = 0.0;
    for (int k = 0; k < K; ++k) {
      std::vector<double> mass = clamped_opponent_mass(profile.utilities, k, epsilon);
      for (int i = 0; i < n; ++i) {
        double denom = u(i, k) + mass[static_cast<std::size_t>(i)];
        if (denom > 0.0)
          f += vm.spec.budgets[static_cast<std::size_t>(i)] * u(i, k) / denom;
      }
    }
    return f;
  };

  double residual = std::abs(f_against_profile(profile.utilities) - total_budget);

  // f decomposes over sellers, so its maximum against the profile is the sum
  // of per-seller best responses
  double best_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    std::vector<double> mass = clamped_opponent_mass(profile.utilities, k, epsilon);
    FwOptions opts;
    opts.epsilon = epsilon;
    const auto& items = vm.seller_items[static_cast<std::size_t>(k)];
    Matrix values = vm.spec.values.select_columns(items);
    best_sum += seller_best_response(values, vm.spec.budgets, mass, opts).revenue;
  }
  residual = std::max(residual, best_sum - total_budget);

  for (int s = 0; s < samples; ++s) {
    UtilityProfile sample = initial_profile(vm, seed + static_cast<std::uint64_t>(s) + 1);
    residual = std::max(residual, f_against_profile(sample.utilities) - total_budget);
  }
  return residual;
}

}  // namespace fisher
