#include "fisher/fisher.h"

#include <cmath>
#include <optional>
#include <string>

#include "fisher/dynamics.hpp"
#include "fisher/equilibrium.hpp"
#include "fisher/market.hpp"
#include "fisher/reports.hpp"
#include "fisher/suite.hpp"

struct fisher_market {
  fisher::MarketSpec spec;
  std::optional<fisher::Matrix> boosts;
};

struct fisher_solution {
  fisher::MarketEquilibrium eq;
  fisher::PacingReport report;
};

struct fisher_trace {
  fisher::DynamicsTrace trace;
};

struct fisher_table {
  fisher::Report report;
  mutable std::string rendered;
};

namespace {

thread_local std::string g_last_error;

fisher_status fail(const std::exception& e) {
  g_last_error = e.what();
  return dynamic_cast<const fisher::NoConvergence*>(&e) != nullptr ? FISHER_NO_CONVERGENCE
                                                                   : FISHER_ERROR;
}

fisher_status fail_message(const char* message) {
  g_last_error = message;
  return FISHER_ERROR;
}

template <typename Fn>
fisher_status guarded(Fn&& fn) {
  try {
    fn();
    return FISHER_OK;
  } catch (const std::exception& e) {
    return fail(e);
  }
}

double nan_value() { return std::nan(""); }

}  // namespace

extern "C" {

const char* fisher_version(void) { return "1.0.0"; }

const char* fisher_last_error(void) { return g_last_error.c_str(); }

fisher_status fisher_market_load(const char* path, fisher_market** out) {
  if (path == nullptr || out == nullptr) return fail_message("null argument");
  return guarded([&] {
    fisher::MarketFile file = fisher::load_market(path);
    *out = new fisher_market{std::move(file.spec), std::move(file.boosts)};
  });
}

fisher_status fisher_market_parse(const char* json_text, fisher_market** out) {
  if (json_text == nullptr || out == nullptr) return fail_message("null argument");
  return guarded([&] {
    fisher::MarketFile file = fisher::parse_market(json_text);
    *out = new fisher_market{std::move(file.spec), std::move(file.boosts)};
  });
}

fisher_status fisher_market_generate(uint64_t seed, int32_t buyers, int32_t items,
                                     int32_t sellers, const char* distribution,
                                     fisher_market** out) {
  if (out == nullptr) return fail_message("null argument");
  return guarded([&] {
    fisher::GeneratorOptions opts =
        distribution != nullptr ? fisher::parse_distribution(distribution)
                                : fisher::GeneratorOptions{};
    *out = new fisher_market{fisher::generate_market(seed, buyers, items, sellers, opts), {}};
  });
}

fisher_status fisher_market_save(const fisher_market* market, const char* path) {
  if (market == nullptr || path == nullptr) return fail_message("null argument");
  return guarded([&] {
    fisher::save_market(market->spec, path,
                        market->boosts.has_value() ? &*market->boosts : nullptr);
  });
}

fisher_status fisher_market_set_boosts_file(fisher_market* market, const char* path) {
  if (market == nullptr || path == nullptr) return fail_message("null argument");
  return guarded([&] {
    market->boosts =
        fisher::load_boosts(path, market->spec.buyers(), market->spec.items());
  });
}

void fisher_market_free(fisher_market* market) { delete market; }

int32_t fisher_market_buyers(const fisher_market* market) {
  return market != nullptr ? market->spec.buyers() : 0;
}
int32_t fisher_market_items(const fisher_market* market) {
  return market != nullptr ? market->spec.items() : 0;
}
int32_t fisher_market_sellers(const fisher_market* market) {
  return market != nullptr ? market->spec.sellers() : 0;
}
int32_t fisher_market_has_boosts(const fisher_market* market) {
  return market != nullptr && market->boosts.has_value() ? 1 : 0;
}

fisher_status fisher_solve(const fisher_market* market, double tol, int32_t max_inner,
                           fisher_solution** out) {
  if (market == nullptr || out == nullptr) return fail_message("null argument");
  return guarded([&] {
    fisher::ValidatedMarket vm = fisher::validate_or_throw(market->spec);
    fisher::SolveOptions opts;
    if (tol > 0.0) opts.tol = tol;
    if (max_inner > 0) opts.max_inner = max_inner;
    fisher::MarketEquilibrium eq =
        market->boosts.has_value() ? fisher::solve_market_boosted(vm, *market->boosts, opts)
                                   : fisher::solve_market_ce(vm, opts);
    fisher::PacingReport report = fisher::verify_pacing(
        eq.whole, vm.spec.values, vm.spec.budgets,
        market->boosts.has_value() ? &*market->boosts : nullptr, opts.tol * 10.0);
    *out = new fisher_solution{std::move(eq), report};
  });
}

void fisher_solution_free(fisher_solution* solution) { delete solution; }

double fisher_solution_price(const fisher_solution* s, int32_t item) {
  if (s == nullptr || item < 0 || item >= static_cast<int32_t>(s->eq.whole.prices.size()))
    return nan_value();
  return s->eq.whole.prices[static_cast<std::size_t>(item)];
}
double fisher_solution_alpha(const fisher_solution* s, int32_t buyer) {
  if (s == nullptr || buyer < 0 || buyer >= static_cast<int32_t>(s->eq.whole.alphas.size()))
    return nan_value();
  return s->eq.whole.alphas[static_cast<std::size_t>(buyer)];
}
double fisher_solution_allocation(const fisher_solution* s, int32_t buyer, int32_t item) {
  if (s == nullptr || buyer < 0 || buyer >= s->eq.whole.allocation.rows || item < 0 ||
      item >= s->eq.whole.allocation.cols)
    return nan_value();
  return s->eq.whole.allocation(buyer, item);
}
double fisher_solution_utility(const fisher_solution* s, int32_t buyer) {
  if (s == nullptr || buyer < 0 || buyer >= static_cast<int32_t>(s->eq.total_utilities.size()))
    return nan_value();
  return s->eq.total_utilities[static_cast<std::size_t>(buyer)];
}
double fisher_solution_seller_utility(const fisher_solution* s, int32_t buyer, int32_t seller) {
  if (s == nullptr || buyer < 0 || buyer >= s->eq.utilities.rows || seller < 0 ||
      seller >= s->eq.utilities.cols)
    return nan_value();
  return s->eq.utilities(buyer, seller);
}
double fisher_solution_budget_split(const fisher_solution* s, int32_t buyer, int32_t seller) {
  if (s == nullptr || buyer < 0 || buyer >= s->eq.budget_split.rows || seller < 0 ||
      seller >= s->eq.budget_split.cols)
    return nan_value();
  return s->eq.budget_split(buyer, seller);
}
double fisher_solution_eg_objective(const fisher_solution* s) {
  return s != nullptr ? s->eq.eg_objective : nan_value();
}
double fisher_solution_nsw(const fisher_solution* s) {
  return s != nullptr ? s->eq.nsw : nan_value();
}
double fisher_solution_residual(const fisher_solution* s, int32_t which) {
  if (s == nullptr) return nan_value();
  switch (which) {
    case 0: return s->report.price_residual;
    case 1: return s->report.winner_residual;
    case 2: return s->report.clearing_residual;
    case 3: return s->report.budget_residual;
    default: return nan_value();
  }
}

fisher_status fisher_dynamics_run(const fisher_market* market, int32_t rounds, double tol_inner,
                                  double stop_early, fisher_trace** out) {
  if (market == nullptr || out == nullptr) return fail_message("null argument");
  return guarded([&] {
    fisher::ValidatedMarket vm = fisher::validate_or_throw(market->spec);
    fisher::RunOptions opts;
    if (rounds > 0) opts.rounds = rounds;
    if (tol_inner > 0.0) opts.tol_inner = tol_inner;
    if (stop_early > 0.0) opts.stop_early = stop_early;
    *out = new fisher_trace{fisher::run(
        vm, market->boosts.has_value() ? &*market->boosts : nullptr, opts)};
  });
}

void fisher_trace_free(fisher_trace* trace) { delete trace; }

int32_t fisher_trace_rounds(const fisher_trace* trace) {
  return trace != nullptr ? static_cast<int32_t>(trace->trace.rounds.size()) : 0;
}
int32_t fisher_trace_converged(const fisher_trace* trace) {
  return trace != nullptr && trace->trace.converged ? 1 : 0;
}

namespace {
const fisher::TraceRound* round_at(const fisher_trace* trace, int32_t round) {
  if (trace == nullptr || round < 1 ||
      round > static_cast<int32_t>(trace->trace.rounds.size()))
    return nullptr;
  return &trace->trace.rounds[static_cast<std::size_t>(round - 1)];
}
}  // namespace

double fisher_trace_phi(const fisher_trace* trace, int32_t round) {
  const fisher::TraceRound* r = round_at(trace, round);
  return r != nullptr ? r->phi : nan_value();
}
double fisher_trace_eg_objective(const fisher_trace* trace, int32_t round) {
  const fisher::TraceRound* r = round_at(trace, round);
  return r != nullptr ? r->eg : nan_value();
}
double fisher_trace_avg_gap(const fisher_trace* trace, int32_t round) {
  const fisher::TraceRound* r = round_at(trace, round);
  return r != nullptr ? r->avg_gap : nan_value();
}
double fisher_trace_budget(const fisher_trace* trace, int32_t round, int32_t buyer,
                           int32_t seller) {
  const fisher::TraceRound* r = round_at(trace, round);
  if (r == nullptr || buyer < 0 || buyer >= r->split.rows || seller < 0 ||
      seller >= r->split.cols)
    return nan_value();
  return r->split(buyer, seller);
}
double fisher_trace_utility(const fisher_trace* trace, int32_t round, int32_t buyer,
                            int32_t seller) {
  const fisher::TraceRound* r = round_at(trace, round);
  if (r == nullptr || buyer < 0 || buyer >= r->utilities.rows || seller < 0 ||
      seller >= r->utilities.cols)
    return nan_value();
  return r->utilities(buyer, seller);
}

fisher_status fisher_trace_write_csv(const fisher_trace* trace, const char* path) {
  if (trace == nullptr || path == nullptr) return fail_message("null argument");
  return guarded([&] { fisher::write_trace_csv(trace->trace, path); });
}

fisher_status fisher_buyer_audit(const fisher_market* market, int32_t agent_or_minus1,
                                 int32_t resolution, fisher_table** out) {
  if (market == nullptr || out == nullptr) return fail_message("null argument");
  return guarded([&] {
    fisher::ValidatedMarket vm = fisher::validate_or_throw(market->spec);
    *out = new fisher_table{fisher::buyer_audit(vm, agent_or_minus1, resolution), {}};
  });
}

fisher_status fisher_seller_audit(const fisher_market* market, int32_t agent_or_minus1,
                                  fisher_table** out) {
  if (market == nullptr || out == nullptr) return fail_message("null argument");
  return guarded([&] {
    fisher::ValidatedMarket vm = fisher::validate_or_throw(market->spec);
    *out = new fisher_table{fisher::seller_audit(vm, agent_or_minus1), {}};
  });
}

fisher_status fisher_pne(const fisher_market* market, double tol, int32_t restarts,
                         fisher_table** out) {
  if (market == nullptr || out == nullptr) return fail_message("null argument");
  return guarded([&] {
    fisher::ValidatedMarket vm = fisher::validate_or_throw(market->spec);
    double use_tol = tol > 0.0 ? tol : 1e-7 * vm.total_budget;
    *out = new fisher_table{fisher::pne_report(vm, use_tol, restarts > 0 ? restarts : 1), {}};
  });
}

fisher_status fisher_suite(uint64_t seed_lo, uint64_t seed_hi, fisher_table** out) {
  if (out == nullptr) return fail_message("null argument");
  return guarded([&] {
    *out = new fisher_table{fisher::suite_report(fisher::run_suite(seed_lo, seed_hi)), {}};
  });
}

void fisher_table_free(fisher_table* table) { delete table; }

int32_t fisher_table_rows(const fisher_table* table) {
  return table != nullptr ? static_cast<int32_t>(table->report.rows.size()) : 0;
}
int32_t fisher_table_cols(const fisher_table* table) {
  return table != nullptr ? static_cast<int32_t>(table->report.headers.size()) : 0;
}
const char* fisher_table_header(const fisher_table* table, int32_t col) {
  if (table == nullptr || col < 0 || col >= fisher_table_cols(table)) return nullptr;
  return table->report.headers[static_cast<std::size_t>(col)].c_str();
}
const char* fisher_table_cell(const fisher_table* table, int32_t row, int32_t col) {
  if (table == nullptr || row < 0 || row >= fisher_table_rows(table) || col < 0 ||
      col >= static_cast<int32_t>(table->report.rows[static_cast<std::size_t>(row)].size()))
    return nullptr;
  return table->report.rows[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)].c_str();
}
int32_t fisher_table_summary_lines(const fisher_table* table) {
  return table != nullptr ? static_cast<int32_t>(table->report.summary.size()) : 0;
}
const char* fisher_table_summary(const fisher_table* table, int32_t line) {
  if (table == nullptr || line < 0 || line >= fisher_table_summary_lines(table)) return nullptr;
  return table->report.summary[static_cast<std::size_t>(line)].c_str();
}
int32_t fisher_table_all_pass(const fisher_table* table) {
  return table != nullptr && table->report.all_pass ? 1 : 0;
}
const char* fisher_table_render(const fisher_table* table) {
  if (table == nullptr) return nullptr;
  table->rendered = fisher::render_report(table->report);
  return table->rendered.c_str();
}
fisher_status fisher_table_write_csv(const fisher_table* table, const char* path) {
  if (table == nullptr || path == nullptr) return fail_message("null argument");
  return guarded([&] { fisher::write_report_csv(table->report, path); });
}

}  // extern "C"
