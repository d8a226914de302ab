// Command-line front end; talks to the library exclusively through the
// C interface in fisher/fisher.h.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "fisher/fisher.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitBoundViolation = 2;

int fail(const char* context) {
  std::fprintf(stderr, "error: %s: %s\n", context, fisher_last_error());
  return kExitError;
}

struct MarketHandle {
  fisher_market* ptr = nullptr;
  ~MarketHandle() { fisher_market_free(ptr); }
};

int load_market(const std::string& path, const std::string& boosts_path, MarketHandle& market) {
  if (fisher_market_load(path.c_str(), &market.ptr) != FISHER_OK) return fail("loading market");
  if (!boosts_path.empty() &&
      fisher_market_set_boosts_file(market.ptr, boosts_path.c_str()) != FISHER_OK)
    return fail("loading boosts");
  return kExitOk;
}

int print_table(fisher_table* table, const std::string& out_path) {
  std::unique_ptr<fisher_table, decltype(&fisher_table_free)> guard(table, fisher_table_free);
  std::fputs(fisher_table_render(table), stdout);
  if (!out_path.empty() && fisher_table_write_csv(table, out_path.c_str()) != FISHER_OK)
    return fail("writing report");
  return fisher_table_all_pass(table) ? kExitOk : kExitBoundViolation;
}

bool parse_seed_range(const std::string& text, std::uint64_t& lo, std::uint64_t& hi) {
  auto dots = text.find("..");
  if (dots == std::string::npos) return false;
  try {
    lo = std::stoull(text.substr(0, dots));
    hi = std::stoull(text.substr(dots + 2));
  } catch (const std::exception&) {
    return false;
  }
  return hi >= lo;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-price auto-bidding markets: equilibria, proportional dynamics, "
               "incentive audits"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a random market instance");
  std::uint64_t gen_seed = 1;
  int gen_buyers = 3, gen_items = 4, gen_sellers = 2;
  std::string gen_dist = "uniform01", gen_out;
  gen->add_option("--seed", gen_seed);
  gen->add_option("--buyers", gen_buyers);
  gen->add_option("--items", gen_items);
  gen->add_option("--sellers", gen_sellers);
  gen->add_option("--dist", gen_dist, "uniform01 | lognormal | sparse(p)");
  gen->add_option("--out", gen_out)->required();

  // ce
  auto* ce = app.add_subcommand("ce", "Solve the whole-market pacing equilibrium");
  std::string ce_market, ce_boosts;
  double ce_tol = 1e-9;
  int ce_max_inner = 100000;
  ce->add_option("--market", ce_market)->required();
  ce->add_option("--boosts", ce_boosts);
  ce->add_option("--tol", ce_tol);
  ce->add_option("--max-inner", ce_max_inner);

  // dynamics
  auto* dyn = app.add_subcommand("dynamics", "Run the proportional dynamics");
  std::string dyn_market, dyn_boosts, dyn_out;
  int dyn_rounds = 10000;
  double dyn_tol_inner = 1e-9, dyn_stop_early = 1e-10;
  dyn->add_option("--market", dyn_market)->required();
  dyn->add_option("--boosts", dyn_boosts);
  dyn->add_option("--rounds", dyn_rounds);
  dyn->add_option("--tol-inner", dyn_tol_inner);
  dyn->add_option("--stop-early", dyn_stop_early);
  dyn->add_option("--out", dyn_out)->required();

  // buyer-audit
  auto* ba = app.add_subcommand("buyer-audit", "Grid deviation audit for buyers");
  std::string ba_market, ba_agent = "all", ba_out;
  int ba_resolution = 200;
  ba->add_option("--market", ba_market)->required();
  ba->add_option("--agent", ba_agent, "buyer index or 'all'");
  ba->add_option("--resolution", ba_resolution);
  ba->add_option("--out", ba_out);

  // seller-audit
  auto* sa = app.add_subcommand("seller-audit", "Best-response deviation audit for sellers");
  std::string sa_market, sa_agent = "all", sa_out;
  sa->add_option("--market", sa_market)->required();
  sa->add_option("--agent", sa_agent, "seller index or 'all'");
  sa->add_option("--out", sa_out);

  // pne
  auto* pne = app.add_subcommand("pne", "Equilibrium of the seller competition game");
  std::string pne_market, pne_out;
  double pne_tol = 0.0;
  int pne_restarts = 5;
  pne->add_option("--market", pne_market)->required();
  pne->add_option("--tol", pne_tol);
  pne->add_option("--restarts", pne_restarts);
  pne->add_option("--out", pne_out);

  // suite
  auto* suite = app.add_subcommand("suite", "Run the property battery over a seed range");
  std::string suite_seeds = "1..10", suite_out;
  suite->add_option("--seeds", suite_seeds, "range, e.g. 1..50");
  suite->add_option("--out", suite_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the synopsis to stderr for errors
    return e.get_exit_code() == 0 ? kExitOk : kExitError;
  }

  if (gen->parsed()) {
    MarketHandle market;
    if (fisher_market_generate(gen_seed, gen_buyers, gen_items, gen_sellers, gen_dist.c_str(),
                               &market.ptr) != FISHER_OK)
      return fail("generating market");
    if (fisher_market_save(market.ptr, gen_out.c_str()) != FISHER_OK)
      return fail("saving market");
    std::printf("wrote %s: %d buyers, %d items, %d sellers\n", gen_out.c_str(),
                fisher_market_buyers(market.ptr), fisher_market_items(market.ptr),
                fisher_market_sellers(market.ptr));
    return kExitOk;
  }

  if (ce->parsed()) {
    MarketHandle market;
    if (int rc = load_market(ce_market, ce_boosts, market); rc != kExitOk) return rc;
    fisher_solution* solution = nullptr;
    if (fisher_solve(market.ptr, ce_tol, ce_max_inner, &solution) != FISHER_OK)
      return fail("solving equilibrium");
    std::unique_ptr<fisher_solution, decltype(&fisher_solution_free)> guard(
        solution, fisher_solution_free);

    const int n = fisher_market_buyers(market.ptr);
    const int m = fisher_market_items(market.ptr);
    const int K = fisher_market_sellers(market.ptr);
    std::printf("prices:");
    for (int j = 0; j < m; ++j) std::printf(" %.12g", fisher_solution_price(solution, j));
    std::printf("\nalphas:");
    for (int i = 0; i < n; ++i) std::printf(" %.12g", fisher_solution_alpha(solution, i));
    std::printf("\nutilities:");
    for (int i = 0; i < n; ++i) std::printf(" %.12g", fisher_solution_utility(solution, i));
    std::printf("\nallocation:\n");
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j)
        std::printf(j ? " %.12g" : "  %.12g", fisher_solution_allocation(solution, i, j));
      std::printf("\n");
    }
    std::printf("budget split (buyer x seller):\n");
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < K; ++k)
        std::printf(k ? " %.12g" : "  %.12g", fisher_solution_budget_split(solution, i, k));
      std::printf("\n");
    }
    std::printf("eg_objective: %.12g\nnsw: %.12g\n", fisher_solution_eg_objective(solution),
                fisher_solution_nsw(solution));
    std::printf("residuals: price=%.3g winner=%.3g clearing=%.3g budget=%.3g\n",
                fisher_solution_residual(solution, 0), fisher_solution_residual(solution, 1),
                fisher_solution_residual(solution, 2), fisher_solution_residual(solution, 3));
    return kExitOk;
  }

  if (dyn->parsed()) {
    MarketHandle market;
    if (int rc = load_market(dyn_market, dyn_boosts, market); rc != kExitOk) return rc;
    fisher_trace* trace = nullptr;
    fisher_status st =
        fisher_dynamics_run(market.ptr, dyn_rounds, dyn_tol_inner, dyn_stop_early, &trace);
    if (st != FISHER_OK) return fail("running dynamics");
    std::unique_ptr<fisher_trace, decltype(&fisher_trace_free)> guard(trace, fisher_trace_free);
    if (fisher_trace_write_csv(trace, dyn_out.c_str()) != FISHER_OK)
      return fail("writing trace");
    int rounds = fisher_trace_rounds(trace);
    std::printf("rounds: %d (%s)\nphi(1)=%.12g phi(T)=%.12g eg(T)=%.12g avg_gap(T)=%.12g\n",
                rounds, fisher_trace_converged(trace) ? "converged" : "round cap reached",
                fisher_trace_phi(trace, 1), fisher_trace_phi(trace, rounds),
                fisher_trace_eg_objective(trace, rounds), fisher_trace_avg_gap(trace, rounds));
    std::printf("wrote %s\n", dyn_out.c_str());
    return kExitOk;
  }

  auto agent_index = [](const std::string& text) {
    return text == "all" ? -1 : std::stoi(text);
  };

  if (ba->parsed()) {
    MarketHandle market;
    if (int rc = load_market(ba_market, "", market); rc != kExitOk) return rc;
    fisher_table* table = nullptr;
    if (fisher_buyer_audit(market.ptr, agent_index(ba_agent), ba_resolution, &table) != FISHER_OK)
      return fail("buyer audit");
    return print_table(table, ba_out);
  }

  if (sa->parsed()) {
    MarketHandle market;
    if (int rc = load_market(sa_market, "", market); rc != kExitOk) return rc;
    fisher_table* table = nullptr;
    if (fisher_seller_audit(market.ptr, agent_index(sa_agent), &table) != FISHER_OK)
      return fail("seller audit");
    return print_table(table, sa_out);
  }

  if (pne->parsed()) {
    MarketHandle market;
    if (int rc = load_market(pne_market, "", market); rc != kExitOk) return rc;
    fisher_table* table = nullptr;
    if (fisher_pne(market.ptr, pne_tol, pne_restarts, &table) != FISHER_OK)
      return fail("solving seller game");
    return print_table(table, pne_out);
  }

  if (suite->parsed()) {
    std::uint64_t lo = 0, hi = 0;
    if (!parse_seed_range(suite_seeds, lo, hi)) {
      std::fprintf(stderr, "error: --seeds expects a range like 1..50\n");
      return kExitError;
    }
    fisher_table* table = nullptr;
    if (fisher_suite(lo, hi, &table) != FISHER_OK) return fail("running suite");
    return print_table(table, suite_out);
  }

  return kExitError;
}
