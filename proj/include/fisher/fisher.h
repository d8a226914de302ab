/* C interface of the fisher market library. All state lives behind opaque
 * handles; every fallible call returns a status code and leaves a detailed
 * message in fisher_last_error(). Handles are freed with their *_free call.
 */
#ifndef FISHER_FISHER_H
#define FISHER_FISHER_H

#include <stdint.h>

#if defined(_WIN32)
#define FISHER_API __declspec(dllexport)
#else
#define FISHER_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fisher_status {
  FISHER_OK = 0,
  FISHER_ERROR = 1,          /* bad input, i/o failure, invalid argument */
  FISHER_NO_CONVERGENCE = 2, /* an iterative solver hit its round cap */
} fisher_status;

typedef struct fisher_market fisher_market;
typedef struct fisher_solution fisher_solution;
typedef struct fisher_trace fisher_trace;
typedef struct fisher_table fisher_table;

FISHER_API const char* fisher_version(void);
/* thread-local message describing the most recent failure */
FISHER_API const char* fisher_last_error(void);

/* ---- markets ---- */
FISHER_API fisher_status fisher_market_load(const char* path, fisher_market** out);
FISHER_API fisher_status fisher_market_parse(const char* json_text, fisher_market** out);
FISHER_API fisher_status fisher_market_generate(uint64_t seed, int32_t buyers, int32_t items,
                                                int32_t sellers, const char* distribution,
                                                fisher_market** out);
FISHER_API fisher_status fisher_market_save(const fisher_market* market, const char* path);
FISHER_API fisher_status fisher_market_set_boosts_file(fisher_market* market, const char* path);
FISHER_API void fisher_market_free(fisher_market* market);

FISHER_API int32_t fisher_market_buyers(const fisher_market* market);
FISHER_API int32_t fisher_market_items(const fisher_market* market);
FISHER_API int32_t fisher_market_sellers(const fisher_market* market);
FISHER_API int32_t fisher_market_has_boosts(const fisher_market* market);

/* ---- whole-market equilibrium (uses the market's boosts when present) ---- */
FISHER_API fisher_status fisher_solve(const fisher_market* market, double tol, int32_t max_inner,
                                      fisher_solution** out);
FISHER_API void fisher_solution_free(fisher_solution* solution);
FISHER_API double fisher_solution_price(const fisher_solution* s, int32_t item);
FISHER_API double fisher_solution_alpha(const fisher_solution* s, int32_t buyer);
FISHER_API double fisher_solution_allocation(const fisher_solution* s, int32_t buyer,
                                             int32_t item);
FISHER_API double fisher_solution_utility(const fisher_solution* s, int32_t buyer);
FISHER_API double fisher_solution_seller_utility(const fisher_solution* s, int32_t buyer,
                                                 int32_t seller);
FISHER_API double fisher_solution_budget_split(const fisher_solution* s, int32_t buyer,
                                               int32_t seller);
FISHER_API double fisher_solution_eg_objective(const fisher_solution* s);
FISHER_API double fisher_solution_nsw(const fisher_solution* s);
/* pacing-condition residuals: 0 price, 1 winner, 2 clearing, 3 budget */
FISHER_API double fisher_solution_residual(const fisher_solution* s, int32_t which);

/* ---- proportional dynamics ---- */
FISHER_API fisher_status fisher_dynamics_run(const fisher_market* market, int32_t rounds,
                                             double tol_inner, double stop_early,
                                             fisher_trace** out);
FISHER_API void fisher_trace_free(fisher_trace* trace);
FISHER_API int32_t fisher_trace_rounds(const fisher_trace* trace);
FISHER_API int32_t fisher_trace_converged(const fisher_trace* trace);
FISHER_API double fisher_trace_phi(const fisher_trace* trace, int32_t round);
FISHER_API double fisher_trace_eg_objective(const fisher_trace* trace, int32_t round);
FISHER_API double fisher_trace_avg_gap(const fisher_trace* trace, int32_t round);
FISHER_API double fisher_trace_budget(const fisher_trace* trace, int32_t round, int32_t buyer,
                                      int32_t seller);
FISHER_API double fisher_trace_utility(const fisher_trace* trace, int32_t round, int32_t buyer,
                                       int32_t seller);
FISHER_API fisher_status fisher_trace_write_csv(const fisher_trace* trace, const char* path);

/* ---- audits, equilibrium of the seller game, property suite ---- */
FISHER_API fisher_status fisher_buyer_audit(const fisher_market* market, int32_t agent_or_minus1,
                                            int32_t resolution, fisher_table** out);
FISHER_API fisher_status fisher_seller_audit(const fisher_market* market, int32_t agent_or_minus1,
                                             fisher_table** out);
FISHER_API fisher_status fisher_pne(const fisher_market* market, double tol, int32_t restarts,
                                    fisher_table** out);
FISHER_API fisher_status fisher_suite(uint64_t seed_lo, uint64_t seed_hi, fisher_table** out);

FISHER_API void fisher_table_free(fisher_table* table);
FISHER_API int32_t fisher_table_rows(const fisher_table* table);
FISHER_API int32_t fisher_table_cols(const fisher_table* table);
FISHER_API const char* fisher_table_header(const fisher_table* table, int32_t col);
FISHER_API const char* fisher_table_cell(const fisher_table* table, int32_t row, int32_t col);
FISHER_API int32_t fisher_table_summary_lines(const fisher_table* table);
FISHER_API const char* fisher_table_summary(const fisher_table* table, int32_t line);
FISHER_API int32_t fisher_table_all_pass(const fisher_table* table);
FISHER_API const char* fisher_table_render(const fisher_table* table);
FISHER_API fisher_status fisher_table_write_csv(const fisher_table* table, const char* path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FISHER_FISHER_H */
