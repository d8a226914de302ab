#include "fisher/reports.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fisher/dynamics.hpp"
#include "fisher/equilibrium.hpp"
#include "fisher/incentives.hpp"
#include "fisher/seller_game.hpp"

namespace fisher {

void write_report_csv(const Report& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report file '" + path + "'");
  for (std::size_t c = 0; c < report.headers.size(); ++c)
    out << (c ? "," : "") << report.headers[c];
  out << '\n';
  for (const auto& row : report.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
  for (const auto& line : report.summary) out << "# " << line << '\n';
}

std::string render_report(const Report& report) {
  std::vector<std::size_t> widths(report.headers.size(), 0);
  auto grow = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size() && c < widths.size(); ++c)
      widths[c] = std::max(widths[c], row[c].size());
  };
  grow(report.headers);
  for (const auto& row : report.rows) grow(row);

  std::ostringstream out;
  out << report.name << '\n';
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c ? "  " : "") << row[c];
      for (std::size_t pad = row[c].size(); pad < widths[c]; ++pad) out << ' ';
    }
    out << '\n';
  };
  emit(report.headers);
  for (const auto& row : report.rows) emit(row);
  for (const auto& line : report.summary) out << line << '\n';
  return out.str();
}

Report buyer_audit(const ValidatedMarket& vm, int agent, int resolution) {
  Report rep;
  rep.name = "buyer deviation audit";
  rep.headers = {"agent", "baseline_value", "best_response_value", "ratio", "bound", "pass"};

  SolveOptions opts;
  opts.tol = 1e-10;
  MarketEquilibrium ce = solve_market_ce(vm, opts);

  std::vector<int> agents;
  if (agent < 0)
    for (int i = 0; i < vm.spec.buyers(); ++i) agents.push_back(i);
  else
    agents.push_back(agent);

  for (int i : agents) {
    BuyerDeviationReport dev = buyer_deviation_report(vm, i, ce.budget_split, resolution);
    double bound = 2.0 + dev.grid_slack / dev.proportional_utility;
    bool pass = dev.ratio <= bound && dev.ratio >= 1.0 - 1e-6;
    rep.all_pass = rep.all_pass && pass;
    rep.rows.push_back({std::to_string(i), format_real(dev.proportional_utility),
                        format_real(dev.best_utility), format_real(dev.ratio), format_real(bound),
                        pass ? "1" : "0"});
    rep.summary.push_back("buyer_" + std::to_string(i) +
                          "_bang_per_buck_spread=" + format_real(dev.spread));
  }
  return rep;
}

Report seller_audit(const ValidatedMarket& vm, int agent) {
  Report rep;
  rep.name = "seller deviation audit";
  rep.headers = {"agent", "baseline_value", "best_response_value", "ratio", "bound", "pass"};

  std::vector<int> agents;
  if (agent < 0)
    for (int k = 0; k < vm.spec.sellers(); ++k) agents.push_back(k);
  else
    agents.push_back(agent);

  double worst_gap = 0.0;
  for (int k : agents) {
    SellerDeviationReport dev = incentive_ratio(vm, k, 1e-6);
    bool pass = dev.ratio <= 5.0 && dev.ratio >= 1.0 - 1e-6 && dev.fw_gap < 1e-7;
    rep.all_pass = rep.all_pass && pass;
    worst_gap = std::max(worst_gap, dev.fw_gap);
    rep.rows.push_back({std::to_string(k), format_real(dev.ce_revenue),
                        format_real(dev.best_revenue), format_real(dev.ratio), "5",
                        pass ? "1" : "0"});
    if (dev.floor_clamps > 0)
      rep.summary.push_back("seller_" + std::to_string(k) + "_floor_clamps=" +
                            std::to_string(dev.floor_clamps));
  }
  rep.summary.push_back("worst_frank_wolfe_gap=" + format_real(worst_gap));
  return rep;
}

Report pne_report(const ValidatedMarket& vm, double tol, int restarts) {
  Report rep;
  rep.name = "seller competition equilibrium";
  rep.headers = {"seller", "buyer", "utility", "revenue"};

  PneResult first = solve_pne(vm, tol, 1000, 0);
  double disagreement = 0.0;
  bool all_converged = first.converged;
  for (int r = 1; r < restarts; ++r) {
    PneResult other = solve_pne(vm, tol, 1000, static_cast<std::uint64_t>(r));
    all_converged = all_converged && other.converged;
    for (std::size_t e = 0; e < first.profile.utilities.data.size(); ++e)
      disagreement = std::max(disagreement, std::abs(first.profile.utilities.data[e] -
                                                     other.profile.utilities.data[e]));
  }

  for (int k = 0; k < vm.spec.sellers(); ++k)
    for (int i = 0; i < vm.spec.buyers(); ++i)
      rep.rows.push_back({std::to_string(k), std::to_string(i),
                          format_real(first.profile.utilities(i, k)),
                          format_real(first.revenues[static_cast<std::size_t>(k)])});

  PneVerification ver = verify_pne(vm, first.profile, std::max(tol, 1e-6 * vm.total_budget));
  FairnessReport fair = fairness(vm, first.profile, 1e-6);

  rep.all_pass = all_converged && ver.pass && fair.pass &&
                 (restarts < 2 || disagreement <= 10.0 * tol);
  rep.summary.push_back("converged=" + std::string(all_converged ? "1" : "0"));
  rep.summary.push_back("rounds=" + std::to_string(first.rounds));
  rep.summary.push_back("restart_disagreement=" + format_real(disagreement));
  rep.summary.push_back("max_improvement=" + format_real(ver.max_improvement));
  rep.summary.push_back("delta=" + format_real(fair.delta));
  rep.summary.push_back("nsw_pne=" + format_real(fair.nsw_pne));
  rep.summary.push_back("nsw_ce=" + format_real(fair.nsw_ce));
  rep.summary.push_back("nsw_ratio=" + format_real(fair.ratio));
  rep.summary.push_back("nsw_bound=" + format_real(fair.bound));
  return rep;
}

}  // namespace fisher
