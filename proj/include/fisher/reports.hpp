#pragma once

#include <string>
#include <vector>

#include "fisher/market.hpp"

namespace fisher {

/// Tabular result of an audit or batch run; what the C API and the CLI
/// print and write. Cells are preformatted so output is reproducible.
struct Report {
  std::string name;
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> summary;  // key=value lines, written as # comments
  bool all_pass = true;
};

void write_report_csv(const Report& report, const std::string& path);
std::string render_report(const Report& report);  // human-readable table

Report buyer_audit(const ValidatedMarket& vm, int agent, int resolution);
Report seller_audit(const ValidatedMarket& vm, int agent);
Report pne_report(const ValidatedMarket& vm, double tol, int restarts);

}  // namespace fisher
