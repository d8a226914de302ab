#include "fisher/market.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace fisher {

int MarketSpec::sellers() const {
  int k = -1;
  for (int s : seller_of) k = std::max(k, s);
  return k + 1;
}

ValidationFailed::ValidationFailed(std::vector<Violation> v)
    : std::invalid_argument(v.empty() ? "validation failed"
                                      : "validation failed: " + v.front().message),
      violations(std::move(v)) {}

std::vector<Violation> validate(const MarketSpec& spec) {
  std::vector<Violation> out;
  const int n = spec.buyers();
  const int m = spec.items();
  if (n < 1 || m < 1 || spec.values.rows != n || spec.values.cols != m ||
      static_cast<int>(spec.seller_of.size()) != m) {
    out.push_back({ViolationCode::ShapeMismatch,
                   "budgets/values/seller_of dimensions are inconsistent"});
    return out;
  }
  for (int i = 0; i < n; ++i) {
    if (!(spec.budgets[static_cast<std::size_t>(i)] > 0.0)) {
      out.push_back({ViolationCode::ZeroBudget,
                     "buyer " + std::to_string(i) + " has non-positive budget"});
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (spec.values(i, j) < 0.0) {
        out.push_back({ViolationCode::NegativeValue,
                       "values[" + std::to_string(i) + "][" + std::to_string(j) + "] < 0"});
      }
  for (int j = 0; j < m; ++j) {
    bool any = false;
    for (int i = 0; i < n; ++i) any = any || spec.values(i, j) > 0.0;
    if (!any) {
      out.push_back({ViolationCode::OrphanItem,
                     "item " + std::to_string(j) + " has no buyer with positive value"});
    }
  }
  const int k = spec.sellers();
  if (k < 1) {
    out.push_back({ViolationCode::EmptySellerGroup, "no sellers"});
    return out;
  }
  std::vector<int> count(static_cast<std::size_t>(k), 0);
  for (int s : spec.seller_of) {
    if (s < 0) {
      out.push_back({ViolationCode::ShapeMismatch, "negative seller index"});
      return out;
    }
    ++count[static_cast<std::size_t>(s)];
  }
  for (int s = 0; s < k; ++s)
    if (count[static_cast<std::size_t>(s)] == 0) {
      out.push_back({ViolationCode::EmptySellerGroup,
                     "seller " + std::to_string(s) + " owns no items"});
    }
  return out;
}

ValidatedMarket validate_or_throw(const MarketSpec& spec) {
  auto violations = validate(spec);
  if (!violations.empty()) throw ValidationFailed(std::move(violations));
  ValidatedMarket vm;
  vm.spec = spec;
  vm.total_budget = std::accumulate(spec.budgets.begin(), spec.budgets.end(), 0.0);
  vm.seller_items.assign(static_cast<std::size_t>(spec.sellers()), {});
  for (int j = 0; j < spec.items(); ++j)
    vm.seller_items[static_cast<std::size_t>(spec.seller_of[static_cast<std::size_t>(j)])]
        .push_back(j);
  vm.positive_sellers.assign(static_cast<std::size_t>(spec.buyers()), {});
  for (int i = 0; i < spec.buyers(); ++i) {
    for (int k = 0; k < spec.sellers(); ++k) {
      bool any = false;
      for (int j : vm.seller_items[static_cast<std::size_t>(k)])
        any = any || spec.values(i, j) > 0.0;
      if (any) vm.positive_sellers[static_cast<std::size_t>(i)].push_back(k);
    }
  }
  return vm;
}

namespace {

double next_unit(std::mt19937_64& rng) {
  // 53-bit mantissa draw in [0, 1); bit-stable across platforms.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double draw_value(std::mt19937_64& rng, const GeneratorOptions& opts) {
  switch (opts.distribution) {
    case ValueDistribution::Uniform01:
      return next_unit(rng);
    case ValueDistribution::Lognormal: {
      // Box-Muller with explicit formulas so the stream is reproducible.
      double u1 = 1.0 - next_unit(rng);
      double u2 = next_unit(rng);
      double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      return std::exp(z);
    }
    case ValueDistribution::Sparse: {
      double gate = next_unit(rng);
      double val = next_unit(rng);
      return gate < opts.sparse_zero_fraction ? 0.0 : val;
    }
  }
  return 0.0;
}

}  // namespace

MarketSpec generate_market(std::uint64_t seed, int buyers, int items, int sellers,
                           const GeneratorOptions& opts) {
  if (buyers < 1 || items < 1 || sellers < 1)
    throw InfeasibleShape("buyers, items and sellers must all be at least 1");
  if (items < sellers) throw InfeasibleShape("fewer items than sellers");

  std::mt19937_64 rng(seed);
  MarketSpec spec;
  spec.budgets.resize(static_cast<std::size_t>(buyers));
  for (int i = 0; i < buyers; ++i) spec.budgets[static_cast<std::size_t>(i)] = 0.5 + next_unit(rng);

  spec.values = Matrix(buyers, items);
  for (int i = 0; i < buyers; ++i)
    for (int j = 0; j < items; ++j) spec.values(i, j) = draw_value(rng, opts);

  // Resample until every column and every row has a positive entry.
  for (int attempt = 0;; ++attempt) {
    bool clean = true;
    for (int j = 0; j < items; ++j) {
      bool any = false;
      for (int i = 0; i < buyers; ++i) any = any || spec.values(i, j) > 0.0;
      if (!any) {
        clean = false;
        for (int i = 0; i < buyers; ++i) spec.values(i, j) = draw_value(rng, opts);
      }
    }
    for (int i = 0; i < buyers; ++i) {
      bool any = false;
      for (int j = 0; j < items; ++j) any = any || spec.values(i, j) > 0.0;
      if (!any) {
        clean = false;
        for (int j = 0; j < items; ++j) spec.values(i, j) = draw_value(rng, opts);
      }
    }
    if (clean) break;
    if (attempt > 10000)
      throw InfeasibleShape("value distribution too sparse to populate every row and column");
  }

  spec.seller_of.resize(static_cast<std::size_t>(items));
  for (int j = 0; j < items; ++j) spec.seller_of[static_cast<std::size_t>(j)] = j % sellers;
  for (int j = items - 1; j > 0; --j) {
    int r = static_cast<int>(rng() % static_cast<std::uint64_t>(j + 1));
    std::swap(spec.seller_of[static_cast<std::size_t>(j)],
              spec.seller_of[static_cast<std::size_t>(r)]);
  }
  return spec;
}

GeneratorOptions parse_distribution(const std::string& text) {
  GeneratorOptions opts;
  if (text == "uniform01") {
    opts.distribution = ValueDistribution::Uniform01;
    return opts;
  }
  if (text == "lognormal") {
    opts.distribution = ValueDistribution::Lognormal;
    return opts;
  }
  if (text.rfind("sparse(", 0) == 0 && text.back() == ')') {
    opts.distribution = ValueDistribution::Sparse;
    opts.sparse_zero_fraction = std::stod(text.substr(7, text.size() - 8));
    if (opts.sparse_zero_fraction < 0.0 || opts.sparse_zero_fraction >= 1.0)
      throw std::invalid_argument("sparse fraction must lie in [0, 1)");
    return opts;
  }
  throw std::invalid_argument("unknown distribution '" + text +
                              "' (expected uniform01, lognormal or sparse(p))");
}

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

using nlohmann::json;

std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t p = 0; p < byte && p < text.size(); ++p)
    if (text[p] == '\n') ++line;
  return line;
}

const json& require_field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end())
    throw ParseError(name, 0, std::string("missing required field '") + name + "'");
  return *it;
}

std::vector<double> read_number_array(const json& node, const std::string& field) {
  if (!node.is_array()) throw ParseError(field, 0, "field '" + field + "' must be an array");
  std::vector<double> out;
  out.reserve(node.size());
  for (const auto& v : node) {
    if (!v.is_number()) throw ParseError(field, 0, "field '" + field + "' must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Matrix read_matrix(const json& node, const std::string& field) {
  if (!node.is_array() || node.empty())
    throw ParseError(field, 0, "field '" + field + "' must be a non-empty array of rows");
  Matrix m;
  m.rows = static_cast<int>(node.size());
  auto first = read_number_array(node[0], field);
  m.cols = static_cast<int>(first.size());
  m.data.reserve(static_cast<std::size_t>(m.rows) * m.cols);
  m.data.insert(m.data.end(), first.begin(), first.end());
  for (std::size_t r = 1; r < node.size(); ++r) {
    auto row = read_number_array(node[r], field);
    if (static_cast<int>(row.size()) != m.cols)
      throw ParseError(field, 0, "field '" + field + "' has ragged rows");
    m.data.insert(m.data.end(), row.begin(), row.end());
  }
  return m;
}

void append_row(std::string& out, std::span<const double> row) {
  out += '[';
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j) out += ", ";
    out += format_real(row[j]);
  }
  out += ']';
}

}  // namespace

MarketFile parse_market(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", line_of_offset(text, e.byte), e.what());
  }
  if (!doc.is_object()) throw ParseError("", 1, "market file must be a JSON object");

  MarketFile out;
  out.spec.budgets = read_number_array(require_field(doc, "budgets"), "budgets");
  out.spec.values = read_matrix(require_field(doc, "values"), "values");
  const json& sel = require_field(doc, "seller_of");
  if (!sel.is_array()) throw ParseError("seller_of", 0, "field 'seller_of' must be an array");
  for (const auto& v : sel) {
    if (!v.is_number_integer())
      throw ParseError("seller_of", 0, "field 'seller_of' must contain integers");
    out.spec.seller_of.push_back(v.get<int>());
  }
  if (doc.contains("boosts")) {
    Matrix b = read_matrix(doc["boosts"], "boosts");
    if (b.rows != out.spec.buyers() || b.cols != out.spec.items())
      throw ParseError("boosts", 0, "field 'boosts' must be a buyers-by-items matrix");
    out.boosts = std::move(b);
  }
  if (out.spec.values.rows != out.spec.buyers())
    throw ParseError("values", 0, "field 'values' must have one row per buyer");
  if (out.spec.values.cols != out.spec.items())
    throw ParseError("values", 0, "field 'values' must have one column per seller_of entry");
  return out;
}

MarketFile load_market(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open market file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_market(ss.str());
}

std::string serialize_market(const MarketSpec& spec, const Matrix* boosts) {
  // Hand-rolled writer: fixed key order and 17-significant-digit reals so
  // that save/load round-trips are bit-exact and files are reproducible.
  std::string out = "{\n  \"budgets\": ";
  append_row(out, std::span<const double>(spec.budgets));
  out += ",\n  \"values\": [\n";
  for (int i = 0; i < spec.values.rows; ++i) {
    out += "    ";
    append_row(out, spec.values.row(i));
    out += i + 1 < spec.values.rows ? ",\n" : "\n";
  }
  out += "  ],\n  \"seller_of\": [";
  for (std::size_t j = 0; j < spec.seller_of.size(); ++j) {
    if (j) out += ", ";
    out += std::to_string(spec.seller_of[j]);
  }
  out += ']';
  if (boosts != nullptr) {
    out += ",\n  \"boosts\": [\n";
    for (int i = 0; i < boosts->rows; ++i) {
      out += "    ";
      append_row(out, boosts->row(i));
      out += i + 1 < boosts->rows ? ",\n" : "\n";
    }
    out += "  ]";
  }
  out += "\n}\n";
  return out;
}

void save_market(const MarketSpec& spec, const std::string& path, const Matrix* boosts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write market file '" + path + "'");
  out << serialize_market(spec, boosts);
}

Matrix parse_boosts(const std::string& text, int buyers, int items) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", line_of_offset(text, e.byte), e.what());
  }
  Matrix b = doc.is_object() ? read_matrix(require_field(doc, "boosts"), "boosts")
                             : read_matrix(doc, "boosts");
  if (b.rows != buyers || b.cols != items)
    throw ParseError("boosts", 0, "boosts must be a buyers-by-items matrix");
  for (double v : b.data)
    if (v < 0.0) throw ParseError("boosts", 0, "boosts must be non-negative");
  return b;
}

Matrix load_boosts(const std::string& path, int buyers, int items) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open boosts file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_boosts(ss.str(), buyers, items);
}

}  // namespace fisher
