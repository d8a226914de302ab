#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fisher/errors.hpp"
#include "fisher/matrix.hpp"

namespace fisher {

/// A linear market: buyers with fixed budgets buy divisible unit-supply
/// items that are partitioned among sellers. values(i, j) is buyer i's
/// value per unit of item j; seller_of[j] is the owner of item j.
struct MarketSpec {
  std::vector<double> budgets;
  Matrix values;
  std::vector<int> seller_of;

  int buyers() const { return static_cast<int>(budgets.size()); }
  int items() const { return static_cast<int>(seller_of.size()); }
  int sellers() const;

  bool operator==(const MarketSpec&) const = default;
};

enum class ViolationCode {
  ZeroBudget,
  OrphanItem,        // no buyer values the item
  EmptySellerGroup,  // seller index range has a gap
  NegativeValue,
  ShapeMismatch,
};

struct Violation {
  ViolationCode code;
  std::string message;
};

struct ValidationFailed : std::invalid_argument {
  std::vector<Violation> violations;
  explicit ValidationFailed(std::vector<Violation> v);
};

/// Spec plus derived quantities every solver needs.
struct ValidatedMarket {
  MarketSpec spec;
  double total_budget = 0.0;
  std::vector<std::vector<int>> seller_items;      // items of seller k, ascending
  std::vector<std::vector<int>> positive_sellers;  // sellers buyer i values, ascending
};

std::vector<Violation> validate(const MarketSpec& spec);
ValidatedMarket validate_or_throw(const MarketSpec& spec);

enum class ValueDistribution { Uniform01, Lognormal, Sparse };

struct GeneratorOptions {
  ValueDistribution distribution = ValueDistribution::Uniform01;
  double sparse_zero_fraction = 0.5;  // probability of a zero entry under Sparse
};

/// Deterministic instance generator. Items go to sellers round-robin and are
/// then shuffled by the seed; all-zero value columns and rows are resampled
/// so every item has an interested buyer and every buyer values something.
MarketSpec generate_market(std::uint64_t seed, int buyers, int items, int sellers,
                           const GeneratorOptions& opts = {});

/// "uniform01" | "lognormal" | "sparse(p)"
GeneratorOptions parse_distribution(const std::string& text);

struct MarketFile {
  MarketSpec spec;
  std::optional<Matrix> boosts;
};

MarketFile parse_market(const std::string& text);
MarketFile load_market(const std::string& path);
std::string serialize_market(const MarketSpec& spec, const Matrix* boosts = nullptr);
void save_market(const MarketSpec& spec, const std::string& path, const Matrix* boosts = nullptr);

/// Boost file: either a bare n-by-m array or an object with a "boosts" field.
Matrix parse_boosts(const std::string& text, int buyers, int items);
Matrix load_boosts(const std::string& path, int buyers, int items);

/// Shortest decimal form that round-trips a double (17 significant digits).
std::string format_real(double x);

}  // namespace fisher
