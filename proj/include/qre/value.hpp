#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qre {

class TypeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class CostKind { unit, boolean, integer, real, multiset, intset, tuple };

struct CostType {
  CostKind kind = CostKind::unit;
  std::vector<CostType> elems;  // tuple only

  static CostType unit() { return {CostKind::unit, {}}; }
  static CostType boolean() { return {CostKind::boolean, {}}; }
  static CostType integer() { return {CostKind::integer, {}}; }
  static CostType real() { return {CostKind::real, {}}; }
  static CostType multiset() { return {CostKind::multiset, {}}; }
  static CostType intset() { return {CostKind::intset, {}}; }
  static CostType tuple(std::vector<CostType> elems) { return {CostKind::tuple, std::move(elems)}; }

  bool numeric() const { return kind == CostKind::integer || kind == CostKind::real; }
  bool scalar() const { return numeric() || kind == CostKind::boolean; }

  bool operator==(const CostType&) const = default;
  std::string to_string() const;
};

/// Parses "int", "real", "bool", "unit", "multiset", "intset" and
/// "tuple(int,real,...)".
CostType parse_cost_type(std::string_view text);

class Value;

/// A cost value. Collections are immutable and shared, so copies are cheap.
class Value {
 public:
  struct Multiset {
    std::shared_ptr<const std::vector<double>> items;  // sorted
  };
  struct IntSet {
    std::shared_ptr<const std::vector<std::int64_t>> items;  // sorted, unique
  };
  struct Tuple {
    std::shared_ptr<const std::vector<Value>> items;
  };
  using Storage = std::variant<std::monostate, bool, std::int64_t, double, Multiset, IntSet, Tuple>;

  Value() = default;
  Value(bool b) : v_(b) {}
  Value(std::int64_t i) : v_(i) {}
  Value(int i) : v_(std::int64_t{i}) {}
  Value(double d) : v_(d) {}

  static Value unit() { return Value(); }
  static Value multiset(std::vector<double> items);
  static Value intset(std::vector<std::int64_t> items);
  static Value tuple(std::vector<Value> items);

  CostKind kind() const;
  CostType type() const;

  bool as_bool() const;
  std::int64_t as_int() const;
  double as_real() const;
  /// Numeric view of a scalar: booleans as 0/1, integers widened.
  double to_real() const;
  const std::vector<double>& as_multiset() const;
  const std::vector<std::int64_t>& as_intset() const;
  const std::vector<Value>& as_tuple() const;

  const Storage& storage() const { return v_; }

  bool operator==(const Value& rhs) const;
  std::string to_string() const;

 private:
  Storage v_;
};

/// Default (zero) value of a type: false, 0, 0.0, empty collections.
Value zero_value(const CostType& t);

/// Parses a literal of the given type ("3", "2.5", "true", "{1,2}", "(1,2.0)").
Value parse_value(std::string_view text, const CostType& t);

/// Shortest decimal form that reads back as the same double ("0.2", "1e-17").
std::string format_real(double x);

}  // namespace qre
