#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qre {

/// Raised when an item or predicate does not fit the schema it is used with.
class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FieldKind { real, integer, boolean, enumeration };

struct Field {
  std::string name;
  FieldKind kind = FieldKind::real;
  std::vector<std::string> labels;  // enumeration only

  bool operator==(const Field&) const = default;
};

/// Ordered record layout of a data item.
///
/// Items are stored as one double per field: booleans as 0/1, enumerations as
/// the label index. This keeps item access uniform for predicate evaluation.
class Schema {
 public:
  explicit Schema(std::vector<Field> fields);

  static std::shared_ptr<const Schema> make(std::vector<Field> fields);

  std::size_t size() const { return fields_.size(); }
  const Field& field(std::size_t i) const { return fields_.at(i); }
  const std::vector<Field>& fields() const { return fields_; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::size_t require(std::string_view name) const;

  /// Label index for an enumeration field, throws SchemaError if absent.
  std::size_t label_index(std::size_t field, std::string_view label) const;

  /// Throws SchemaError unless `item` has one admissible value per field.
  void validate(std::span<const double> item) const;

  std::string to_string() const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<Field> fields_;
};

using SchemaPtr = std::shared_ptr<const Schema>;
using Item = std::vector<double>;

bool same_schema(const SchemaPtr& a, const SchemaPtr& b);

enum class Cmp { lt, le, eq, ge, gt };

const char* to_string(Cmp c);

/// Axis-aligned constraint region: one interval per field.
///
/// Integer-like fields (integer, boolean, enumeration) keep closed integral
/// bounds; real fields track open/closed endpoints.
struct Box {
  struct Interval {
    double lo;
    double hi;
    bool lo_open = false;
    bool hi_open = false;
  };
  std::vector<Interval> dims;

  static Box full(const Schema& schema);
  bool empty(const Schema& schema) const;
  bool constrain(const Schema& schema, std::size_t field, Cmp cmp, double value);
  std::optional<Box> intersect(const Schema& schema, const Box& other) const;
  /// Deterministic member: midpoints of bounded intervals, the closed
  /// endpoint (or one unit inside an open one) of half-bounded intervals,
  /// zero when unbounded.
  Item witness(const Schema& schema) const;
};

/// Boolean formula over single-item interval constraints.
class Predicate {
 public:
  enum class Kind { truth, falsity, atom, conj, disj, neg };

  static Predicate always(SchemaPtr schema);
  static Predicate never(SchemaPtr schema);
  static Predicate compare(SchemaPtr schema, std::string_view field, Cmp cmp, double value);
  /// Enumeration or boolean equality against a label ("A", "true", ...).
  static Predicate is_label(SchemaPtr schema, std::string_view field, std::string_view label);

  Predicate operator&(const Predicate& rhs) const;
  Predicate operator|(const Predicate& rhs) const;
  Predicate operator!() const;

  Kind kind() const { return node_->kind; }
  const SchemaPtr& schema() const { return node_->schema; }
  std::size_t field() const { return node_->field; }
  Cmp cmp() const { return node_->cmp; }
  double constant() const { return node_->value; }
  const std::vector<Predicate>& children() const { return node_->children; }

  bool eval(std::span<const double> item) const;

  /// Disjunctive normal form as a list of nonempty boxes.
  std::vector<Box> dnf() const;
  std::vector<Box> dnf_negated() const;

  /// Canonical text, usable as a structural identity key.
  const std::string& key() const { return node_->key; }
  std::string to_string() const { return node_->key; }

  bool operator==(const Predicate& rhs) const { return key() == rhs.key(); }

 private:
  struct Node {
    Kind kind;
    SchemaPtr schema;
    std::size_t field = 0;
    Cmp cmp = Cmp::eq;
    double value = 0.0;
    std::vector<Predicate> children;
    std::string key;
  };
  explicit Predicate(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Predicate make(Node node);
  bool eval_unchecked(std::span<const double> item) const;
  std::vector<Box> dnf_impl(bool negated) const;

  std::shared_ptr<const Node> node_;
};

bool pred_eval(const Predicate& p, std::span<const double> item);
bool pred_sat(const Predicate& p);

}  // namespace qre
