#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qre/operations.hpp"
#include "qre/predicate.hpp"
#include "qre/regex.hpp"
#include "qre/value.hpp"

namespace qre {

/// A combinator side condition failed. `invariant()` names the rule, e.g.
/// "split.unambiguous" or "cost_op.equal_domains".
class ConstructionError : public std::invalid_argument {
 public:
  ConstructionError(std::string invariant, const std::string& what)
      : std::invalid_argument(invariant + ": " + what), invariant_(std::move(invariant)) {}
  const std::string& invariant() const { return invariant_; }

 private:
  std::string invariant_;
};

/// Arithmetic over the fields of one data item (the cost function of a basic
/// QRE). Integer-valued when every leaf is integral and no division occurs.
class ItemFn {
 public:
  enum class Kind { field, constant, neg, abs, sqr, add, sub, mul, div };

  static ItemFn field(const SchemaPtr& schema, std::string_view name);
  static ItemFn constant(Value v);  // int or real
  static ItemFn unary(Kind k, ItemFn a);
  static ItemFn binary(Kind k, ItemFn a, ItemFn b);

  const CostType& type() const { return node_->type; }
  Value eval(std::span<const double> item) const;
  std::string to_string() const;

 private:
  struct Node {
    Kind kind;
    std::size_t field = 0;
    std::string name;
    double value = 0;
    CostType type;
    std::vector<ItemFn> kids;
  };
  explicit ItemFn(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  double eval_real(std::span<const double> item) const;
  std::shared_ptr<const Node> node_;
};

/// Parameter-only term usable as a cost-operation operand.
class CostTerm {
 public:
  enum class Kind { param, constant, apply };

  static CostTerm param(std::string name, CostType type);
  static CostTerm constant(Value v);
  static CostTerm apply(Operation op, std::vector<CostTerm> args);

  Kind kind() const { return node_->kind; }
  const std::string& name() const { return node_->name; }
  const Value& value() const { return node_->value; }
  const Operation& op() const { return *node_->op; }
  const std::vector<CostTerm>& args() const { return node_->args; }
  const CostType& type() const { return node_->type; }

  std::string to_string() const;

 private:
  struct Node {
    Kind kind;
    std::string name;
    Value value;
    std::optional<Operation> op;
    std::vector<CostTerm> args;
    CostType type;
  };
  explicit CostTerm(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct Parameter {
  std::string name;
  CostType type;

  bool operator==(const Parameter&) const = default;
};

using Valuation = std::map<std::string, Value, std::less<>>;

class Qre;

/// Operand of a cost operation: either a sub-expression or a term.
struct Operand {
  std::shared_ptr<const Qre> qre;
  std::optional<CostTerm> term;
};

/// Quantitative regular expression. Immutable; build with the make_*
/// functions, which check every combinator side condition.
class Qre {
 public:
  enum class Kind { basic, cost_op, subst, else_, split, iter, compose };

  Kind kind() const { return node_->kind; }
  const SchemaPtr& schema() const { return node_->schema; }
  const Regex& domain() const { return *node_->domain; }
  /// False for a stream composition whose defined-set is not characterized
  /// by `domain()` (the inner expression is partial).
  bool exact_domain() const { return node_->exact; }
  const std::vector<Parameter>& params() const { return node_->params; }
  const Parameter* find_param(std::string_view name) const;
  const CostType& type() const { return node_->type; }
  std::uint64_t id() const { return node_->id; }

  const Predicate& predicate() const { return *node_->pred; }
  const ItemFn& fn() const { return *node_->fn; }
  const Operation& op() const { return *node_->op; }
  const std::vector<Operand>& operands() const { return node_->operands; }
  const Qre& left() const { return *node_->kids.at(0); }
  const Qre& right() const { return *node_->kids.at(1); }
  const Qre& inner() const { return *node_->kids.at(0); }
  /// Substituted parameter (subst) or iteration parameter (iter).
  const std::string& var() const { return node_->var; }
  /// Initial value of a seeded iteration, whose parameter is then bound
  /// rather than free.
  const std::optional<Value>& seed() const { return node_->seed; }

  std::size_t size() const { return node_->size; }
  std::string to_string() const;

 private:
  struct Node {
    Kind kind;
    SchemaPtr schema;
    std::optional<Regex> domain;
    bool exact = true;
    std::vector<Parameter> params;
    CostType type;
    std::uint64_t id = 0;
    std::optional<Predicate> pred;
    std::optional<ItemFn> fn;
    std::optional<Operation> op;
    std::vector<Operand> operands;
    std::vector<std::shared_ptr<const Qre>> kids;
    std::string var;
    std::optional<Value> seed;
    std::size_t size = 1;
  };
  explicit Qre(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;

  friend class QreBuilder;
};

using QrePtr = std::shared_ptr<const Qre>;

QrePtr make_basic(Predicate phi, ItemFn lambda);
QrePtr make_cost_op(Operation op, std::vector<Operand> operands);
QrePtr make_cost_op(Operation op, std::vector<QrePtr> children);
QrePtr make_subst(QrePtr f, std::string x, QrePtr g);
QrePtr make_else(QrePtr f, QrePtr g);
QrePtr make_split(Operation op, QrePtr f, QrePtr g);
/// iter[p>(f). Without a seed, p is a free parameter whose value the
/// valuation supplies; with a seed, p is bound and does not appear in X.
QrePtr make_iter(std::string p, QrePtr f, std::optional<Value> seed = std::nullopt);
QrePtr make_stream_compose(QrePtr f, QrePtr g);

inline Operand operand(QrePtr q) { return Operand{std::move(q), std::nullopt}; }
inline Operand operand(CostTerm t) { return Operand{nullptr, std::move(t)}; }

/// Single-field schema {x: kind} used for the input of a composed consumer.
SchemaPtr scalar_schema(const CostType& t, std::string field = "x");

/// Fresh parameter name with the given stem ("p" -> "p'17"), used by the
/// expression libraries so that combined expressions never share names.
std::string fresh_param(std::string_view stem);

/// The restriction of `v` to the parameters of f; throws
/// std::invalid_argument when a parameter is missing or mistyped.
Valuation complete_valuation(const Qre& f, const Valuation& v);

}  // namespace qre
