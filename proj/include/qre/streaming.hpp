#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "qre/expr.hpp"

namespace qre {

/// Incremental evaluator for one expression and one initial valuation.
///
/// Each combinator instance keeps its own state. Split and iteration keep a
/// set of partial matches, one per automaton state of the right operand (resp.
/// the body), so the state never grows with the number of items consumed.
/// Substitution defers the substituted parameter as a symbolic term that is
/// resolved whenever both sides are defined.
class StreamEvaluator {
 public:
  StreamEvaluator(QrePtr f, const Valuation& v = {});
  /// Copies are independent: stepping one leaves the other unchanged.
  StreamEvaluator(const StreamEvaluator& o);
  StreamEvaluator& operator=(const StreamEvaluator& o);
  StreamEvaluator(StreamEvaluator&&) noexcept;
  StreamEvaluator& operator=(StreamEvaluator&&) noexcept;
  ~StreamEvaluator();

  /// Consumes one item; throws SchemaError if it does not fit the schema.
  void step(std::span<const double> item);
  /// Value on the prefix consumed so far, nullopt when undefined.
  std::optional<Value> output() const;

  std::size_t consumed() const;
  /// Total number of combinator-instance steps performed so far.
  std::uint64_t activations() const;
  /// Number of live combinator instances (for diagnostics).
  std::size_t instances() const;

  const Qre& expression() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

StreamEvaluator compile_streaming(QrePtr f, const Valuation& v = {});

/// Outputs after each prefix of w, starting with the empty prefix.
std::vector<std::optional<Value>> eval_streaming(QrePtr f, std::span<const Item> w, const Valuation& v = {});

}  // namespace qre
