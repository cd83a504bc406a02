#pragma once

#include <optional>
#include <span>

#include "qre/expr.hpp"

namespace qre {

/// Denotational evaluation by structural recursion over unique splits and
/// factorizations. Quadratic (or worse) in |w|; meant as a test oracle and for
/// one-off queries. nullopt stands for the undefined value.
std::optional<Value> eval_reference(const Qre& f, std::span<const Item> w, const Valuation& v = {});

/// Value of a parameter term under a valuation.
Value eval_term(const CostTerm& t, const Valuation& v);

/// Converts a scalar cost to a one-field item for a composed consumer.
Item scalar_item(const Value& v);

}  // namespace qre
