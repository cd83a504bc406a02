#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qre/value.hpp"

namespace qre {

/// Registry entry. Constant parameters (thresholds, window lengths) are part
/// of the operation reference, written name[p1,p2].
struct OpDef {
  std::string name;
  std::size_t min_params = 0;
  std::size_t max_params = 0;
  std::size_t min_args = 1;
  std::size_t max_args = 1;  // SIZE_MAX for variadic
  std::function<CostType(std::span<const double> params, std::span<const CostType> args)> type;
  std::function<Value(std::span<const double> params, std::span<const Value> args)> apply;
  std::string summary;
};

const std::vector<OpDef>& operation_table();
const OpDef* find_operation(std::string_view name);

/// An operation name resolved against the registry plus its constant
/// parameters.
class Operation {
 public:
  Operation(std::string_view name, std::vector<double> params = {});

  const std::string& name() const { return def_->name; }
  const std::vector<double>& params() const { return params_; }

  /// Result type for the given argument types; throws TypeError.
  CostType result_type(std::span<const CostType> args) const;
  Value apply(std::span<const Value> args) const { return def_->apply(params_, args); }

  std::string to_string() const;
  bool operator==(const Operation& rhs) const { return def_ == rhs.def_ && params_ == rhs.params_; }

 private:
  const OpDef* def_;
  std::vector<double> params_;
};

/// Tuple type used by the sliding-window operations: (count, x_1..x_L) with
/// the newest value last.
CostType window_type(std::size_t length);

}  // namespace qre
