#include "qre/operations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "qre/mdt.hpp"

namespace qre {

namespace {

constexpr std::size_t kVariadic = std::numeric_limits<std::size_t>::max();

using Params = std::span<const double>;
using Types = std::span<const CostType>;
using Args = std::span<const Value>;

void need_numeric(const std::string& op, Types args) {
  for (const auto& t : args)
    if (!t.numeric()) throw TypeError(op + ": expected numeric operands, got " + t.to_string());
}

CostType numeric_join(const std::string& op, Types args) {
  need_numeric(op, args);
  for (const auto& t : args)
    if (t.kind == CostKind::real) return CostType::real();
  return CostType::integer();
}

bool all_int(Args args) {
  for (const auto& a : args)
    if (a.kind() != CostKind::integer) return false;
  return true;
}

std::size_t window_length(const std::string& op, Params p) {
  double l = p[0];
  if (!(l >= 1) || l != std::floor(l) || l > 1e6) throw TypeError(op + ": window length must be a positive integer");
  return static_cast<std::size_t>(l);
}

void need_window(const std::string& op, Params p, const CostType& t) {
  if (!(t == window_type(window_length(op, p))))
    throw TypeError(op + ": expected " + window_type(window_length(op, p)).to_string() + ", got " + t.to_string());
}

// Values currently held by a window, oldest first.
std::vector<double> window_values(const Value& w) {
  const auto& t = w.as_tuple();
  auto len = t.size() - 1;
  auto count = static_cast<std::size_t>(std::min<std::int64_t>(t[0].as_int(), static_cast<std::int64_t>(len)));
  std::vector<double> out;
  for (std::size_t i = len - count; i < len; ++i) out.push_back(t[i + 1].as_real());
  return out;
}

std::vector<std::int64_t> conn_step(const std::vector<std::int64_t>& x, const std::vector<std::int64_t>& y,
                                    double delta) {
  std::vector<std::int64_t> out;
  for (auto v : y) {
    // x is sorted: the nearest candidates bracket v.
    auto it = std::lower_bound(x.begin(), x.end(), v);
    bool hit = (it != x.end() && std::abs(static_cast<double>(*it - v)) <= delta) ||
               (it != x.begin() && std::abs(static_cast<double>(v - *std::prev(it))) <= delta);
    if (hit) out.push_back(v);
  }
  return out;
}

std::vector<OpDef> build_table() {
  std::vector<OpDef> t;

  auto arith = [&](std::string name, auto fi, auto fd, std::string summary) {
    t.push_back({name, 0, 0, 2, 2, [name](Params, Types a) { return numeric_join(name, a); },
                 [fi, fd](Params, Args a) -> Value {
                   if (all_int(a)) return Value(fi(a[0].as_int(), a[1].as_int()));
                   return Value(fd(a[0].to_real(), a[1].to_real()));
                 },
                 summary});
  };
  arith("add", [](std::int64_t x, std::int64_t y) { return x + y; }, [](double x, double y) { return x + y; },
        "x + y");
  arith("diff", [](std::int64_t x, std::int64_t y) { return x - y; }, [](double x, double y) { return x - y; },
        "x - y");
  arith("mult", [](std::int64_t x, std::int64_t y) { return x * y; }, [](double x, double y) { return x * y; },
        "x * y");

  t.push_back({"div", 0, 0, 2, 2,
               [](Params, Types a) {
                 need_numeric("div", a);
                 return CostType::real();
               },
               [](Params, Args a) { return Value(a[0].to_real() / a[1].to_real()); }, "x / y (real)"});

  auto extremum = [&](std::string name, bool want_max) {
    t.push_back({name, 0, 0, 1, kVariadic, [name](Params, Types a) { return numeric_join(name, a); },
                 [want_max](Params, Args a) -> Value {
                   if (all_int(a)) {
                     std::int64_t m = a[0].as_int();
                     for (const auto& v : a) m = want_max ? std::max(m, v.as_int()) : std::min(m, v.as_int());
                     return Value(m);
                   }
                   double m = a[0].to_real();
                   for (const auto& v : a) m = want_max ? std::max(m, v.to_real()) : std::min(m, v.to_real());
                   return Value(m);
                 },
                 want_max ? "largest operand" : "smallest operand"});
  };
  extremum("max", true);
  extremum("min", false);

  t.push_back({"sum", 0, 0, 1, kVariadic, [](Params, Types a) { return numeric_join("sum", a); },
               [](Params, Args a) -> Value {
                 if (all_int(a)) {
                   std::int64_t s = 0;
                   for (const auto& v : a) s += v.as_int();
                   return Value(s);
                 }
                 double s = 0;
                 for (const auto& v : a) s += v.to_real();
                 return Value(s);
               },
               "sum of operands"});

  t.push_back({"avg", 0, 0, 1, kVariadic,
               [](Params, Types a) {
                 need_numeric("avg", a);
                 return CostType::real();
               },
               [](Params, Args a) {
                 double s = 0;
                 for (const auto& v : a) s += v.to_real();
                 return Value(s / static_cast<double>(a.size()));
               },
               "mean of operands"});

  t.push_back({"gt", 0, 0, 2, 2,
               [](Params, Types a) {
                 need_numeric("gt", a);
                 return CostType::boolean();
               },
               [](Params, Args a) -> Value {
                 if (all_int(a)) return Value(a[0].as_int() >= a[1].as_int());
                 return Value(a[0].to_real() >= a[1].to_real());
               },
               "x >= y"});

  // 0.8x >= y evaluated as 4x >= 5y, exact for integers and for reals whose
  // products are representable.
  t.push_back({"inc", 0, 0, 2, 2,
               [](Params, Types a) {
                 need_numeric("inc", a);
                 return CostType::boolean();
               },
               [](Params, Args a) -> Value {
                 if (all_int(a)) return Value(4 * a[0].as_int() >= 5 * a[1].as_int());
                 return Value(4.0 * a[0].to_real() >= 5.0 * a[1].to_real());
               },
               "0.8x >= y"});

  t.push_back({"left", 0, 0, 2, 2, [](Params, Types a) { return a[0]; }, [](Params, Args a) { return a[0]; },
               "first operand"});
  t.push_back({"right", 0, 0, 2, 2, [](Params, Types a) { return a[1]; }, [](Params, Args a) { return a[1]; },
               "second operand"});

  t.push_back({"inrange", 2, 2, 1, 1,
               [](Params, Types a) {
                 need_numeric("inrange", a);
                 return CostType::boolean();
               },
               [](Params p, Args a) {
                 double x = a[0].to_real();
                 return Value(p[0] <= x && x <= p[1]);
               },
               "lo <= x <= hi"});

  t.push_back({"square", 0, 0, 1, 1, [](Params, Types a) { return numeric_join("square", a); },
               [](Params, Args a) -> Value {
                 if (all_int(a)) return Value(a[0].as_int() * a[0].as_int());
                 return Value(a[0].to_real() * a[0].to_real());
               },
               "x * x"});

  t.push_back({"scale", 1, 1, 1, 1,
               [](Params, Types a) {
                 need_numeric("scale", a);
                 return CostType::real();
               },
               [](Params p, Args a) { return Value(p[0] * a[0].to_real()); }, "c * x"});

  auto logic = [&](std::string name, bool conj) {
    t.push_back({name, 0, 0, 1, kVariadic,
                 [name](Params, Types a) {
                   for (const auto& x : a)
                     if (x.kind != CostKind::boolean) throw TypeError(name + ": expected bool operands");
                   return CostType::boolean();
                 },
                 [conj](Params, Args a) {
                   bool r = conj;
                   for (const auto& v : a) r = conj ? (r && v.as_bool()) : (r || v.as_bool());
                   return Value(r);
                 },
                 conj ? "conjunction" : "disjunction"});
  };
  logic("and", true);
  logic("or", false);
  t.push_back({"not", 0, 0, 1, 1,
               [](Params, Types a) {
                 if (a[0].kind != CostKind::boolean) throw TypeError("not: expected bool");
                 return CostType::boolean();
               },
               [](Params, Args a) { return Value(!a[0].as_bool()); }, "negation"});

  t.push_back({"tuple_get", 1, 1, 1, 1,
               [](Params p, Types a) {
                 if (a[0].kind != CostKind::tuple || p[0] < 0 || p[0] >= static_cast<double>(a[0].elems.size()))
                   throw TypeError("tuple_get: index out of range for " + a[0].to_string());
                 return a[0].elems[static_cast<std::size_t>(p[0])];
               },
               [](Params p, Args a) { return a[0].as_tuple()[static_cast<std::size_t>(p[0])]; },
               "i-th tuple component"});

  // Marker emitted by the localMax stage: the middle of three values is a
  // strict maximum above the threshold.
  t.push_back({"local_max3", 1, 1, 3, 3,
               [](Params, Types a) {
                 need_numeric("local_max3", a);
                 return CostType::integer();
               },
               [](Params p, Args a) {
                 double x = a[0].to_real(), y = a[1].to_real(), z = a[2].to_real();
                 return Value(std::int64_t{y > x && y > z && y > p[0] ? 1 : 0});
               },
               "1 if b is a strict local maximum above p, else 0"});

  // ((pos, set), len) -> (pos + len, set + {pos + len}): the running position
  // of the latest marker and the set of all marker positions.
  t.push_back({"union_insert", 0, 0, 2, 2,
               [](Params, Types a) {
                 auto acc = CostType::tuple({CostType::integer(), CostType::intset()});
                 if (!(a[0] == acc) || a[1].kind != CostKind::integer)
                   throw TypeError("union_insert: expected (tuple(int,intset), int)");
                 return acc;
               },
               [](Params, Args a) {
                 const auto& acc = a[0].as_tuple();
                 std::int64_t pos = acc[0].as_int() + a[1].as_int();
                 auto set = acc[1].as_intset();
                 set.push_back(pos);
                 return Value::tuple({Value(pos), Value::intset(std::move(set))});
               },
               "advance position and record it"});

  t.push_back({"conn", 1, 1, 1, kVariadic,
               [](Params p, Types a) {
                 if (!(p[0] >= 0)) throw TypeError("conn: delta must be >= 0");
                 for (const auto& x : a)
                   if (x.kind != CostKind::intset) throw TypeError("conn: expected intset operands");
                 return CostType::intset();
               },
               [](Params p, Args a) {
                 std::vector<std::int64_t> acc = a[0].as_intset();
                 for (std::size_t k = 1; k < a.size(); ++k) acc = conn_step(acc, a[k].as_intset(), p[0]);
                 return Value::intset(std::move(acc));
               },
               "left fold of the delta-connectivity filter"});

  t.push_back({"window_push", 1, 1, 2, 2,
               [](Params p, Types a) {
                 need_window("window_push", p, a[0]);
                 if (!a[1].numeric()) throw TypeError("window_push: expected numeric value");
                 return a[0];
               },
               [](Params, Args a) {
                 std::vector<Value> w = a[0].as_tuple();
                 w[0] = Value(w[0].as_int() + 1);
                 w.erase(w.begin() + 1);
                 w.push_back(Value(a[1].to_real()));
                 return Value::tuple(std::move(w));
               },
               "append to a sliding window of length L"});

  t.push_back({"window_mean", 1, 1, 1, 1,
               [](Params p, Types a) {
                 need_window("window_mean", p, a[0]);
                 return CostType::real();
               },
               [](Params, Args a) {
                 auto xs = window_values(a[0]);
                 if (xs.empty()) return Value(0.0);
                 double s = 0;
                 for (double x : xs) s += x;
                 return Value(s / static_cast<double>(xs.size()));
               },
               "mean of the window contents (0 when empty)"});

  t.push_back({"window_std", 1, 1, 1, 1,
               [](Params p, Types a) {
                 need_window("window_std", p, a[0]);
                 return CostType::real();
               },
               [](Params, Args a) {
                 auto xs = window_values(a[0]);
                 if (xs.empty()) return Value(0.0);
                 double m = 0;
                 for (double x : xs) m += x;
                 m /= static_cast<double>(xs.size());
                 double v = 0;
                 for (double x : xs) v += (x - m) * (x - m);
                 return Value(std::sqrt(v / static_cast<double>(xs.size())));
               },
               "population standard deviation of the window"});

  t.push_back({"window_meansq", 1, 1, 1, 1,
               [](Params p, Types a) {
                 need_window("window_meansq", p, a[0]);
                 return CostType::real();
               },
               [](Params, Args a) {
                 auto xs = window_values(a[0]);
                 if (xs.empty()) return Value(0.0);
                 double s = 0;
                 for (double x : xs) s += x * x;
                 return Value(s / static_cast<double>(xs.size()));
               },
               "mean of squares of the window contents"});

  // thev[BL, decay, pmin](state, y): threshold evolution of the MDT detector.
  // The initial threshold lives in the state, not here.
  t.push_back({"thev", 3, 3, 2, 2,
               [](Params p, Types a) {
                 if (!(a[0] == mdt_state_type()) || !a[1].numeric())
                   throw TypeError("thev: expected (mdt state, numeric sample)");
                 MdtParams mp{static_cast<std::int64_t>(p[0]), p[1], p[2], std::max(p[2], 1e300)};
                 mp.validate();
                 return a[0];
               },
               [](Params p, Args a) {
                 MdtParams mp{static_cast<std::int64_t>(p[0]), p[1], p[2]};
                 return mdt_to_value(mdt_thev(mdt_from_value(a[0]), a[1].to_real(), mp));
               },
               "one step of the MDT threshold automaton"});

  return t;
}

}  // namespace

CostType window_type(std::size_t length) {
  std::vector<CostType> elems{CostType::integer()};
  elems.insert(elems.end(), length, CostType::real());
  return CostType::tuple(std::move(elems));
}

const std::vector<OpDef>& operation_table() {
  static const std::vector<OpDef> table = build_table();
  return table;
}

const OpDef* find_operation(std::string_view name) {
  for (const auto& d : operation_table())
    if (d.name == name) return &d;
  return nullptr;
}

Operation::Operation(std::string_view name, std::vector<double> params) : def_(find_operation(name)),
                                                                          params_(std::move(params)) {
  if (!def_) throw TypeError("unknown operation '" + std::string(name) + "'");
  if (params_.size() < def_->min_params || params_.size() > def_->max_params)
    throw TypeError("operation " + def_->name + " takes " + std::to_string(def_->min_params) +
                    (def_->max_params != def_->min_params ? "-" + std::to_string(def_->max_params) : "") +
                    " constant parameter(s)");
}

CostType Operation::result_type(std::span<const CostType> args) const {
  if (args.size() < def_->min_args || args.size() > def_->max_args)
    throw TypeError("operation " + def_->name + ": wrong number of operands (" + std::to_string(args.size()) + ")");
  return def_->type(params_, args);
}

std::string Operation::to_string() const {
  std::string s = def_->name;
  if (!params_.empty()) {
    s += "[";
    for (std::size_t i = 0; i < params_.size(); ++i) s += (i ? "," : "") + Value(params_[i]).to_string();
    s += "]";
  }
  return s;
}

}  // namespace qre
