#include "qre/value.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace qre {

std::string CostType::to_string() const {
  switch (kind) {
    case CostKind::unit: return "unit";
    case CostKind::boolean: return "bool";
    case CostKind::integer: return "int";
    case CostKind::real: return "real";
    case CostKind::multiset: return "multiset";
    case CostKind::intset: return "intset";
    case CostKind::tuple: {
      std::string s = "tuple(";
      for (std::size_t i = 0; i < elems.size(); ++i) s += (i ? "," : "") + elems[i].to_string();
      return s + ")";
    }
  }
  return "?";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits on top-level commas.
std::vector<std::string_view> split_top(std::string_view s) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '(' || c == '{' || c == '[') ++depth;
    if (c == ')' || c == '}' || c == ']') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  auto last = trim(s.substr(start));
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

double parse_double(std::string_view s) {
  s = trim(s);
  std::string buf(s);
  char* end = nullptr;
  double d = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size()) throw TypeError("not a number: '" + buf + "'");
  return d;
}

std::int64_t parse_int(std::string_view s) {
  s = trim(s);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw TypeError("not an integer: '" + std::string(s) + "'");
  return v;
}

std::string fmt_real(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  std::string s = buf;
  // Shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, d);
    if (std::strtod(buf, nullptr) == d) {
      s = buf;
      break;
    }
  }
  if (std::isfinite(d) && s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

CostType parse_cost_type(std::string_view text) {
  auto t = trim(text);
  if (t == "unit") return CostType::unit();
  if (t == "bool" || t == "boolean") return CostType::boolean();
  if (t == "int" || t == "integer") return CostType::integer();
  if (t == "real") return CostType::real();
  if (t == "multiset") return CostType::multiset();
  if (t == "intset") return CostType::intset();
  if (t.starts_with("tuple(") && t.ends_with(")")) {
    std::vector<CostType> elems;
    for (auto part : split_top(t.substr(6, t.size() - 7))) elems.push_back(parse_cost_type(part));
    return CostType::tuple(std::move(elems));
  }
  throw TypeError("unknown cost type '" + std::string(t) + "'");
}

Value Value::multiset(std::vector<double> items) {
  std::sort(items.begin(), items.end());
  Value v;
  v.v_ = Multiset{std::make_shared<const std::vector<double>>(std::move(items))};
  return v;
}

Value Value::intset(std::vector<std::int64_t> items) {
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  Value v;
  v.v_ = IntSet{std::make_shared<const std::vector<std::int64_t>>(std::move(items))};
  return v;
}

Value Value::tuple(std::vector<Value> items) {
  Value v;
  v.v_ = Tuple{std::make_shared<const std::vector<Value>>(std::move(items))};
  return v;
}

CostKind Value::kind() const {
  switch (v_.index()) {
    case 0: return CostKind::unit;
    case 1: return CostKind::boolean;
    case 2: return CostKind::integer;
    case 3: return CostKind::real;
    case 4: return CostKind::multiset;
    case 5: return CostKind::intset;
    case 6: return CostKind::tuple;
  }
  throw std::logic_error("value without contents");
}

CostType Value::type() const {
  if (kind() != CostKind::tuple) return {kind(), {}};
  std::vector<CostType> elems;
  for (const auto& e : as_tuple()) elems.push_back(e.type());
  return CostType::tuple(std::move(elems));
}

bool Value::as_bool() const {
  if (auto p = std::get_if<bool>(&v_)) return *p;
  throw TypeError("expected bool, got " + type().to_string());
}

std::int64_t Value::as_int() const {
  if (auto p = std::get_if<std::int64_t>(&v_)) return *p;
  throw TypeError("expected int, got " + type().to_string());
}

double Value::as_real() const {
  if (auto p = std::get_if<double>(&v_)) return *p;
  throw TypeError("expected real, got " + type().to_string());
}

double Value::to_real() const {
  switch (v_.index()) {
    case 1: return std::get<bool>(v_) ? 1.0 : 0.0;
    case 2: return static_cast<double>(std::get<std::int64_t>(v_));
    case 3: return std::get<double>(v_);
    default: throw TypeError("expected a scalar, got " + type().to_string());
  }
}

const std::vector<double>& Value::as_multiset() const {
  if (auto p = std::get_if<Multiset>(&v_)) return *p->items;
  throw TypeError("expected multiset, got " + type().to_string());
}

const std::vector<std::int64_t>& Value::as_intset() const {
  if (auto p = std::get_if<IntSet>(&v_)) return *p->items;
  throw TypeError("expected intset, got " + type().to_string());
}

const std::vector<Value>& Value::as_tuple() const {
  if (auto p = std::get_if<Tuple>(&v_)) return *p->items;
  throw TypeError("expected tuple, got " + type().to_string());
}

bool Value::operator==(const Value& rhs) const {
  if (v_.index() != rhs.v_.index()) return false;
  switch (v_.index()) {
    case 0: return true;
    case 1: return as_bool() == rhs.as_bool();
    case 2: return as_int() == rhs.as_int();
    case 3: return as_real() == rhs.as_real();
    case 4: return as_multiset() == rhs.as_multiset();
    case 5: return as_intset() == rhs.as_intset();
    default: return as_tuple() == rhs.as_tuple();
  }
}

std::string Value::to_string() const {
  switch (v_.index()) {
    case 0: return "()";
    case 1: return as_bool() ? "true" : "false";
    case 2: return std::to_string(as_int());
    case 3: return fmt_real(as_real());
    case 4: {
      std::string s = "{";
      for (std::size_t i = 0; i < as_multiset().size(); ++i) s += (i ? "," : "") + fmt_real(as_multiset()[i]);
      return s + "}";
    }
    case 5: {
      std::string s = "{";
      for (std::size_t i = 0; i < as_intset().size(); ++i) s += (i ? "," : "") + std::to_string(as_intset()[i]);
      return s + "}";
    }
    default: {
      std::string s = "(";
      for (std::size_t i = 0; i < as_tuple().size(); ++i) s += (i ? "," : "") + as_tuple()[i].to_string();
      return s + ")";
    }
  }
}

Value zero_value(const CostType& t) {
  switch (t.kind) {
    case CostKind::unit: return Value::unit();
    case CostKind::boolean: return Value(false);
    case CostKind::integer: return Value(std::int64_t{0});
    case CostKind::real: return Value(0.0);
    case CostKind::multiset: return Value::multiset({});
    case CostKind::intset: return Value::intset({});
    case CostKind::tuple: {
      std::vector<Value> items;
      for (const auto& e : t.elems) items.push_back(zero_value(e));
      return Value::tuple(std::move(items));
    }
  }
  return Value();
}

Value parse_value(std::string_view text, const CostType& t) {
  auto s = trim(text);
  switch (t.kind) {
    case CostKind::unit:
      if (s == "()" || s.empty()) return Value::unit();
      break;
    case CostKind::boolean:
      if (s == "true" || s == "1") return Value(true);
      if (s == "false" || s == "0") return Value(false);
      break;
    case CostKind::integer: return Value(parse_int(s));
    case CostKind::real: return Value(parse_double(s));
    case CostKind::multiset:
    case CostKind::intset: {
      if (!s.starts_with("{") || !s.ends_with("}")) break;
      auto parts = split_top(s.substr(1, s.size() - 2));
      if (t.kind == CostKind::multiset) {
        std::vector<double> items;
        for (auto p : parts) items.push_back(parse_double(p));
        return Value::multiset(std::move(items));
      }
      std::vector<std::int64_t> items;
      for (auto p : parts) items.push_back(parse_int(p));
      return Value::intset(std::move(items));
    }
    case CostKind::tuple: {
      if (!s.starts_with("(") || !s.ends_with(")")) break;
      auto parts = split_top(s.substr(1, s.size() - 2));
      if (parts.size() != t.elems.size()) break;
      std::vector<Value> items;
      for (std::size_t i = 0; i < parts.size(); ++i) items.push_back(parse_value(parts[i], t.elems[i]));
      return Value::tuple(std::move(items));
    }
  }
  throw TypeError("cannot read '" + std::string(s) + "' as " + t.to_string());
}

std::string format_real(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace qre
