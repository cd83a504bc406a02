#include "qre/predicate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace qre {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool integral_kind(FieldKind k) { return k != FieldKind::real; }

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Schema::Schema(std::vector<Field> fields) : fields_(std::move(fields)) {
  if (fields_.empty()) throw SchemaError("schema needs at least one field");
  std::set<std::string> seen;
  for (const auto& f : fields_) {
    if (f.name.empty()) throw SchemaError("field names must be nonempty");
    if (!seen.insert(f.name).second) throw SchemaError("duplicate field name '" + f.name + "'");
    if (f.kind == FieldKind::enumeration && f.labels.empty())
      throw SchemaError("enumeration field '" + f.name + "' has no labels");
  }
}

std::shared_ptr<const Schema> Schema::make(std::vector<Field> fields) {
  return std::make_shared<const Schema>(std::move(fields));
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < fields_.size(); ++i)
    if (fields_[i].name == name) return i;
  return std::nullopt;
}

std::size_t Schema::require(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw SchemaError("unknown field '" + std::string(name) + "'");
  return *idx;
}

std::size_t Schema::label_index(std::size_t field, std::string_view label) const {
  const Field& f = fields_.at(field);
  if (f.kind == FieldKind::boolean) {
    if (label == "true" || label == "1") return 1;
    if (label == "false" || label == "0") return 0;
    throw SchemaError("'" + std::string(label) + "' is not a boolean literal");
  }
  if (f.kind != FieldKind::enumeration)
    throw SchemaError("field '" + f.name + "' does not take labels");
  auto it = std::find(f.labels.begin(), f.labels.end(), label);
  if (it == f.labels.end())
    throw SchemaError("field '" + f.name + "' has no label '" + std::string(label) + "'");
  return static_cast<std::size_t>(it - f.labels.begin());
}

void Schema::validate(std::span<const double> item) const {
  if (item.size() != fields_.size())
    throw SchemaError("item has " + std::to_string(item.size()) + " fields, schema expects " +
                      std::to_string(fields_.size()));
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    double v = item[i];
    switch (fields_[i].kind) {
      case FieldKind::real:
        if (std::isnan(v)) throw SchemaError("field '" + fields_[i].name + "' is NaN");
        break;
      case FieldKind::integer:
        if (!std::isfinite(v) || v != std::floor(v))
          throw SchemaError("field '" + fields_[i].name + "' must be an integer");
        break;
      case FieldKind::boolean:
        if (v != 0.0 && v != 1.0) throw SchemaError("field '" + fields_[i].name + "' must be 0 or 1");
        break;
      case FieldKind::enumeration:
        if (v != std::floor(v) || v < 0 || v >= static_cast<double>(fields_[i].labels.size()))
          throw SchemaError("field '" + fields_[i].name + "' has no such label index");
        break;
    }
  }
}

std::string Schema::to_string() const {
  std::string out;
  for (const auto& f : fields_) {
    if (!out.empty()) out += ',';
    out += f.name + ':';
    switch (f.kind) {
      case FieldKind::real: out += "real"; break;
      case FieldKind::integer: out += "integer"; break;
      case FieldKind::boolean: out += "boolean"; break;
      case FieldKind::enumeration: {
        out += "enum(";
        for (std::size_t i = 0; i < f.labels.size(); ++i) out += (i ? "|" : "") + f.labels[i];
        out += ')';
        break;
      }
    }
  }
  return out;
}

bool same_schema(const SchemaPtr& a, const SchemaPtr& b) {
  return a == b || (a && b && *a == *b);
}

const char* to_string(Cmp c) {
  switch (c) {
    case Cmp::lt: return "<";
    case Cmp::le: return "<=";
    case Cmp::eq: return "=";
    case Cmp::ge: return ">=";
    case Cmp::gt: return ">";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Box

Box Box::full(const Schema& schema) {
  Box b;
  b.dims.reserve(schema.size());
  for (const auto& f : schema.fields()) {
    switch (f.kind) {
      case FieldKind::real:
      case FieldKind::integer: b.dims.push_back({-kInf, kInf}); break;
      case FieldKind::boolean: b.dims.push_back({0.0, 1.0}); break;
      case FieldKind::enumeration:
        b.dims.push_back({0.0, static_cast<double>(f.labels.size() - 1)});
        break;
    }
  }
  return b;
}

bool Box::empty(const Schema& schema) const {
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& d = dims[i];
    if (d.lo > d.hi) return true;
    if (d.lo == d.hi && (d.lo_open || d.hi_open)) return true;
    if (integral_kind(schema.field(i).kind) && d.lo == d.hi && !std::isfinite(d.lo)) return true;
  }
  return false;
}

bool Box::constrain(const Schema& schema, std::size_t field, Cmp cmp, double c) {
  auto& d = dims.at(field);
  if (integral_kind(schema.field(field).kind)) {
    double lo = -kInf, hi = kInf;
    switch (cmp) {
      case Cmp::lt: hi = std::ceil(c) - 1; break;
      case Cmp::le: hi = std::floor(c); break;
      case Cmp::eq:
        if (c != std::floor(c)) return false;
        lo = hi = c;
        break;
      case Cmp::ge: lo = std::ceil(c); break;
      case Cmp::gt: lo = std::floor(c) + 1; break;
    }
    d.lo = std::max(d.lo, lo);
    d.hi = std::min(d.hi, hi);
    return d.lo <= d.hi;
  }
  auto raise_lo = [&](double v, bool open) {
    if (v > d.lo || (v == d.lo && open)) {
      d.lo = v;
      d.lo_open = open;
    }
  };
  auto lower_hi = [&](double v, bool open) {
    if (v < d.hi || (v == d.hi && open)) {
      d.hi = v;
      d.hi_open = open;
    }
  };
  switch (cmp) {
    case Cmp::lt: lower_hi(c, true); break;
    case Cmp::le: lower_hi(c, false); break;
    case Cmp::eq:
      raise_lo(c, false);
      lower_hi(c, false);
      break;
    case Cmp::ge: raise_lo(c, false); break;
    case Cmp::gt: raise_lo(c, true); break;
  }
  return !(d.lo > d.hi || (d.lo == d.hi && (d.lo_open || d.hi_open)));
}

std::optional<Box> Box::intersect(const Schema& schema, const Box& other) const {
  Box out = *this;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    auto& d = out.dims[i];
    const auto& o = other.dims[i];
    if (o.lo > d.lo || (o.lo == d.lo && o.lo_open)) {
      d.lo = o.lo;
      d.lo_open = o.lo_open;
    }
    if (o.hi < d.hi || (o.hi == d.hi && o.hi_open)) {
      d.hi = o.hi;
      d.hi_open = o.hi_open;
    }
  }
  if (out.empty(schema)) return std::nullopt;
  return out;
}

Item Box::witness(const Schema& schema) const {
  Item item(dims.size(), 0.0);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& d = dims[i];
    const bool integral = integral_kind(schema.field(i).kind);
    const bool has_lo = std::isfinite(d.lo), has_hi = std::isfinite(d.hi);
    double v = 0.0;
    if (has_lo && has_hi) {
      v = d.lo == d.hi ? d.lo : (d.lo + d.hi) / 2;
      if (integral) v = std::floor(v);
    } else if (has_lo) {
      v = d.lo_open ? d.lo + 1 : d.lo;
    } else if (has_hi) {
      v = d.hi_open ? d.hi - 1 : d.hi;
    }
    item[i] = v;
  }
  return item;
}

// ---------------------------------------------------------------------------
// Predicate

Predicate Predicate::make(Node node) {
  std::ostringstream key;
  switch (node.kind) {
    case Kind::truth: key << "true"; break;
    case Kind::falsity: key << "false"; break;
    case Kind::atom: {
      const Field& f = node.schema->field(node.field);
      key << f.name << ' ' << qre::to_string(node.cmp) << ' ';
      if (f.kind == FieldKind::enumeration)
        key << f.labels.at(static_cast<std::size_t>(node.value));
      else if (f.kind == FieldKind::boolean)
        key << (node.value != 0.0 ? "true" : "false");
      else
        key << format_number(node.value);
      break;
    }
    case Kind::conj:
    case Kind::disj: {
      key << '(';
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i) key << (node.kind == Kind::conj ? " & " : " | ");
        key << node.children[i].key();
      }
      key << ')';
      break;
    }
    case Kind::neg: key << '!' << node.children[0].key(); break;
  }
  node.key = key.str();
  return Predicate(std::make_shared<const Node>(std::move(node)));
}

Predicate Predicate::always(SchemaPtr schema) {
  if (!schema) throw SchemaError("predicate needs a schema");
  return make(Node{Kind::truth, std::move(schema)});
}

Predicate Predicate::never(SchemaPtr schema) {
  if (!schema) throw SchemaError("predicate needs a schema");
  return make(Node{Kind::falsity, std::move(schema)});
}

Predicate Predicate::compare(SchemaPtr schema, std::string_view field, Cmp cmp, double value) {
  if (!schema) throw SchemaError("predicate needs a schema");
  std::size_t idx = schema->require(field);
  const Field& f = schema->field(idx);
  if ((f.kind == FieldKind::boolean || f.kind == FieldKind::enumeration) && cmp != Cmp::eq)
    throw SchemaError("field '" + f.name + "' only supports '='");
  if (std::isnan(value)) throw SchemaError("comparison constant is NaN");
  if (f.kind == FieldKind::boolean && value != 0.0 && value != 1.0)
    throw SchemaError("boolean field compared against a non-boolean");
  if (f.kind == FieldKind::enumeration &&
      (value != std::floor(value) || value < 0 || value >= static_cast<double>(f.labels.size())))
    throw SchemaError("enumeration field compared against an unknown label index");
  Node n{Kind::atom, std::move(schema)};
  n.field = idx;
  n.cmp = cmp;
  n.value = value;
  return make(std::move(n));
}

Predicate Predicate::is_label(SchemaPtr schema, std::string_view field, std::string_view label) {
  if (!schema) throw SchemaError("predicate needs a schema");
  std::size_t idx = schema->require(field);
  double v = static_cast<double>(schema->label_index(idx, label));
  return compare(std::move(schema), field, Cmp::eq, v);
}

Predicate Predicate::operator&(const Predicate& rhs) const {
  if (!same_schema(schema(), rhs.schema())) throw SchemaError("conjunction across schemas");
  return make(Node{Kind::conj, schema(), 0, Cmp::eq, 0.0, {*this, rhs}});
}

Predicate Predicate::operator|(const Predicate& rhs) const {
  if (!same_schema(schema(), rhs.schema())) throw SchemaError("disjunction across schemas");
  return make(Node{Kind::disj, schema(), 0, Cmp::eq, 0.0, {*this, rhs}});
}

Predicate Predicate::operator!() const {
  return make(Node{Kind::neg, schema(), 0, Cmp::eq, 0.0, {*this}});
}

bool Predicate::eval(std::span<const double> item) const {
  if (item.size() != schema()->size())
    throw SchemaError("item has " + std::to_string(item.size()) + " fields, predicate schema has " +
                      std::to_string(schema()->size()));
  return eval_unchecked(item);
}

bool Predicate::eval_unchecked(std::span<const double> item) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::truth: return true;
    case Kind::falsity: return false;
    case Kind::atom: {
      double v = item[n.field];
      switch (n.cmp) {
        case Cmp::lt: return v < n.value;
        case Cmp::le: return v <= n.value;
        case Cmp::eq: return v == n.value;
        case Cmp::ge: return v >= n.value;
        case Cmp::gt: return v > n.value;
      }
      return false;
    }
    case Kind::conj:
      for (const auto& c : n.children)
        if (!c.eval_unchecked(item)) return false;
      return true;
    case Kind::disj:
      for (const auto& c : n.children)
        if (c.eval_unchecked(item)) return true;
      return false;
    case Kind::neg: return !n.children[0].eval_unchecked(item);
  }
  return false;
}

std::vector<Box> Predicate::dnf() const { return dnf_impl(false); }
std::vector<Box> Predicate::dnf_negated() const { return dnf_impl(true); }

std::vector<Box> Predicate::dnf_impl(bool negated) const {
  const Node& n = *node_;
  const Schema& s = *n.schema;
  auto single = [&](Cmp cmp) {
    std::vector<Box> out;
    Box b = Box::full(s);
    if (b.constrain(s, n.field, cmp, n.value) && !b.empty(s)) out.push_back(std::move(b));
    return out;
  };
  auto conjoin = [&](const std::vector<Box>& a, const std::vector<Box>& b) {
    std::vector<Box> out;
    for (const auto& x : a)
      for (const auto& y : b)
        if (auto z = x.intersect(s, y)) out.push_back(std::move(*z));
    return out;
  };
  switch (n.kind) {
    case Kind::truth:
    case Kind::falsity: {
      bool t = (n.kind == Kind::truth) != negated;
      if (!t) return {};
      return {Box::full(s)};
    }
    case Kind::atom: {
      if (!negated) return single(n.cmp);
      switch (n.cmp) {
        case Cmp::lt: return single(Cmp::ge);
        case Cmp::le: return single(Cmp::gt);
        case Cmp::ge: return single(Cmp::lt);
        case Cmp::gt: return single(Cmp::le);
        case Cmp::eq: {
          auto lo = single(Cmp::lt), hi = single(Cmp::gt);
          lo.insert(lo.end(), hi.begin(), hi.end());
          return lo;
        }
      }
      return {};
    }
    case Kind::conj:
    case Kind::disj: {
      // De Morgan: a negated conjunction is a disjunction of negations.
      bool as_and = (n.kind == Kind::conj) != negated;
      std::vector<Box> acc;
      bool first = true;
      for (const auto& c : n.children) {
        auto part = c.dnf_impl(negated);
        if (as_and) {
          acc = first ? std::move(part) : conjoin(acc, part);
          if (acc.empty()) return {};
        } else {
          acc.insert(acc.end(), part.begin(), part.end());
        }
        first = false;
      }
      return acc;
    }
    case Kind::neg: return n.children[0].dnf_impl(!negated);
  }
  return {};
}

bool pred_eval(const Predicate& p, std::span<const double> item) { return p.eval(item); }

bool pred_sat(const Predicate& p) { return !p.dnf().empty(); }

}  // namespace qre
