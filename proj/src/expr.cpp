#include "qre/expr.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace qre {

// ---------------------------------------------------------------------------
// ItemFn

ItemFn ItemFn::field(const SchemaPtr& schema, std::string_view name) {
  auto idx = schema->require(name);
  bool real = schema->field(idx).kind == FieldKind::real;
  return ItemFn(std::make_shared<const Node>(
      Node{Kind::field, idx, std::string(name), 0.0, real ? CostType::real() : CostType::integer(), {}}));
}

ItemFn ItemFn::constant(Value v) {
  if (v.kind() != CostKind::integer && v.kind() != CostKind::real)
    throw TypeError("cost function constants must be int or real");
  return ItemFn(std::make_shared<const Node>(Node{Kind::constant, 0, "", v.to_real(), v.type(), {}}));
}

ItemFn ItemFn::unary(Kind k, ItemFn a) {
  if (k != Kind::neg && k != Kind::abs && k != Kind::sqr) throw std::invalid_argument("not a unary cost function");
  CostType t = a.type();
  return ItemFn(std::make_shared<const Node>(Node{k, 0, "", 0.0, t, {std::move(a)}}));
}

ItemFn ItemFn::binary(Kind k, ItemFn a, ItemFn b) {
  if (k != Kind::add && k != Kind::sub && k != Kind::mul && k != Kind::div)
    throw std::invalid_argument("not a binary cost function");
  bool integral = k != Kind::div && a.type().kind == CostKind::integer && b.type().kind == CostKind::integer;
  return ItemFn(std::make_shared<const Node>(
      Node{k, 0, "", 0.0, integral ? CostType::integer() : CostType::real(), {std::move(a), std::move(b)}}));
}

double ItemFn::eval_real(std::span<const double> item) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::field: return item[n.field];
    case Kind::constant: return n.value;
    case Kind::neg: return -n.kids[0].eval_real(item);
    case Kind::abs: return std::fabs(n.kids[0].eval_real(item));
    case Kind::sqr: {
      double x = n.kids[0].eval_real(item);
      return x * x;
    }
    case Kind::add: return n.kids[0].eval_real(item) + n.kids[1].eval_real(item);
    case Kind::sub: return n.kids[0].eval_real(item) - n.kids[1].eval_real(item);
    case Kind::mul: return n.kids[0].eval_real(item) * n.kids[1].eval_real(item);
    case Kind::div: return n.kids[0].eval_real(item) / n.kids[1].eval_real(item);
  }
  return 0.0;
}

Value ItemFn::eval(std::span<const double> item) const {
  double x = eval_real(item);
  if (type().kind == CostKind::integer) return Value(static_cast<std::int64_t>(std::llround(x)));
  return Value(x);
}

std::string ItemFn::to_string() const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::field: return n.name;
    case Kind::constant:
      return n.type.kind == CostKind::integer ? std::to_string(static_cast<std::int64_t>(n.value))
                                              : Value(n.value).to_string();
    case Kind::neg: return "-(" + n.kids[0].to_string() + ")";
    case Kind::abs: return "abs(" + n.kids[0].to_string() + ")";
    case Kind::sqr: return "sqr(" + n.kids[0].to_string() + ")";
    case Kind::add: return "(" + n.kids[0].to_string() + " + " + n.kids[1].to_string() + ")";
    case Kind::sub: return "(" + n.kids[0].to_string() + " - " + n.kids[1].to_string() + ")";
    case Kind::mul: return "(" + n.kids[0].to_string() + " * " + n.kids[1].to_string() + ")";
    case Kind::div: return "(" + n.kids[0].to_string() + " / " + n.kids[1].to_string() + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// CostTerm

CostTerm CostTerm::param(std::string name, CostType type) {
  return CostTerm(std::make_shared<const Node>(Node{Kind::param, std::move(name), {}, std::nullopt, {}, type}));
}

CostTerm CostTerm::constant(Value v) {
  CostType t = v.type();
  return CostTerm(std::make_shared<const Node>(Node{Kind::constant, "", std::move(v), std::nullopt, {}, t}));
}

CostTerm CostTerm::apply(Operation op, std::vector<CostTerm> args) {
  std::vector<CostType> types;
  for (const auto& a : args) types.push_back(a.type());
  CostType t = op.result_type(types);
  return CostTerm(std::make_shared<const Node>(Node{Kind::apply, "", {}, std::move(op), std::move(args), t}));
}

std::string CostTerm::to_string() const {
  switch (kind()) {
    case Kind::param: return "$" + name() + ":" + type().to_string();
    case Kind::constant: return "lit(" + value().to_string() + ")";
    case Kind::apply: {
      std::string s = "calc(" + op().to_string();
      for (const auto& a : args()) s += ", " + a.to_string();
      return s + ")";
    }
  }
  return "?";
}

namespace {

void term_params(const CostTerm& t, std::vector<Parameter>& out) {
  if (t.kind() == CostTerm::Kind::param) {
    for (const auto& p : out)
      if (p.name == t.name()) {
        if (!(p.type == t.type()))
          throw ConstructionError("params.type_conflict", "parameter " + t.name() + " used at two types");
        return;
      }
    out.push_back({t.name(), t.type()});
  }
  for (const auto& a : t.args()) term_params(a, out);
}

const Parameter* lookup(const std::vector<Parameter>& ps, std::string_view name) {
  for (const auto& p : ps)
    if (p.name == name) return &p;
  return nullptr;
}

// Union of parameter lists; a name occurring twice must have one type.
std::vector<Parameter> merge_params(std::vector<Parameter> a, const std::vector<Parameter>& b) {
  for (const auto& p : b) {
    if (auto q = lookup(a, p.name)) {
      if (!(q->type == p.type))
        throw ConstructionError("params.type_conflict", "parameter " + p.name + " used at two types");
      continue;
    }
    a.push_back(p);
  }
  return a;
}

void require_disjoint(const std::vector<Parameter>& a, const std::vector<Parameter>& b, const char* invariant) {
  for (const auto& p : a)
    if (lookup(b, p.name)) throw ConstructionError(invariant, "parameter " + p.name + " occurs on both sides");
}

void require_exact(const Qre& q, const char* invariant) {
  if (!q.exact_domain())
    throw ConstructionError(invariant,
                            "operand is a stream composition with a partial consumer; its domain is not regular "
                            "in the sense required here");
}

void require_schema(const Qre& a, const Qre& b) {
  if (!same_schema(a.schema(), b.schema()))
    throw ConstructionError("schema", "operands read different item schemas: " + a.schema()->to_string() + " vs " +
                                          b.schema()->to_string());
}

bool equivalent(const Regex& a, const Regex& b) { return a.identical(b) || check_equivalent(a, b); }

std::atomic<std::uint64_t> next_id{1};

}  // namespace

// Friend of Qre; assembles nodes once the checks have passed.
class QreBuilder {
 public:
  using Node = Qre::Node;
  static QrePtr finish(Node n) {
    n.id = next_id.fetch_add(1);
    for (const auto& k : n.kids) n.size += k->size();
    for (const auto& o : n.operands)
      if (o.qre) n.size += o.qre->size();
    return QrePtr(new Qre(std::make_shared<const Node>(std::move(n))));
  }
};

const Parameter* Qre::find_param(std::string_view name) const { return lookup(params(), name); }

QrePtr make_basic(Predicate phi, ItemFn lambda) {
  QreBuilder::Node n;
  n.kind = Qre::Kind::basic;
  n.schema = phi.schema();
  n.domain = Regex::atom(phi);
  n.type = lambda.type();
  n.pred = std::move(phi);
  n.fn = std::move(lambda);
  return QreBuilder::finish(std::move(n));
}

QrePtr make_cost_op(Operation op, std::vector<Operand> operands) {
  const Qre* first = nullptr;
  for (const auto& o : operands) {
    if (o.qre && o.term) throw std::invalid_argument("operand holds both an expression and a term");
    if (!o.qre && !o.term) throw std::invalid_argument("empty operand");
    if (o.qre && !first) first = o.qre.get();
  }
  if (!first) throw ConstructionError("cost_op.has_expression", "at least one operand must be an expression");

  std::vector<std::vector<Parameter>> lists;
  std::vector<CostType> types;
  for (const auto& o : operands) {
    if (o.qre) {
      require_exact(*o.qre, "cost_op.exact_domain");
      require_schema(*first, *o.qre);
      if (!equivalent(first->domain(), o.qre->domain()))
        throw ConstructionError("cost_op.equal_domains",
                                "operand domains differ: " + first->domain().to_string() + " vs " +
                                    o.qre->domain().to_string());
      lists.push_back(o.qre->params());
      types.push_back(o.qre->type());
    } else {
      std::vector<Parameter> ps;
      term_params(*o.term, ps);
      lists.push_back(std::move(ps));
      types.push_back(o.term->type());
    }
  }
  QreBuilder::Node n;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    for (std::size_t j = i + 1; j < lists.size(); ++j) require_disjoint(lists[i], lists[j], "cost_op.disjoint_params");
    n.params = merge_params(std::move(n.params), lists[i]);
  }
  try {
    n.type = op.result_type(types);
  } catch (const TypeError& e) {
    throw ConstructionError("cost_op.types", e.what());
  }
  n.kind = Qre::Kind::cost_op;
  n.schema = first->schema();
  n.domain = first->domain();
  n.op = std::move(op);
  n.operands = std::move(operands);
  return QreBuilder::finish(std::move(n));
}

QrePtr make_cost_op(Operation op, std::vector<QrePtr> children) {
  std::vector<Operand> ops;
  for (auto& c : children) ops.push_back(operand(std::move(c)));
  return make_cost_op(std::move(op), std::move(ops));
}

QrePtr make_subst(QrePtr f, std::string x, QrePtr g) {
  require_exact(*f, "subst.exact_domain");
  require_exact(*g, "subst.exact_domain");
  require_schema(*f, *g);
  const Parameter* px = f->find_param(x);
  if (!px) throw ConstructionError("subst.param_missing", "parameter " + x + " does not occur in the target");
  if (!(px->type == g->type()))
    throw ConstructionError("subst.type", "parameter " + x + " has type " + px->type.to_string() +
                                              " but the substituted expression has type " + g->type().to_string());
  for (const auto& p : g->params())
    if (p.name != x && f->find_param(p.name))
      throw ConstructionError("subst.shared_param", "parameter " + p.name + " is shared besides " + x);
  if (!equivalent(f->domain(), g->domain()))
    throw ConstructionError("subst.equal_domains", "domains differ: " + f->domain().to_string() + " vs " +
                                                       g->domain().to_string());
  QreBuilder::Node n;
  n.kind = Qre::Kind::subst;
  n.schema = f->schema();
  n.domain = f->domain();
  n.type = f->type();
  for (const auto& p : f->params())
    if (p.name != x) n.params.push_back(p);
  n.params = merge_params(std::move(n.params), g->params());
  n.var = std::move(x);
  n.kids = {std::move(f), std::move(g)};
  return QreBuilder::finish(std::move(n));
}

QrePtr make_else(QrePtr f, QrePtr g) {
  require_exact(*f, "else.exact_domain");
  require_exact(*g, "else.exact_domain");
  require_schema(*f, *g);
  if (!(f->type() == g->type()))
    throw ConstructionError("else.equal_types", "branch types differ: " + f->type().to_string() + " vs " +
                                                    g->type().to_string());
  if (!check_disjoint(f->domain(), g->domain()))
    throw ConstructionError("else.disjoint_domains", "branch domains overlap: " + f->domain().to_string() +
                                                         " and " + g->domain().to_string());
  QreBuilder::Node n;
  n.kind = Qre::Kind::else_;
  n.schema = f->schema();
  n.domain = unchecked_alt(f->domain(), g->domain());
  n.type = f->type();
  n.params = merge_params(f->params(), g->params());
  n.kids = {std::move(f), std::move(g)};
  return QreBuilder::finish(std::move(n));
}

QrePtr make_split(Operation op, QrePtr f, QrePtr g) {
  require_exact(*f, "split.exact_domain");
  require_exact(*g, "split.exact_domain");
  require_schema(*f, *g);
  require_disjoint(f->params(), g->params(), "split.disjoint_params");
  if (!check_unamb_concat(f->domain(), g->domain()))
    throw ConstructionError("split.unambiguous", "domains are not unambiguously concatenable: " +
                                                     f->domain().to_string() + " . " + g->domain().to_string());
  QreBuilder::Node n;
  try {
    std::vector<CostType> types{f->type(), g->type()};
    n.type = op.result_type(types);
  } catch (const TypeError& e) {
    throw ConstructionError("split.types", e.what());
  }
  n.kind = Qre::Kind::split;
  n.schema = f->schema();
  n.domain = unchecked_cat(f->domain(), g->domain());
  n.params = merge_params(f->params(), g->params());
  n.op = std::move(op);
  n.kids = {std::move(f), std::move(g)};
  return QreBuilder::finish(std::move(n));
}

QrePtr make_iter(std::string p, QrePtr f, std::optional<Value> seed) {
  require_exact(*f, "iter.exact_domain");
  if (const Parameter* q = f->find_param(p); q && !(q->type == f->type()))
    throw ConstructionError("iter.param_type", "parameter " + p + " has type " + q->type.to_string() +
                                                   " but the body has type " + f->type().to_string());
  if (seed && !(seed->type() == f->type()))
    throw ConstructionError("iter.seed_type", "seed " + seed->to_string() + " does not have type " +
                                                  f->type().to_string());
  if (!check_unamb_iter(f->domain()))
    throw ConstructionError("iter.unambiguous", "domain is not unambiguously iterable: " + f->domain().to_string());
  QreBuilder::Node n;
  n.kind = Qre::Kind::iter;
  n.schema = f->schema();
  n.domain = unchecked_star(f->domain());
  n.type = f->type();
  if (!seed) n.params.push_back({p, f->type()});
  for (const auto& q : f->params())
    if (q.name != p) n.params.push_back(q);
  n.var = std::move(p);
  n.seed = std::move(seed);
  n.kids = {std::move(f)};
  return QreBuilder::finish(std::move(n));
}

SchemaPtr scalar_schema(const CostType& t, std::string field) {
  FieldKind k;
  switch (t.kind) {
    case CostKind::boolean: k = FieldKind::boolean; break;
    case CostKind::integer: k = FieldKind::integer; break;
    case CostKind::real: k = FieldKind::real; break;
    default: throw TypeError("only scalar values can form a stream, got " + t.to_string());
  }
  return Schema::make({Field{std::move(field), k, {}}});
}

QrePtr make_stream_compose(QrePtr f, QrePtr g) {
  if (!f->params().empty())
    throw ConstructionError("compose.no_params", "the producer must not have parameters");
  if (!f->type().scalar())
    throw ConstructionError("compose.scalar", "the producer must emit scalars, not " + f->type().to_string());
  const Schema& gs = *g->schema();
  if (gs.size() != 1 || !(gs.field(0).kind == scalar_schema(f->type())->field(0).kind))
    throw ConstructionError("compose.schema", "the consumer must read single-field items of kind " +
                                                  f->type().to_string() + ", got " + gs.to_string());
  QreBuilder::Node n;
  n.kind = Qre::Kind::compose;
  n.schema = f->schema();
  Regex all = Regex::star(Regex::atom(Predicate::always(g->schema())));
  n.exact = g->exact_domain() && equivalent(g->domain(), all);
  n.domain = Regex::star(Regex::atom(Predicate::always(f->schema())));
  n.type = g->type();
  n.params = g->params();
  n.kids = {std::move(f), std::move(g)};
  return QreBuilder::finish(std::move(n));
}

std::string fresh_param(std::string_view stem) {
  return std::string(stem) + "'" + std::to_string(next_id.fetch_add(1));
}

Valuation complete_valuation(const Qre& f, const Valuation& v) {
  Valuation out;
  for (const auto& p : f.params()) {
    auto it = v.find(p.name);
    if (it != v.end()) {
      if (!(it->second.type() == p.type))
        throw std::invalid_argument("parameter " + p.name + " expects " + p.type.to_string() + ", got " +
                                    it->second.to_string());
      out.emplace(p.name, it->second);
    } else {
      throw std::invalid_argument("no value for parameter " + p.name);
    }
  }
  return out;
}

std::string Qre::to_string() const {
  switch (kind()) {
    case Kind::basic: return "basic(" + predicate().to_string() + ", " + fn().to_string() + ")";
    case Kind::cost_op: {
      std::string s = "op(" + op().to_string();
      for (const auto& o : operands()) s += ", " + (o.qre ? o.qre->to_string() : o.term->to_string());
      return s + ")";
    }
    case Kind::subst: return "subst(" + left().to_string() + ", " + var() + ", " + right().to_string() + ")";
    case Kind::else_: return "else(" + left().to_string() + ", " + right().to_string() + ")";
    case Kind::split:
      return "split(" + op().to_string() + ", " + left().to_string() + ", " + right().to_string() + ")";
    case Kind::iter: {
      std::string head = var();
      if (seed()) head += "=" + seed()->to_string();
      return "iter(" + head + ", " + inner().to_string() + ")";
    }
    case Kind::compose: return "compose(" + left().to_string() + ", " + right().to_string() + ")";
  }
  return "?";
}

}  // namespace qre
