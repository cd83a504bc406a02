#include "qre/parse.hpp"

#include <cctype>
#include <cstdlib>
#include <variant>

namespace qre {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; }

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  void skip() {
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }
  bool at_end() {
    skip();
    return pos_ >= s_.size();
  }
  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  bool accept(std::string_view tok) {
    skip();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected '" + std::string(tok) + "'");
  }
  std::string ident() {
    skip();
    if (pos_ >= s_.size() || !ident_start(s_[pos_])) fail("expected a name");
    std::size_t start = pos_;
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }
  bool peek_ident() {
    skip();
    return pos_ < s_.size() && ident_start(s_[pos_]);
  }
  // Returns the literal text and whether it looked integral.
  std::pair<double, bool> number() {
    skip();
    std::size_t start = pos_;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
    bool integral = true;
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '.' || c == 'e' || c == 'E') {
        integral = false;
        ++pos_;
        if ((c == 'e' || c == 'E') && pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
      } else {
        break;
      }
    }
    std::string text(s_.substr(start, pos_ - start));
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size()) {
      pos_ = start;
      fail("expected a number");
    }
    return {v, integral};
  }
  // Raw token used for enumeration labels and literal values.
  std::string word() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && (ident_char(s_[pos_]) || s_[pos_] == '.' || s_[pos_] == '-' || s_[pos_] == '+'))
      ++pos_;
    if (start == pos_) fail("expected a value");
    return std::string(s_.substr(start, pos_ - start));
  }
  // Text up to the matching close bracket (exclusive); consumes the bracket.
  std::string until_close(char close) {
    std::size_t start = pos_;
    int depth = 0;
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (c == '(' || c == '[' || c == '{') ++depth;
      if (c == ')' || c == ']' || c == '}') {
        if (depth == 0 && c == close) {
          std::string out(s_.substr(start, pos_ - start));
          ++pos_;
          return out;
        }
        --depth;
      }
      ++pos_;
    }
    fail(std::string("missing '") + close + "'");
  }

  std::size_t pos() const { return pos_; }
  [[noreturn]] void fail(const std::string& what) { throw ParseError(what, pos_); }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

// --- predicates -------------------------------------------------------------

Predicate pred_or(Cursor& c, const SchemaPtr& s);

Predicate pred_atom(Cursor& c, const SchemaPtr& s) {
  if (c.accept("!")) return !pred_atom(c, s);
  if (c.accept("(")) {
    Predicate p = pred_or(c, s);
    c.expect(")");
    return p;
  }
  std::string name = c.ident();
  if (name == "true" && !s->index_of(name)) return Predicate::always(s);
  if (name == "false" && !s->index_of(name)) return Predicate::never(s);
  auto idx = s->index_of(name);
  if (!idx) c.fail("unknown field '" + name + "'");
  const Field& f = s->field(*idx);

  Cmp cmp;
  bool negate = false;
  if (c.accept("<=")) cmp = Cmp::le;
  else if (c.accept(">=")) cmp = Cmp::ge;
  else if (c.accept("==")) cmp = Cmp::eq;
  else if (c.accept("!=")) { cmp = Cmp::eq; negate = true; }
  else if (c.accept("<")) cmp = Cmp::lt;
  else if (c.accept(">")) cmp = Cmp::gt;
  else if (c.accept("=")) cmp = Cmp::eq;
  else {
    if (f.kind == FieldKind::boolean) return Predicate::is_label(s, name, "true");
    c.fail("expected a comparison after '" + name + "'");
  }

  Predicate p = Predicate::always(s);
  try {
    if (f.kind == FieldKind::enumeration || f.kind == FieldKind::boolean) {
      std::string label = c.word();
      if (cmp != Cmp::eq) c.fail("only = and != apply to " + name);
      p = Predicate::is_label(s, name, label);
    } else {
      p = Predicate::compare(s, name, cmp, c.number().first);
    }
  } catch (const SchemaError& e) {
    c.fail(e.what());
  }
  return negate ? !p : p;
}

Predicate pred_and(Cursor& c, const SchemaPtr& s) {
  Predicate p = pred_atom(c, s);
  while (c.peek() == '&') {
    c.accept("&&") || c.accept("&");
    p = p & pred_atom(c, s);
  }
  return p;
}

Predicate pred_or(Cursor& c, const SchemaPtr& s) {
  Predicate p = pred_and(c, s);
  while (c.peek() == '|') {
    c.accept("||") || c.accept("|");
    p = p | pred_and(c, s);
  }
  return p;
}

// --- cost functions ---------------------------------------------------------

ItemFn fn_sum(Cursor& c, const SchemaPtr& s);

ItemFn fn_atom(Cursor& c, const SchemaPtr& s) {
  if (c.accept("-")) {
    // A signed literal stays a constant so that printing round-trips.
    if (std::isdigit(static_cast<unsigned char>(c.peek())) || c.peek() == '.') {
      auto [v, integral] = c.number();
      if (integral) return ItemFn::constant(Value(-static_cast<std::int64_t>(v)));
      return ItemFn::constant(Value(-v));
    }
    return ItemFn::unary(ItemFn::Kind::neg, fn_atom(c, s));
  }
  if (c.accept("(")) {
    ItemFn f = fn_sum(c, s);
    c.expect(")");
    return f;
  }
  if (c.peek_ident()) {
    std::string name = c.ident();
    if ((name == "abs" || name == "sqr") && c.accept("(")) {
      ItemFn f = fn_sum(c, s);
      c.expect(")");
      return ItemFn::unary(name == "abs" ? ItemFn::Kind::abs : ItemFn::Kind::sqr, f);
    }
    if (!s->index_of(name)) c.fail("unknown field '" + name + "'");
    return ItemFn::field(s, name);
  }
  auto [v, integral] = c.number();
  if (integral) return ItemFn::constant(Value(static_cast<std::int64_t>(v)));
  return ItemFn::constant(Value(v));
}

ItemFn fn_prod(Cursor& c, const SchemaPtr& s) {
  ItemFn f = fn_atom(c, s);
  for (;;) {
    if (c.accept("*")) f = ItemFn::binary(ItemFn::Kind::mul, f, fn_atom(c, s));
    else if (c.accept("/")) f = ItemFn::binary(ItemFn::Kind::div, f, fn_atom(c, s));
    else return f;
  }
}

ItemFn fn_sum(Cursor& c, const SchemaPtr& s) {
  ItemFn f = fn_prod(c, s);
  for (;;) {
    if (c.accept("+")) f = ItemFn::binary(ItemFn::Kind::add, f, fn_prod(c, s));
    else if (c.accept("-")) f = ItemFn::binary(ItemFn::Kind::sub, f, fn_prod(c, s));
    else return f;
  }
}

// --- QREs ---------------------------------------------------------------------

Operation op_ref(Cursor& c) {
  std::string name = c.ident();
  std::vector<double> params;
  if (c.accept("[")) {
    if (!c.accept("]")) {
      do params.push_back(c.number().first);
      while (c.accept(","));
      c.expect("]");
    }
  }
  try {
    return Operation(name, std::move(params));
  } catch (const TypeError& e) {
    c.fail(e.what());
  }
}

Value literal(const std::string& text, Cursor& c) {
  if (text == "true") return Value(true);
  if (text == "false") return Value(false);
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) c.fail("bad literal '" + text + "'");
  if (text.find_first_of(".eE") == std::string::npos) return Value(static_cast<std::int64_t>(v));
  return Value(v);
}

QrePtr qre_expr(Cursor& c, const SchemaPtr& s);

struct PendingParam {
  std::string name;
  std::optional<CostType> type;
};

PendingParam param_ref(Cursor& c);

// Parameter-only term: calc(name[c,...], $p:type | lit(v) | calc(...), ...).
CostTerm calc_term(Cursor& c) {
  std::size_t at = c.pos();
  Operation op = op_ref(c);
  std::vector<CostTerm> args;
  while (c.accept(",")) {
    if (c.accept("$")) {
      auto p = param_ref(c);
      if (!p.type) c.fail("parameters inside calc(...) need an explicit type");
      args.push_back(CostTerm::param(p.name, *p.type));
    } else if (c.accept("lit(")) {
      args.push_back(CostTerm::constant(literal(c.word(), c)));
      c.expect(")");
    } else if (c.accept("calc(")) {
      args.push_back(calc_term(c));
    } else {
      c.fail("expected $param, lit(...) or calc(...)");
    }
  }
  c.expect(")");
  try {
    return CostTerm::apply(std::move(op), std::move(args));
  } catch (const TypeError& e) {
    throw ParseError(e.what(), at);
  }
}

template <class F>
auto guarded(Cursor& c, F&& f) -> decltype(f()) {
  std::size_t at = c.pos();
  try {
    return f();
  } catch (const ConstructionError&) {
    throw;
  } catch (const ParseError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), at);
  }
}

// Seed "=value" after an iteration parameter; parsed once the body type is known.
std::optional<std::string> seed_text(Cursor& c) {
  if (!c.accept("=")) return std::nullopt;
  return c.word();
}

PendingParam param_ref(Cursor& c) {
  PendingParam p{c.ident(), std::nullopt};
  if (c.accept(":")) {
    std::string t = c.ident();
    if (t == "tuple" && c.accept("(")) t += "(" + c.until_close(')') + ")";
    p.type = guarded(c, [&] { return parse_cost_type(t); });
  }
  return p;
}

QrePtr qre_expr(Cursor& c, const SchemaPtr& s) {
  std::size_t at = c.pos();
  std::string head = c.ident();
  c.expect("(");
  QrePtr out;
  if (head == "basic") {
    Predicate p = pred_or(c, s);
    c.expect(",");
    ItemFn f = fn_sum(c, s);
    out = make_basic(std::move(p), std::move(f));
  } else if (head == "op") {
    Operation op = op_ref(c);
    using Pending = PendingParam;
    std::vector<std::variant<QrePtr, Pending, Value, CostTerm>> items;
    while (c.accept(",")) {
      if (c.accept("$")) {
        items.emplace_back(param_ref(c));
      } else if (c.accept("lit(")) {
        items.emplace_back(literal(c.word(), c));
        c.expect(")");
      } else if (c.accept("calc(")) {
        items.emplace_back(calc_term(c));
      } else {
        items.emplace_back(qre_expr(c, s));
      }
    }
    std::optional<CostType> default_type;
    for (const auto& it : items)
      if (auto q = std::get_if<QrePtr>(&it)) {
        default_type = (*q)->type();
        break;
      }
    std::vector<Operand> operands;
    for (auto& it : items) {
      if (auto q = std::get_if<QrePtr>(&it)) operands.push_back(operand(*q));
      else if (auto v = std::get_if<Value>(&it)) operands.push_back(operand(CostTerm::constant(*v)));
      else if (auto term = std::get_if<CostTerm>(&it)) operands.push_back(operand(*term));
      else {
        auto& p = std::get<Pending>(it);
        auto t = p.type ? p.type : default_type;
        if (!t) c.fail("cannot infer the type of $" + p.name);
        operands.push_back(operand(CostTerm::param(p.name, *t)));
      }
    }
    out = make_cost_op(std::move(op), std::move(operands));
  } else if (head == "subst") {
    QrePtr f = qre_expr(c, s);
    c.expect(",");
    std::string x = c.ident();
    c.expect(",");
    QrePtr g = qre_expr(c, s);
    out = make_subst(f, x, g);
  } else if (head == "else") {
    QrePtr f = qre_expr(c, s);
    c.expect(",");
    QrePtr g = qre_expr(c, s);
    out = make_else(f, g);
  } else if (head == "split") {
    Operation op = op_ref(c);
    c.expect(",");
    QrePtr f = qre_expr(c, s);
    c.expect(",");
    QrePtr g = qre_expr(c, s);
    out = make_split(std::move(op), f, g);
  } else if (head == "iter" || head == "iterop") {
    std::optional<Operation> op;
    if (head == "iterop") {
      op = op_ref(c);
      c.expect(",");
    }
    std::string p = c.ident();
    auto seed = seed_text(c);
    c.expect(",");
    QrePtr f = qre_expr(c, s);
    if (op) f = make_cost_op(*op, {operand(CostTerm::param(p, f->type())), operand(f)});
    std::optional<Value> v;
    if (seed) v = guarded(c, [&] { return parse_value(*seed, f->type()); });
    out = make_iter(p, f, v);
  } else if (head == "compose") {
    QrePtr f = qre_expr(c, s);
    c.expect(",");
    SchemaPtr inner = guarded(c, [&] { return scalar_schema(f->type()); });
    QrePtr g = qre_expr(c, inner);
    out = make_stream_compose(f, g);
  } else {
    throw ParseError("unknown combinator '" + head + "'", at);
  }
  c.expect(")");
  return out;
}

}  // namespace

SchemaPtr parse_schema(std::string_view text) {
  Cursor c(text);
  std::vector<Field> fields;
  do {
    Field f;
    f.name = c.ident();
    c.expect(":");
    std::string kind = c.ident();
    if (kind == "real") f.kind = FieldKind::real;
    else if (kind == "int" || kind == "integer") f.kind = FieldKind::integer;
    else if (kind == "bool" || kind == "boolean") f.kind = FieldKind::boolean;
    else if (kind == "enum") {
      f.kind = FieldKind::enumeration;
      c.expect("(");
      do f.labels.push_back(c.word());
      while (c.accept("|"));
      c.expect(")");
    } else {
      c.fail("unknown field kind '" + kind + "'");
    }
    fields.push_back(std::move(f));
  } while (c.accept(","));
  if (!c.at_end()) c.fail("trailing input in schema");
  try {
    return Schema::make(std::move(fields));
  } catch (const SchemaError& e) {
    throw ParseError(e.what(), 0);
  }
}

Predicate parse_predicate(const SchemaPtr& schema, std::string_view text) {
  Cursor c(text);
  Predicate p = pred_or(c, schema);
  if (!c.at_end()) c.fail("trailing input in predicate");
  return p;
}

ItemFn parse_item_fn(const SchemaPtr& schema, std::string_view text) {
  Cursor c(text);
  ItemFn f = fn_sum(c, schema);
  if (!c.at_end()) c.fail("trailing input in cost function");
  return f;
}

QrePtr parse_qre(const SchemaPtr& schema, std::string_view text) {
  Cursor c(text);
  QrePtr q = qre_expr(c, schema);
  if (!c.at_end()) c.fail("trailing input after expression");
  return q;
}

}  // namespace qre
