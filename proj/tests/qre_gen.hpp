// Random well-formed QREs over the schema {v: real} for the equivalence and
// domain-law properties. Every combinator is exercised; candidates that fail a
// side condition are redrawn a few times and otherwise replaced by a leaf.
#pragma once

#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qre/expr.hpp"
#include "qre/parse.hpp"

namespace gen {

using namespace qre;

class QreGen {
 public:
  explicit QreGen(std::uint64_t seed) : rng_(seed), schema_(parse_schema("v:real")), x_(parse_schema("x:real")) {
    for (const char* p : {"v < 1", "v >= 1", "v < 2", "v >= 2", "true", "v >= 1 & v < 2", "v < 1 | v >= 2"})
      preds_.push_back(parse_predicate(schema_, p));
  }

  const SchemaPtr& schema() const { return schema_; }

  /// Expression of depth <= depth with cost type int or real.
  QrePtr expr(int depth) {
    bool real = coin();
    if (depth >= 2 && pick(6) == 0) return compose(depth);
    return node(depth, real);
  }

  /// Same tree shape and domains, different cost functions and fresh
  /// parameter names, so the result can be combined with q by a cost
  /// operation or a substitution.
  QrePtr mirror(const QrePtr& q) {
    std::map<std::string, std::string> names;
    return mirror(q, names);
  }

  /// A few valuations for the free parameters of q.
  std::vector<Valuation> valuations(const Qre& q) {
    std::vector<Valuation> out(2);
    for (const auto& p : q.params()) {
      bool real = p.type.kind == CostKind::real;
      out[0][p.name] = real ? Value(0.0) : Value(std::int64_t{0});
      out[1][p.name] = real ? Value(-1.5) : Value(std::int64_t{3});
    }
    if (q.params().empty()) out.resize(1);
    return out;
  }

  /// One item per minterm cell of the predicates the generator uses.
  std::vector<Item> letters() const { return {{0.5}, {1.5}, {2.5}}; }

 private:
  bool coin() { return std::uniform_int_distribution<int>(0, 1)(rng_) == 1; }
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  ItemFn lambda(bool real) {
    if (!real) return ItemFn::constant(Value(static_cast<std::int64_t>(pick(4))));
    auto v = ItemFn::field(schema_, schema_->field(0).name);
    switch (pick(4)) {
      case 0: return v;
      case 1: return ItemFn::binary(ItemFn::Kind::add, v, ItemFn::constant(Value(0.25)));
      case 2: return ItemFn::unary(ItemFn::Kind::sqr, v);
      default: return ItemFn::binary(ItemFn::Kind::mul, v, ItemFn::constant(Value(-2.0)));
    }
  }

  QrePtr leaf(bool real) { return make_basic(preds_[pick(preds_.size())], lambda(real)); }

  Operation binop(bool real) {
    static const char* names[] = {"add", "max", "left", "right"};
    (void)real;
    return Operation(names[pick(4)]);
  }

  QrePtr node(int depth, bool real) {
    if (depth <= 1) return leaf(real);
    for (int attempt = 0; attempt < 8; ++attempt) {
      try {
        switch (pick(7)) {
          case 0: {
            auto f = node(depth - 1, real);
            return make_cost_op(binop(real), {f, mirror(f)});
          }
          case 1: {
            auto f = node(depth - 1, real);
            std::string x = fresh_param("x");
            CostType t = f->type();
            auto body = make_cost_op(binop(real), {operand(CostTerm::param(x, t)), operand(f)});
            return make_subst(body, x, mirror(f));
          }
          case 2: return make_else(node(depth - 1, real), node(depth - 1, real));
          case 3:
          case 4: return make_split(binop(real), node(depth - 1, real), node(depth - 1, real));
          default: {
            auto f = node(depth - 1, real);
            std::string p = fresh_param("p");
            auto body = make_cost_op(binop(real), {operand(CostTerm::param(p, f->type())), operand(f)});
            std::optional<Value> seed;
            if (coin()) seed = real ? Value(1.0) : Value(std::int64_t{1});
            return make_iter(p, body, seed);
          }
        }
      } catch (const ConstructionError&) {
      }
    }
    return leaf(real);
  }

  // Producer over v, consumer over {x: real}.
  QrePtr compose(int depth) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      auto f = node(depth - 1, true);
      if (!f->params().empty()) continue;
      QreGen inner(rng_());
      inner.schema_ = x_;
      inner.preds_.clear();
      for (const char* p : {"x < 1", "x >= 1", "true", "x < 0"}) inner.preds_.push_back(parse_predicate(x_, p));
      auto g = inner.node(depth - 1, coin());
      return make_stream_compose(f, g);
    }
    return leaf(true);
  }

  QrePtr mirror(const QrePtr& q, std::map<std::string, std::string>& names) {
    auto rename = [&](const std::string& n) {
      auto it = names.find(n);
      if (it == names.end()) it = names.emplace(n, fresh_param("m")).first;
      return it->second;
    };
    std::function<CostTerm(const CostTerm&)> term = [&](const CostTerm& t) {
      switch (t.kind()) {
        case CostTerm::Kind::param: return CostTerm::param(rename(t.name()), t.type());
        case CostTerm::Kind::constant: return t;
        case CostTerm::Kind::apply: {
          std::vector<CostTerm> args;
          for (const auto& a : t.args()) args.push_back(term(a));
          return CostTerm::apply(t.op(), std::move(args));
        }
      }
      return t;
    };
    auto share = [](const Qre& child) { return std::shared_ptr<const Qre>(std::shared_ptr<const Qre>{}, &child); };
    switch (q->kind()) {
      case Qre::Kind::basic:
        return make_basic(q->predicate(), lambda(q->type().kind == CostKind::real));
      case Qre::Kind::cost_op: {
        std::vector<Operand> ops;
        for (const auto& o : q->operands())
          ops.push_back(o.term ? operand(term(*o.term)) : operand(mirror(o.qre, names)));
        return make_cost_op(q->op(), std::move(ops));
      }
      case Qre::Kind::subst: {
        auto f = mirror(share(q->left()), names);
        return make_subst(f, rename(q->var()), mirror(share(q->right()), names));
      }
      case Qre::Kind::else_: return make_else(mirror(share(q->left()), names), mirror(share(q->right()), names));
      case Qre::Kind::split:
        return make_split(q->op(), mirror(share(q->left()), names), mirror(share(q->right()), names));
      case Qre::Kind::iter: {
        auto f = mirror(share(q->inner()), names);
        return make_iter(rename(q->var()), f, q->seed());
      }
      case Qre::Kind::compose: {
        QreGen inner(rng_());
        inner.schema_ = q->right().schema();
        auto g = inner.mirror(share(q->right()), names);
        return make_stream_compose(mirror(share(q->left()), names), g);
      }
    }
    return q;
  }

  std::mt19937_64 rng_;
  SchemaPtr schema_;
  SchemaPtr x_;
  std::vector<Predicate> preds_;
};

}  // namespace gen

#include "oracles.hpp"
#include "qre/reference.hpp"
#include "qre/streaming.hpp"

namespace gen {

struct EquivalenceReport {
  std::size_t streams = 0;
  std::size_t mismatches = 0;
  std::size_t domain_violations = 0;
  std::string first_failure;
};

// Walks every stream over `letters` up to max_len depth-first, forking the
// streaming evaluator at each node, and compares it with the reference
// evaluator on the same prefix. Also checks the domain law when the domain
// is exact.
inline void check_equivalence(const QrePtr& q, const Valuation& v, const std::vector<Item>& letters,
                              std::size_t max_len, EquivalenceReport& rep) {
  std::vector<Item> w;
  std::function<void(const StreamEvaluator&)> walk = [&](const StreamEvaluator& ev) {
    ++rep.streams;
    auto ref = eval_reference(*q, w, v);
    auto got = ev.output();
    if (!oracle::same_output(ref, got)) {
      if (rep.mismatches++ == 0)
        rep.first_failure = q->to_string() + " on length " + std::to_string(w.size()) + ": reference " +
                            (ref ? ref->to_string() : "undefined") + ", streaming " +
                            (got ? got->to_string() : "undefined");
    }
    if (q->exact_domain() && ref.has_value() != re_matches(q->domain(), w)) {
      if (rep.domain_violations++ == 0 && rep.first_failure.empty())
        rep.first_failure = q->to_string() + ": domain law fails on length " + std::to_string(w.size());
    }
    if (w.size() == max_len) return;
    for (const auto& l : letters) {
      StreamEvaluator next(ev);
      next.step(l);
      w.push_back(l);
      walk(next);
      w.pop_back();
    }
  };
  walk(StreamEvaluator(q, v));
}

}  // namespace gen
