#include "qre/reference.hpp"

namespace qre {

Value eval_term(const CostTerm& t, const Valuation& v) {
  switch (t.kind()) {
    case CostTerm::Kind::param: {
      auto it = v.find(t.name());
      if (it == v.end()) throw std::invalid_argument("no value for parameter " + t.name());
      return it->second;
    }
    case CostTerm::Kind::constant: return t.value();
    case CostTerm::Kind::apply: {
      std::vector<Value> args;
      for (const auto& a : t.args()) args.push_back(eval_term(a, v));
      return t.op().apply(args);
    }
  }
  return Value();
}

Item scalar_item(const Value& v) { return Item{v.to_real()}; }

namespace {

using Out = std::optional<Value>;

Out eval(const Qre& f, std::span<const Item> w, const Valuation& v) {
  switch (f.kind()) {
    case Qre::Kind::basic:
      if (w.size() != 1 || !f.predicate().eval(w[0])) return std::nullopt;
      return f.fn().eval(w[0]);

    case Qre::Kind::cost_op: {
      std::vector<Value> args;
      for (const auto& o : f.operands()) {
        if (o.term) {
          args.push_back(eval_term(*o.term, v));
          continue;
        }
        auto r = eval(*o.qre, w, v);
        if (!r) return std::nullopt;
        args.push_back(std::move(*r));
      }
      return f.op().apply(args);
    }

    case Qre::Kind::subst: {
      auto g = eval(f.right(), w, v);
      if (!g) return std::nullopt;
      Valuation inner = v;
      inner.insert_or_assign(f.var(), std::move(*g));
      return eval(f.left(), w, inner);
    }

    case Qre::Kind::else_: {
      if (auto r = eval(f.left(), w, v)) return r;
      return eval(f.right(), w, v);
    }

    case Qre::Kind::split: {
      auto k = detail::split_point(f.left().domain(), f.right().domain(), w);
      if (!k) return std::nullopt;
      auto a = eval(f.left(), w.first(*k), v);
      auto b = eval(f.right(), w.subspan(*k), v);
      if (!a || !b) return std::nullopt;
      std::vector<Value> args{std::move(*a), std::move(*b)};
      return f.op().apply(args);
    }

    case Qre::Kind::iter: {
      auto blocks = detail::factorize(f.inner().domain(), w);
      if (!blocks) return std::nullopt;
      Value acc = f.seed() ? *f.seed() : v.at(f.var());
      Valuation inner = v;
      for (auto [a, b] : *blocks) {
        inner.insert_or_assign(f.var(), acc);
        auto r = eval(f.inner(), w.subspan(a, b - a), inner);
        if (!r) return std::nullopt;
        acc = std::move(*r);
      }
      return acc;
    }

    case Qre::Kind::compose: {
      std::vector<Item> emitted;
      for (std::size_t i = 1; i <= w.size(); ++i)
        if (auto r = eval(f.left(), w.first(i), v)) emitted.push_back(scalar_item(*r));
      return eval(f.right(), emitted, v);
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<Value> eval_reference(const Qre& f, std::span<const Item> w, const Valuation& v) {
  for (const auto& item : w) f.schema()->validate(item);
  Valuation full = complete_valuation(f, v);
  return eval(f, w, full);
}

}  // namespace qre
