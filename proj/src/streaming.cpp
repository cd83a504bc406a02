#include "qre/streaming.hpp"

#include <algorithm>
#include <bit>
#include <type_traits>
#include <unordered_map>
#include <variant>

#include "qre/reference.hpp"

namespace qre {

namespace {

// ---------------------------------------------------------------------------
// Symbolic costs: values that still mention a parameter whose value is being
// computed by an enclosing substitution.

struct Sym;
using SymPtr = std::shared_ptr<const Sym>;
using Cost = std::variant<Value, SymPtr>;

struct Sym {
  std::string name;              // leaf when op is null
  const Operation* op = nullptr;
  std::vector<Cost> args;
};

Cost apply_cost(const Operation& op, std::vector<Cost> args) {
  bool concrete = true;
  for (const auto& a : args) concrete = concrete && std::holds_alternative<Value>(a);
  if (concrete) {
    std::vector<Value> vals;
    vals.reserve(args.size());
    for (auto& a : args) vals.push_back(std::move(std::get<Value>(a)));
    return op.apply(vals);
  }
  return std::make_shared<const Sym>(Sym{"", &op, std::move(args)});
}

Cost substitute(const Cost& c, const std::string& name, const Cost& repl) {
  const auto* s = std::get_if<SymPtr>(&c);
  if (!s) return c;
  const Sym& sym = **s;
  if (!sym.op) return sym.name == name ? repl : c;
  std::vector<Cost> args;
  args.reserve(sym.args.size());
  for (const auto& a : sym.args) args.push_back(substitute(a, name, repl));
  return apply_cost(*sym.op, std::move(args));
}

// Same value by identity: shared collections by pointer, scalars by bits.
bool same_cost(const Cost& a, const Cost& b) {
  if (a.index() != b.index()) return false;
  if (auto p = std::get_if<SymPtr>(&a)) return *p == std::get<SymPtr>(b);
  const auto& x = std::get<Value>(a).storage();
  const auto& y = std::get<Value>(b).storage();
  if (x.index() != y.index()) return false;
  return std::visit(
      [&](const auto& u) -> bool {
        using T = std::decay_t<decltype(u)>;
        const T& v = std::get<T>(y);
        if constexpr (std::is_same_v<T, std::monostate>) return true;
        else if constexpr (std::is_same_v<T, double>) return std::bit_cast<std::uint64_t>(u) == std::bit_cast<std::uint64_t>(v);
        else if constexpr (std::is_same_v<T, bool> || std::is_same_v<T, std::int64_t>) return u == v;
        else return u.items == v.items;
      },
      x);
}

const Value& concrete(const Cost& c) {
  if (auto v = std::get_if<Value>(&c)) return *v;
  throw std::logic_error("cost still depends on an unresolved parameter");
}

// Persistent environment: each binding links to the enclosing one.
struct Env;
using EnvPtr = std::shared_ptr<const Env>;
struct Env {
  std::string name;
  Cost value;
  EnvPtr parent;
};

EnvPtr bind_env(EnvPtr parent, std::string name, Cost value) {
  return std::make_shared<const Env>(Env{std::move(name), std::move(value), std::move(parent)});
}

const Cost& lookup(const EnvPtr& env, const std::string& name) {
  for (const Env* e = env.get(); e; e = e->parent.get())
    if (e->name == name) return e->value;
  throw std::invalid_argument("no value for parameter " + name);
}

Cost eval_term(const CostTerm& t, const EnvPtr& env) {
  switch (t.kind()) {
    case CostTerm::Kind::param: return lookup(env, t.name());
    case CostTerm::Kind::constant: return t.value();
    case CostTerm::Kind::apply: {
      std::vector<Cost> args;
      for (const auto& a : t.args()) args.push_back(eval_term(a, env));
      return apply_cost(t.op(), std::move(args));
    }
  }
  return Value();
}

// ---------------------------------------------------------------------------
// Evaluation context shared by all instances of one evaluator.

struct Ctx {
  std::uint64_t activations = 0;
  std::size_t instances = 0;
  std::uint64_t symbols = 0;
  std::span<const double> item;
  // Minterm cell of the current item per alphabet. Each alphabet gets a slot
  // when an instance is built; a slot is valid while its stamp equals epoch.
  std::uint64_t epoch = 0, epochs = 0;
  std::unordered_map<const Minterms*, std::size_t> slots;
  std::vector<std::size_t> cells;
  std::vector<std::uint64_t> stamps;

  std::size_t slot(const Dfa& d) {
    auto [it, fresh] = slots.try_emplace(d.alphabet.get(), cells.size());
    if (fresh) {
      cells.push_back(0);
      stamps.push_back(0);
    }
    return it->second;
  }
  std::size_t cell(std::size_t slot, const Dfa& d) {
    if (stamps[slot] != epoch) {
      cells[slot] = d.alphabet->classify(item);
      stamps[slot] = epoch;
    }
    return cells[slot];
  }
  void next_item(std::span<const double> it) {
    item = it;
    epoch = ++epochs;
  }
};

class Node {
 public:
  explicit Node(Ctx& ctx) : ctx_(ctx) { ++ctx_.instances; }
  virtual ~Node() { --ctx_.instances; }
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  virtual void step() = 0;
  /// Deep copy attached to another context.
  virtual std::unique_ptr<Node> clone(Ctx& ctx) const = 0;
  const std::optional<Cost>& out() const { return out_; }

 protected:
  Node(const Node& o, Ctx& ctx) : ctx_(ctx), out_(o.out_) { ++ctx_.instances; }

  Ctx& ctx_;
  std::optional<Cost> out_;
};

using NodePtr = std::unique_ptr<Node>;

NodePtr instantiate(const Qre& q, const EnvPtr& env, Ctx& ctx);

NodePtr clone_of(const NodePtr& n, Ctx& ctx) { return n ? n->clone(ctx) : nullptr; }

class BasicNode final : public Node {
 public:
  BasicNode(const Qre& q, Ctx& ctx) : Node(ctx), q_(q) {}
  BasicNode(const BasicNode& o, Ctx& ctx) : Node(o, ctx), q_(o.q_), seen_(o.seen_) {}
  NodePtr clone(Ctx& ctx) const override { return std::make_unique<BasicNode>(*this, ctx); }
  void step() override {
    ++ctx_.activations;
    ++seen_;
    out_.reset();
    if (seen_ == 1 && q_.predicate().eval(ctx_.item)) out_ = Cost(q_.fn().eval(ctx_.item));
  }

 private:
  const Qre& q_;
  std::size_t seen_ = 0;
};

class CostOpNode final : public Node {
 public:
  CostOpNode(const Qre& q, const EnvPtr& env, Ctx& ctx) : Node(ctx), q_(q) {
    for (const auto& o : q.operands()) {
      if (o.qre) {
        kids_.push_back(instantiate(*o.qre, env, ctx));
        terms_.emplace_back();
      } else {
        kids_.push_back(nullptr);
        terms_.push_back(eval_term(*o.term, env));
      }
    }
    recompute();
  }
  CostOpNode(const CostOpNode& o, Ctx& ctx) : Node(o, ctx), q_(o.q_), terms_(o.terms_), last_(o.last_) {
    for (const auto& k : o.kids_) kids_.push_back(clone_of(k, ctx));
  }
  NodePtr clone(Ctx& ctx) const override { return std::make_unique<CostOpNode>(*this, ctx); }
  void step() override {
    ++ctx_.activations;
    for (auto& k : kids_)
      if (k) k->step();
    recompute();
  }

 private:
  // Operations are pure, so unchanged operands keep the previous result.
  void recompute() {
    std::vector<Cost> args;
    args.reserve(kids_.size());
    for (std::size_t i = 0; i < kids_.size(); ++i) {
      if (!kids_[i]) {
        args.push_back(terms_[i]);
        continue;
      }
      if (!kids_[i]->out()) {
        out_.reset();
        last_.clear();
        return;
      }
      args.push_back(*kids_[i]->out());
    }
    if (out_ && last_.size() == args.size() &&
        std::equal(args.begin(), args.end(), last_.begin(), same_cost))
      return;
    last_ = args;
    out_ = apply_cost(q_.op(), std::move(args));
  }

  const Qre& q_;
  std::vector<NodePtr> kids_;
  std::vector<Cost> terms_;
  std::vector<Cost> last_;  // operands of the current out_
};

class SubstNode final : public Node {
 public:
  SubstNode(const Qre& q, const EnvPtr& env, Ctx& ctx)
      : Node(ctx), sym_(q.var() + "@" + std::to_string(ctx.symbols++)) {
    Cost hole = std::make_shared<const Sym>(Sym{sym_, nullptr, {}});
    f_ = instantiate(q.left(), bind_env(env, q.var(), std::move(hole)), ctx);
    g_ = instantiate(q.right(), env, ctx);
    recompute();
  }
  SubstNode(const SubstNode& o, Ctx& ctx)
      : Node(o, ctx), sym_(o.sym_), f_(clone_of(o.f_, ctx)), g_(clone_of(o.g_, ctx)) {}
  NodePtr clone(Ctx& ctx) const override { return std::make_unique<SubstNode>(*this, ctx); }
  void step() override {
    ++ctx_.activations;
    f_->step();
    g_->step();
    recompute();
  }

 private:
  void recompute() {
    out_.reset();
    if (f_->out() && g_->out()) out_ = substitute(*f_->out(), sym_, *g_->out());
  }

  std::string sym_;
  NodePtr f_, g_;
};

class ElseNode final : public Node {
 public:
  ElseNode(const Qre& q, const EnvPtr& env, Ctx& ctx)
      : Node(ctx), f_(instantiate(q.left(), env, ctx)), g_(instantiate(q.right(), env, ctx)) {
    recompute();
  }
  ElseNode(const ElseNode& o, Ctx& ctx) : Node(o, ctx), f_(clone_of(o.f_, ctx)), g_(clone_of(o.g_, ctx)) {}
  NodePtr clone(Ctx& ctx) const override { return std::make_unique<ElseNode>(*this, ctx); }
  void step() override {
    ++ctx_.activations;
    f_->step();
    g_->step();
    recompute();
  }

 private:
  void recompute() { out_ = f_->out() ? f_->out() : g_->out(); }
  NodePtr f_, g_;
};

class SplitNode final : public Node {
 public:
  SplitNode(const Qre& q, const EnvPtr& env, Ctx& ctx)
      : Node(ctx), q_(q), env_(env), df_(q.left().domain().dfa()), dg_(q.right().domain().dfa()),
        sf_(ctx.slot(df_)), sg_(ctx.slot(dg_)) {
    qf_ = df_.initial;
    if (df_.live[qf_]) {
      left_ = instantiate(q.left(), env, ctx);
      spawn();
    }
    recompute();
  }
  SplitNode(const SplitNode& o, Ctx& ctx)
      : Node(o, ctx), q_(o.q_), env_(o.env_), df_(o.df_), dg_(o.dg_), sf_(o.sf_), sg_(o.sg_), qf_(o.qf_),
        left_(clone_of(o.left_, ctx)) {
    for (const auto& t : o.threads_) threads_.push_back(Thread{t.state, t.node->clone(ctx), t.left});
  }
  NodePtr clone(Ctx& ctx) const override { return std::make_unique<SplitNode>(*this, ctx); }

  void step() override {
    ++ctx_.activations;
    std::size_t keep = 0;
    for (std::size_t i = 0; i < threads_.size(); ++i) {
      Thread& t = threads_[i];
      t.state = dg_.next(t.state, ctx_.cell(sg_, dg_));
      if (!dg_.live[t.state]) continue;
      t.node->step();
      if (keep != i) threads_[keep] = std::move(t);
      ++keep;
    }
    threads_.resize(keep);
    if (left_) {
      qf_ = df_.next(qf_, ctx_.cell(sf_, df_));
      if (!df_.live[qf_]) {
        left_.reset();
      } else {
        left_->step();
        spawn();
      }
    }
    recompute();
  }

 private:
  struct Thread {
    std::size_t state;
    NodePtr node;
    Cost left;
  };

  void spawn() {
    if (!left_->out() || !dg_.live[dg_.initial]) return;
    threads_.push_back(Thread{dg_.initial, instantiate(q_.right(), env_, ctx_), *left_->out()});
  }

  void recompute() {
    out_.reset();
    // Unambiguity: at most one thread can be complete.
    for (const auto& t : threads_)
      if (dg_.accepting[t.state] && t.node->out()) {
        out_ = apply_cost(q_.op(), {t.left, *t.node->out()});
        return;
      }
  }

  const Qre& q_;
  EnvPtr env_;
  const Dfa& df_;
  const Dfa& dg_;
  std::size_t sf_, sg_;  // alphabet slots
  std::size_t qf_;
  NodePtr left_;
  std::vector<Thread> threads_;
};

class IterNode final : public Node {
 public:
  IterNode(const Qre& q, const EnvPtr& env, Ctx& ctx)
      : Node(ctx), q_(q), env_(env), df_(q.inner().domain().dfa()), sf_(ctx.slot(df_)) {
    out_ = q.seed() ? Cost(*q.seed()) : lookup(env, q.var());
    spawn();
  }
  IterNode(const IterNode& o, Ctx& ctx) : Node(o, ctx), q_(o.q_), env_(o.env_), df_(o.df_), sf_(o.sf_) {
    for (const auto& t : o.threads_) threads_.push_back(Thread{t.state, t.node->clone(ctx)});
  }
  NodePtr clone(Ctx& ctx) const override { return std::make_unique<IterNode>(*this, ctx); }

  void step() override {
    ++ctx_.activations;
    out_.reset();
    std::size_t keep = 0;
    for (std::size_t i = 0; i < threads_.size(); ++i) {
      Thread& t = threads_[i];
      t.state = df_.next(t.state, ctx_.cell(sf_, df_));
      if (!df_.live[t.state]) continue;
      t.node->step();
      if (!out_ && df_.accepting[t.state] && t.node->out()) out_ = t.node->out();
      if (keep != i) threads_[keep] = std::move(t);
      ++keep;
    }
    threads_.resize(keep);
    if (out_) spawn();
  }

 private:
  struct Thread {
    std::size_t state;
    NodePtr node;
  };

  void spawn() {
    if (!df_.live[df_.initial]) return;
    threads_.push_back(Thread{df_.initial, instantiate(q_.inner(), bind_env(env_, q_.var(), *out_), ctx_)});
  }

  const Qre& q_;
  EnvPtr env_;
  const Dfa& df_;
  std::size_t sf_;
  std::vector<Thread> threads_;
};

class ComposeNode final : public Node {
 public:
  ComposeNode(const Qre& q, const EnvPtr& env, Ctx& ctx)
      : Node(ctx), f_(instantiate(q.left(), env, ctx)), g_(instantiate(q.right(), env, ctx)) {
    out_ = g_->out();
  }
  ComposeNode(const ComposeNode& o, Ctx& ctx) : Node(o, ctx), f_(clone_of(o.f_, ctx)), g_(clone_of(o.g_, ctx)) {}
  NodePtr clone(Ctx& ctx) const override { return std::make_unique<ComposeNode>(*this, ctx); }
  void step() override {
    ++ctx_.activations;
    f_->step();
    if (f_->out()) {
      Item emitted = scalar_item(concrete(*f_->out()));
      // The consumer sees a different item; swap the per-item context.
      auto saved_item = ctx_.item;
      auto saved_epoch = ctx_.epoch;
      ctx_.next_item(emitted);
      g_->step();
      ctx_.item = saved_item;
      ctx_.epoch = saved_epoch;
    }
    out_ = g_->out();
  }

 private:
  NodePtr f_, g_;
};

NodePtr instantiate(const Qre& q, const EnvPtr& env, Ctx& ctx) {
  switch (q.kind()) {
    case Qre::Kind::basic: return std::make_unique<BasicNode>(q, ctx);
    case Qre::Kind::cost_op: return std::make_unique<CostOpNode>(q, env, ctx);
    case Qre::Kind::subst: return std::make_unique<SubstNode>(q, env, ctx);
    case Qre::Kind::else_: return std::make_unique<ElseNode>(q, env, ctx);
    case Qre::Kind::split: return std::make_unique<SplitNode>(q, env, ctx);
    case Qre::Kind::iter: return std::make_unique<IterNode>(q, env, ctx);
    case Qre::Kind::compose: return std::make_unique<ComposeNode>(q, env, ctx);
  }
  throw std::logic_error("unknown combinator");
}

}  // namespace

struct StreamEvaluator::Impl {
  QrePtr expr;
  Ctx ctx;
  NodePtr root;
  std::size_t consumed = 0;
};

StreamEvaluator::StreamEvaluator(QrePtr f, const Valuation& v) : impl_(std::make_unique<Impl>()) {
  impl_->expr = std::move(f);
  EnvPtr env;
  for (auto& [name, value] : complete_valuation(*impl_->expr, v)) env = bind_env(env, name, value);
  impl_->root = instantiate(*impl_->expr, env, impl_->ctx);
}

StreamEvaluator::StreamEvaluator(const StreamEvaluator& o) : impl_(std::make_unique<Impl>()) {
  impl_->expr = o.impl_->expr;
  impl_->ctx.activations = o.impl_->ctx.activations;
  impl_->ctx.symbols = o.impl_->ctx.symbols;
  impl_->ctx.epoch = o.impl_->ctx.epoch;
  impl_->ctx.epochs = o.impl_->ctx.epochs;
  impl_->ctx.slots = o.impl_->ctx.slots;
  impl_->ctx.cells = o.impl_->ctx.cells;
  impl_->ctx.stamps = o.impl_->ctx.stamps;
  impl_->consumed = o.impl_->consumed;
  impl_->root = o.impl_->root->clone(impl_->ctx);
}

StreamEvaluator& StreamEvaluator::operator=(const StreamEvaluator& o) {
  if (this != &o) *this = StreamEvaluator(o);
  return *this;
}

StreamEvaluator::StreamEvaluator(StreamEvaluator&&) noexcept = default;
StreamEvaluator& StreamEvaluator::operator=(StreamEvaluator&&) noexcept = default;
StreamEvaluator::~StreamEvaluator() {
  // Instances reference the context; drop them first.
  if (impl_) impl_->root.reset();
}

void StreamEvaluator::step(std::span<const double> item) {
  impl_->expr->schema()->validate(item);
  Ctx& ctx = impl_->ctx;
  ctx.next_item(item);
  impl_->root->step();
  ++impl_->consumed;
}

std::optional<Value> StreamEvaluator::output() const {
  const auto& out = impl_->root->out();
  if (!out) return std::nullopt;
  return concrete(*out);
}

std::size_t StreamEvaluator::consumed() const { return impl_->consumed; }
std::uint64_t StreamEvaluator::activations() const { return impl_->ctx.activations; }
std::size_t StreamEvaluator::instances() const { return impl_->ctx.instances; }
const Qre& StreamEvaluator::expression() const { return *impl_->expr; }

StreamEvaluator compile_streaming(QrePtr f, const Valuation& v) { return StreamEvaluator(std::move(f), v); }

std::vector<std::optional<Value>> eval_streaming(QrePtr f, std::span<const Item> w, const Valuation& v) {
  StreamEvaluator e(std::move(f), v);
  std::vector<std::optional<Value>> outs{e.output()};
  for (const auto& item : w) {
    e.step(item);
    outs.push_back(e.output());
  }
  return outs;
}

}  // namespace qre
