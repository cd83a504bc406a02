#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qre/parse.hpp"
#include "qre/reference.hpp"
#include "qre/streaming.hpp"
#include "qre_gen.hpp"

using namespace qre;

namespace {

SchemaPtr real_v() { return parse_schema("v:real"); }

std::vector<Item> items(std::initializer_list<double> vs) {
  std::vector<Item> w;
  for (double v : vs) w.push_back({v});
  return w;
}

QrePtr Q(const SchemaPtr& s, const std::string& text) { return parse_qre(s, text); }

// Evaluates with both evaluators and insists they agree.
std::optional<Value> run(const QrePtr& q, const std::vector<Item>& w, const Valuation& v = {}) {
  auto ref = eval_reference(*q, w, v);
  auto str = eval_streaming(q, w, v);
  REQUIRE(str.size() == w.size() + 1);
  CHECK(oracle::same_output(ref, str.back()));
  return ref;
}

std::string invariant_of(const std::function<void()>& build) {
  try {
    build();
  } catch (const ConstructionError& e) {
    return e.invariant();
  }
  return "";
}

const double M = 5.0;

QrePtr exceeds(const SchemaPtr& s) { return Q(s, "basic(v < -5 | v > 5, 1)"); }
QrePtr within(const SchemaPtr& s) { return Q(s, "basic(v >= -5 & v <= 5, 0)"); }

}  // namespace

TEST_CASE("basic") {
  auto s = real_v();
  auto f1 = exceeds(s);
  CHECK(run(f1, items({M + 1})) == Value(1));
  CHECK(run(f1, items({-M - 0.5})) == Value(1));
  CHECK_FALSE(run(f1, items({M})).has_value());
  CHECK_FALSE(run(Q(s, "basic(true, v)"), items({1, 2})).has_value());
  CHECK(run(Q(s, "basic(true, sqr(abs(v)))"), items({3})) == Value(9.0));
  CHECK(run(Q(parse_schema("n:int"), "basic(true, sqr(abs(n)))"), {{-3}}) == Value(9));
  CHECK_FALSE(run(f1, {}).has_value());
}

TEST_CASE("cost operation") {
  auto s = real_v();
  auto fa = Q(s, "basic(true, sqr(abs(v)))");
  auto fb = Q(s, "basic(true, sqr(abs(v)))");
  CHECK(run(make_cost_op(Operation("add"), {fa, fb}), items({2})) == Value(8.0));
  // Defined only when every operand is.
  auto partial = make_cost_op(Operation("add"), {Q(s, "basic(v > 0, 1)"), Q(s, "basic(v > 0, 2)")});
  CHECK(run(partial, items({1})) == Value(3));
  CHECK(invariant_of([&] { make_cost_op(Operation("add"), {Q(s, "basic(v > 0, 1)"), Q(s, "basic(true, 1)")}); }) ==
        "cost_op.equal_domains");
  CHECK(invariant_of([&] {
          Q(s, "op(sum, iterop(add, p, basic(true, 1)), iterop(add, p, basic(true, 1)))");
        }) == "cost_op.disjoint_params");
  CHECK(invariant_of([&] { Q(s, "op(and, basic(true, 1), basic(true, 2))"); }) == "cost_op.types");
}

TEST_CASE("variance as mean of squares minus squared mean") {
  auto s = real_v();
  const char* mu = "op(div, iterop(add, a=0.0, basic(true, v)), iterop(add, n=0, basic(true, 1)))";
  const char* sigma2 = "op(div, iterop(add, b=0.0, basic(true, sqr(v))), iterop(add, m=0, basic(true, 1)))";
  auto var = Q(s, std::string("op(diff, ") + sigma2 + ", op(square, " + mu + "))");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int n = 1; n <= 40; ++n) {
    std::vector<Item> w;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      w.push_back({u(rng)});
      sum += w.back()[0];
    }
    double mean = sum / n, pop = 0;
    for (const auto& x : w) pop += (x[0] - mean) * (x[0] - mean) / n;
    auto got = run(var, w);
    REQUIRE(got.has_value());
    CHECK(got->as_real() >= -1e-9);
    CHECK(got->as_real() == doctest::Approx(pop).epsilon(1e-9).scale(2500));
  }
}

TEST_CASE("substitution") {
  auto s = real_v();
  auto length = Q(s, "iterop(add, c=0, basic(true, 1))");
  auto twice = Q(s, "op(right, iterop(add, z=0, basic(true, 0)), calc(mult, $x:int, lit(2)))");
  auto f = make_subst(twice, "x", length);
  CHECK(f->params().empty());
  CHECK(run(f, items({1, 2, 3})) == Value(6));
  CHECK(run(f, {}) == Value(0));

  auto sum = Q(s, "iterop(add, c=0.0, basic(true, v))");
  auto ident = Q(s, "op(right, iterop(add, z=0, basic(true, 0)), $x:real)");
  CHECK(run(make_subst(ident, "x", sum), items({1.5, 2, 4})) == Value(7.5));

  auto hole = Q(s, "op(add, basic(v > 0, v), $x:real)");
  auto undefined_g = make_subst(hole, "x", Q(s, "basic(v > 0, v)"));
  CHECK(run(undefined_g, items({2})) == Value(4.0));
  CHECK_FALSE(run(undefined_g, items({-2})).has_value());

  CHECK(invariant_of([&] { make_subst(hole, "y", Q(s, "basic(v > 0, v)")); }) == "subst.param_missing");
  CHECK(invariant_of([&] { make_subst(hole, "x", Q(s, "basic(v > 0, 1)")); }) == "subst.type");
  CHECK(invariant_of([&] { make_subst(hole, "x", Q(s, "basic(true, v)")); }) == "subst.equal_domains");
  auto shared = Q(s, "op(sum, basic(v > 0, v), $x:real, $y:real)");
  CHECK(invariant_of([&] { make_subst(shared, "x", Q(s, "op(add, basic(v > 0, v), $y:real)")); }) ==
        "subst.shared_param");
}

TEST_CASE("else") {
  auto s = real_v();
  auto f01 = make_else(exceeds(s), within(s));
  CHECK(run(f01, items({M + 1})) == Value(1));
  CHECK(run(f01, items({0})) == Value(0));
  CHECK(run(f01, items({M})) == Value(0));
  CHECK_FALSE(run(f01, items({0, 0})).has_value());
  CHECK(invariant_of([&] { make_else(exceeds(s), Q(s, "basic(true, 0)")); }) == "else.disjoint_domains");
  CHECK(invariant_of([&] { make_else(exceeds(s), Q(s, "basic(v >= -5 & v <= 5, 0.5)")); }) == "else.equal_types");
}

TEST_CASE("split") {
  auto s = real_v();
  auto gt = Q(s, "split(gt, basic(true, v), basic(true, v))");
  CHECK(run(gt, items({5, 3})) == Value(true));
  CHECK(run(gt, items({3, 5})) == Value(false));
  CHECK_FALSE(run(gt, items({3})).has_value());

  // right keeps the suffix value, left the prefix value.
  auto right = Q(s, "split(right, iterop(add, c=0, basic(v < 1, 1)), basic(v >= 1, v))");
  CHECK(run(right, items({0, 0, 7})) == Value(7.0));
  auto interval = Q(s, "split(left, iterop(add, c=0, basic(v < 1, 1)), basic(v >= 1, 1))");
  CHECK(run(interval, items({0, 0, 0, 1})) == Value(3));
  CHECK_FALSE(run(interval, items({0, 0})).has_value());

  CHECK(invariant_of([&] {
          Q(s, "split(add, iterop(add, c=0, basic(true, 1)), iterop(add, d=0, basic(true, 1)))");
        }) == "split.unambiguous");
  CHECK(invariant_of([&] { Q(s, "split(add, op(add, basic(true,1), $p), op(add, basic(true,1), $p))"); }) ==
        "split.disjoint_params");
}

TEST_CASE("iteration") {
  auto s = real_v();
  auto count = Q(s, "iterop(add, p, basic(true, 1))");
  CHECK(count->params().size() == 1);
  CHECK(run(count, {}, {{"p", Value(7)}}) == Value(7));
  CHECK(run(count, items({1, 2, 3, 4, 5}), {{"p", Value(0)}}) == Value(5));
  auto seeded = Q(s, "iterop(add, p=0, basic(true, 1))");
  CHECK(seeded->params().empty());
  CHECK(run(seeded, items({9, 9, 9})) == Value(3));

  SUBCASE("step by step") {
    auto ev = compile_streaming(seeded);
    for (int n = 1; n <= 50; ++n) {
      ev.step(Item{0.0});
      CHECK(ev.output() == Value(n));
    }
  }

  SUBCASE("threshold exceedances") {
    // Count the items with |v| > M by iterating the 0/1 classifier.
    auto f01 = make_else(exceeds(s), within(s));
    auto exceed = make_iter("n", make_cost_op(Operation("add"), {operand(CostTerm::param("n", f01->type())),
                                                                 operand(f01)}),
                            Value(0));
    CHECK(run(exceed, items({0, 6, -7, 1, 5, 5.5})) == Value(3));
  }

  SUBCASE("fold law") {
    // iter over two-item blocks folds op over per-block values.
    auto block = Q(s, "split(add, basic(v < 1, v), basic(v >= 1, v))");
    for (const char* op : {"add", "max"}) {
      auto it = make_iter("acc", make_cost_op(Operation(op), {operand(CostTerm::param("acc", CostType::real())),
                                                              operand(block)}));
      std::mt19937_64 rng(17);
      for (int trial = 0; trial < 40; ++trial) {
        std::vector<Item> w;
        int k = trial % 7;
        for (int b = 0; b < k; ++b) {
          w.push_back({std::uniform_real_distribution<double>(-3, 0.9)(rng)});
          w.push_back({std::uniform_real_distribution<double>(1, 4)(rng)});
        }
        double seed = -1.25;
        double acc = seed;
        auto blocks = unique_factorization(block->domain(), w);
        REQUIRE(blocks.has_value());
        for (auto [a, b] : *blocks) {
          double x = eval_reference(*block, std::span<const Item>(w).subspan(a, b - a))->as_real();
          acc = std::string(op) == "add" ? acc + x : std::max(acc, x);
        }
        auto got = run(it, w, {{"acc", Value(seed)}});
        REQUIRE(got.has_value());
        CHECK(got->as_real() == doctest::Approx(acc).epsilon(1e-12));
      }
    }
  }

  CHECK(invariant_of([&] { Q(s, "iterop(add, p, iterop(add, q=0, basic(true, 1)))"); }) == "iter.unambiguous");
  CHECK(invariant_of([&] { make_iter("p", Q(s, "basic(true, 1)"), Value(1.5)); }) == "iter.seed_type");
  CHECK(invariant_of([&] { Q(s, "iter(p, op(add, basic(true, 1.5), $p:int))"); }) == "iter.param_type");
}

TEST_CASE("stream composition") {
  auto s = real_v();
  auto f01 = make_else(exceeds(s), within(s));
  // Prefixes of length 1 are the only ones on which f01 is defined.
  auto counted = make_stream_compose(f01, Q(scalar_schema(CostType::integer()), "iterop(add, c=0, basic(true, x))"));
  CHECK(run(counted, items({7})) == Value(1));
  CHECK(run(counted, items({7, 0, 9})) == Value(1));

  // A producer defined on every prefix turns the stream into a 0/1 stream.
  auto last01 = Q(s, "split(right, iterop(left, z=0, basic(true, 0)), else(basic(v < -5 | v > 5, 1), "
                     "basic(v >= -5 & v <= 5, 0)))");
  auto exceed = make_stream_compose(last01, Q(scalar_schema(CostType::integer()), "iterop(add, c=0, basic(true, x))"));
  CHECK(run(exceed, items({0, 6, -7, 1, 5, 5.5})) == Value(3));

  auto never = Q(s, "basic(false, 1)");
  auto on_empty = make_stream_compose(never, Q(scalar_schema(CostType::integer()), "iterop(add, c=42, basic(true, x))"));
  CHECK(run(on_empty, items({1, 2, 3})) == Value(42));

  CHECK(invariant_of([&] { make_stream_compose(Q(s, "iterop(add, p, basic(true, 1))"), never); }) ==
        "compose.no_params");
  CHECK(invariant_of([&] { make_stream_compose(f01, Q(s, "basic(true, v)")); }) == "compose.schema");

  SUBCASE("prefix law") {
    gen::QreGen g(99);
    std::mt19937_64 rng(1);
    for (int n = 0; n < 30; ++n) {
      auto f = g.expr(3);
      if (!f->params().empty() || !f->type().scalar()) continue;
      std::vector<Item> w;
      for (int i = 0; i < 7; ++i) w.push_back(g.letters()[rng() % 3]);
      // Feed the emitted sequence into a consumer that records it.
      auto sink = make_stream_compose(
          f, Q(scalar_schema(f->type()), f->type().kind == CostKind::real ? "iterop(add, c=0.0, basic(true, x))"
                                                                          : "iterop(add, c=0, basic(true, x))"));
      std::size_t emitted = 0;
      double total = 0;
      for (std::size_t i = 1; i <= w.size(); ++i)
        if (auto r = eval_reference(*f, std::span<const Item>(w).first(i))) {
          ++emitted;
          total += r->to_real();
        }
      CHECK(emitted <= w.size());
      auto got = run(sink, w);
      REQUIRE(got.has_value());
      CHECK(oracle::close(got->to_real(), total, 1e-12));
    }
  }
}

TEST_CASE("streaming evaluator") {
  auto s = real_v();
  auto b = Q(s, "basic(v > 0, v * 2)");
  auto ev = compile_streaming(b);
  CHECK_FALSE(ev.output().has_value());
  ev.step(Item{1.5});
  CHECK(ev.output() == Value(3.0));
  ev.step(Item{1.5});
  CHECK_FALSE(ev.output().has_value());
  CHECK_THROWS_AS(ev.step(Item{1.0, 2.0}), SchemaError);

  SUBCASE("copies are independent") {
    auto it = compile_streaming(Q(s, "iterop(add, c=0, basic(true, 1))"));
    it.step(Item{0.0});
    StreamEvaluator fork(it);
    fork.step(Item{0.0});
    fork.step(Item{0.0});
    CHECK(it.output() == Value(1));
    CHECK(fork.output() == Value(3));
    it.step(Item{0.0});
    CHECK(it.output() == Value(2));
  }

  SUBCASE("per-item work does not grow with the stream") {
    auto f = Q(s, "split(add, iterop(add, c=0, basic(true, 1)), basic(v > 100, 1))");
    auto e = compile_streaming(f);
    std::uint64_t before = 0, first = 0;
    for (int i = 0; i < 20000; ++i) {
      e.step(Item{static_cast<double>(i % 7)});
      if (i == 999) first = e.activations();
      if (i == 18999) before = e.activations();
    }
    CHECK(e.activations() - before == first);
    CHECK(e.instances() < 16);
  }

  CHECK_THROWS_AS(eval_reference(*Q(s, "iterop(add, p, basic(true, 1))"), items({1})), std::invalid_argument);
  CHECK_THROWS_AS(compile_streaming(Q(s, "iterop(add, p, basic(true, 1))"), {{"p", Value(1.0)}}),
                  std::invalid_argument);
}

TEST_CASE("parser round trip") {
  auto s = real_v();
  gen::QreGen g(4);
  for (int n = 0; n < 200; ++n) {
    auto q = g.expr(4);
    auto text = q->to_string();
    INFO(text);
    auto back = parse_qre(s, text);
    CHECK(back->to_string() == text);
  }
  CHECK_THROWS_AS(parse_qre(s, "basic(v <, 1)"), ParseError);
  CHECK_THROWS_AS(parse_qre(s, "nope(1)"), ParseError);
  CHECK_THROWS_AS(parse_qre(s, "basic(w < 1, 1)"), std::invalid_argument);
  CHECK(parse_qre(s, "# comment\n basic(true, 1) # trailing")->type() == CostType::integer());
}

TEST_CASE("random expressions: streaming equals reference, defined exactly on the domain") {
  gen::QreGen g(2024);
  gen::EquivalenceReport rep;
  std::size_t exprs = 0;
  std::map<Qre::Kind, int> kinds;
  std::function<void(const Qre&)> tally = [&](const Qre& q) {
    ++kinds[q.kind()];
    switch (q.kind()) {
      case Qre::Kind::basic: break;
      case Qre::Kind::cost_op:
        for (const auto& o : q.operands())
          if (o.qre) tally(*o.qre);
        break;
      case Qre::Kind::iter: tally(q.inner()); break;
      default: tally(q.left()); tally(q.right()); break;
    }
  };
  for (int n = 0; n < 120; ++n) {
    auto q = g.expr(4);
    tally(*q);
    for (const auto& v : g.valuations(*q)) {
      gen::check_equivalence(q, v, g.letters(), 6, rep);
      ++exprs;
    }
  }
  INFO(rep.first_failure);
  CHECK(rep.mismatches == 0);
  CHECK(rep.domain_violations == 0);
  for (auto k : {Qre::Kind::basic, Qre::Kind::cost_op, Qre::Kind::subst, Qre::Kind::else_, Qre::Kind::split,
                 Qre::Kind::iter, Qre::Kind::compose})
    CHECK(kinds[k] > 0);
  MESSAGE(exprs << " expression/valuation pairs, " << rep.streams << " streams");
}
