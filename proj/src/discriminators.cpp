#include "qre/discriminators.hpp"

#include <stdexcept>

#include "qre/detectors.hpp"
#include "qre/parse.hpp"

namespace qre {

namespace {

ItemFn int_const(std::int64_t v) { return ItemFn::constant(Value(v)); }

Predicate beat() { return Predicate::is_label(beat_schema(), "beat", "true"); }
Predicate no_beat() { return !beat(); }

QrePtr split_add_tree(const std::vector<QrePtr>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  std::size_t mid = lo + (hi - lo) / 2;
  return make_split(Operation("add"), split_add_tree(parts, lo, mid), split_add_tree(parts, mid, hi));
}

QrePtr split_and_chain(const std::vector<QrePtr>& parts, std::size_t from) {
  if (from + 1 == parts.size()) return parts[from];
  return make_split(Operation("and"), parts[from], split_and_chain(parts, from + 1));
}

Predicate chamber_is(const char* label) { return Predicate::is_label(chamber_schema(), "chamber", label); }

// iter[z=0>(left(z, f)): f's domain iterated, cost 0.
QrePtr repeat_left(const QrePtr& f) {
  std::string z = fresh_param("z");
  return make_iter(z, make_cost_op(Operation("left"), {operand(CostTerm::param(z, f->type())), operand(f)}),
                   zero_value(f->type()));
}

// `label` followed by k zeros, for k in [lo, hi]; true.
QrePtr letter_then_zeros(const char* label, std::size_t lo, std::size_t hi) {
  auto s = chamber_schema();
  QrePtr out;
  for (std::size_t k = lo; k <= hi; ++k) {
    QrePtr q = make_basic(chamber_is(label), int_const(1));
    if (k > 0) {
      // Each run of zeros costs 1 as well, so `and` sees only truth.
      QrePtr zeros = make_basic(chamber_is("0"), int_const(1));
      for (std::size_t j = 1; j < k; ++j)
        zeros = make_split(Operation("left"), zeros, make_basic(chamber_is("0"), int_const(1)));
      q = make_split(Operation("left"), q, zeros);
    }
    out = out ? make_else(out, q) : q;
  }
  return make_cost_op(Operation("gt"), {operand(out), operand(CostTerm::constant(Value(std::int64_t{1})))});
}

}  // namespace

SchemaPtr beat_schema() {
  static const SchemaPtr s = parse_schema("beat:boolean");
  return s;
}

SchemaPtr chamber_schema() {
  static const SchemaPtr s = parse_schema("chamber:enum(0|A|V)");
  return s;
}

QrePtr qre_count_in_range(std::int64_t lo, std::int64_t hi, std::size_t window) {
  if (lo < 0 || hi < lo) throw std::invalid_argument("count range needs 0 <= lo <= hi");
  if (window == 0) throw std::invalid_argument("window must hold at least one item");
  std::vector<QrePtr> leaves;
  for (std::size_t i = 0; i < window; ++i)
    leaves.push_back(make_else(make_basic(beat(), int_const(1)), make_basic(no_beat(), int_const(0))));
  return make_cost_op(Operation("inrange", {static_cast<double>(lo), static_cast<double>(hi)}),
                      {split_add_tree(leaves, 0, leaves.size())});
}

QrePtr qre_interval_length() {
  std::string c = fresh_param("c");
  auto zeros = make_iter(c, make_cost_op(Operation("add"), {operand(CostTerm::param(c, CostType::integer())),
                                                            operand(make_basic(no_beat(), int_const(1)))}),
                         Value(std::int64_t{0}));
  return make_split(Operation("add"), zeros, make_basic(beat(), int_const(1)));
}

QrePtr qre_four_beats() {
  std::vector<QrePtr> four;
  for (int i = 0; i < 4; ++i) four.push_back(qre_interval_length());
  return make_cost_op(Operation("scale", {0.25}), {split_add_tree(four, 0, 4)});
}

QrePtr qre_sudden_onset() { return make_split(Operation("inc"), qre_four_beats(), qre_four_beats()); }

QrePtr qre_pattern(const std::array<std::size_t, 8>& b) {
  for (std::size_t k = 0; k < 8; k += 2)
    if (b[k] > b[k + 1]) throw std::invalid_argument("pattern bounds need lo <= hi");
  std::vector<QrePtr> parts{letter_then_zeros("V", b[0], b[1]), letter_then_zeros("A", b[2], b[3]),
                            letter_then_zeros("V", b[4], b[5]), letter_then_zeros("A", b[6], b[7])};
  parts.push_back(make_basic(chamber_is("V"), ItemFn::constant(Value(std::int64_t{1}))));
  parts.back() = make_cost_op(Operation("gt"), {operand(parts.back()), operand(CostTerm::constant(Value(std::int64_t{1})))});
  return split_and_chain(parts, 0);
}

QrePtr qre_sliding(std::size_t window, WindowAggregate agg, const CostType& kind) {
  if (window == 0) throw std::invalid_argument("window length must be >= 1");
  auto s = scalar_schema(kind);
  auto L = static_cast<double>(window);
  std::string w = fresh_param("w");
  CostType wt = window_type(window);
  auto push = make_cost_op(Operation("window_push", {L}),
                           {operand(CostTerm::param(w, wt)), operand(make_basic(Predicate::always(s), ItemFn::field(s, "x")))});
  auto win = make_iter(w, push, zero_value(wt));
  const char* name = agg == WindowAggregate::mean ? "window_mean"
                     : agg == WindowAggregate::stddev ? "window_std"
                                                      : "window_meansq";
  return make_cost_op(Operation(name, {L}), {win});
}

QrePtr qre_heart_rate(const QrePtr& producer, std::size_t window) {
  return make_stream_compose(producer, qre_sliding(window, WindowAggregate::mean, producer->type()));
}

QrePtr qre_stability(const QrePtr& producer, std::size_t window) {
  return make_stream_compose(producer, qre_sliding(window, WindowAggregate::stddev, producer->type()));
}

QrePtr qre_rate_compare(const QrePtr& fv, const QrePtr& fa) { return make_cost_op(Operation("gt"), {fv, fa}); }

QrePtr qre_last_beat() {
  auto item = make_else(make_basic(beat(), int_const(1)), make_basic(no_beat(), int_const(0)));
  return qre_on_suffix(item);
}

QrePtr qre_last_chamber(const std::string& label) {
  Predicate is = chamber_is(label.c_str());
  return qre_on_suffix(make_else(make_basic(is, int_const(1)), make_basic(!is, int_const(0))));
}

QrePtr qre_on_suffix(const QrePtr& f) {
  return make_split(Operation("right"), repeat_left(make_basic(Predicate::always(f->schema()), int_const(0))), f);
}

QrePtr qre_after_beat(const QrePtr& f) {
  if (!(*f->schema() == *beat_schema())) throw std::invalid_argument("qre_after_beat needs a beat stream expression");
  return make_split(Operation("right"), repeat_left(qre_interval_length()), f);
}

}  // namespace qre
