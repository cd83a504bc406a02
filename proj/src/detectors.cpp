#include "qre/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "qre/streaming.hpp"

namespace qre {

namespace {

SchemaPtr one_field(const char* name, FieldKind kind) {
  return Schema::make({Field{name, kind, {}}});
}

ItemFn zero_fn() { return ItemFn::constant(Value(std::int64_t{0})); }

// iter[z=0>(left(z, f)): f's domain iterated, cost 0.
QrePtr repeat(const QrePtr& f) {
  std::string z = fresh_param("z");
  return make_iter(z, make_cost_op(Operation("left"), {operand(CostTerm::param(z, f->type())), operand(f)}),
                   zero_value(f->type()));
}

QrePtr any_star(const SchemaPtr& s) { return repeat(make_basic(Predicate::always(s), zero_fn())); }

// Position k (0-based) of exactly `len` items, cost lambda.
QrePtr pick(const SchemaPtr& s, std::size_t k, std::size_t len, const ItemFn& lambda) {
  QrePtr core = make_basic(Predicate::always(s), lambda);
  if (len - k - 1 > 0) core = make_split(Operation("left"), core, qre_skip(s, len - k - 1));
  if (k > 0) core = make_split(Operation("right"), qre_skip(s, k), core);
  return core;
}

void check_grid_scale(const ScaleGrid& grid, double sbar, double pbar, std::int64_t guard) {
  grid.validate();
  if (!(sbar > 0)) throw std::invalid_argument("sbar must be > 0");
  grid.index_of(sbar);
  if (!(pbar > 0) || !std::isfinite(pbar)) throw std::invalid_argument("pbar must be > 0");
  if (guard < 0) throw std::invalid_argument("guard must be >= 0");
}

ScaleGrid grid_of(const Spectrogram& sp) { return ScaleGrid{sp.scales}; }

PeakAnnotation annotate(const char* name, const Spectrogram& sp, const std::vector<std::int64_t>& idx,
                        std::int64_t guard) {
  PeakAnnotation a;
  a.detector = name;
  auto m = static_cast<std::int64_t>(sp.n_times());
  for (auto k : idx) {
    if (k < guard || k >= m - guard) continue;
    a.indices.push_back(k);
    a.times.push_back(sp.times[k]);
  }
  return a;
}

}  // namespace

void WpmParams::validate(const ScaleGrid& grid) const {
  check_grid_scale(grid, sbar, pbar, guard);
  if (delta < 0) throw std::invalid_argument("delta must be >= 0");
  if (!(eps > 0)) throw std::invalid_argument("eps must be > 0");
  std::size_t sigma = grid.index_of(sbar);
  for (std::size_t i = 1; i <= sigma; ++i)
    if (grid.scales[i] - grid.scales[i - 1] > eps + 1e-12)
      throw std::invalid_argument("eps is smaller than the grid step between scales " +
                                  format_real(grid.scales[i - 1]) + " and " + format_real(grid.scales[i]));
}

void WpbParams::validate(const ScaleGrid& grid) const {
  check_grid_scale(grid, sbar, pbar, guard);
  if (blanking < 1) throw std::invalid_argument("blanking length must be >= 1");
}

std::int64_t boundary_guard(const WaveletSpec& spec, double sbar, double dt) {
  return static_cast<std::int64_t>(support_samples(spec, sbar, dt));
}

SchemaPtr column_value_schema() {
  static const SchemaPtr s = one_field("x", FieldKind::real);
  return s;
}

SchemaPtr marker_schema() {
  static const SchemaPtr s = one_field("x", FieldKind::integer);
  return s;
}

SchemaPtr signal_schema() {
  static const SchemaPtr s = one_field("v", FieldKind::real);
  return s;
}

Predicate marker_zero() { return Predicate::compare(marker_schema(), "x", Cmp::lt, 0.5); }
Predicate marker_one() { return Predicate::compare(marker_schema(), "x", Cmp::ge, 0.5); }

QrePtr qre_skip(const SchemaPtr& schema, std::size_t k) {
  if (k == 0) throw std::invalid_argument("skip needs at least one item");
  if (k == 1) return make_basic(Predicate::always(schema), zero_fn());
  return make_split(Operation("left"), qre_skip(schema, k / 2), qre_skip(schema, k - k / 2));
}

QrePtr qre_select_coef(std::size_t i, std::size_t n) {
  if (i < 1 || i > n) throw std::invalid_argument("scale index out of range");
  auto s = spectrogram_schema();
  return pick(s, n - i, n, ItemFn::field(s, "w"));
}

QrePtr qre_repeat_select_coef(std::size_t i, std::size_t n) {
  auto s = spectrogram_schema();
  return make_split(Operation("right"), repeat(qre_skip(s, n)), qre_select_coef(i, n));
}

QrePtr qre_local_max(double p) {
  if (!(p >= 0)) throw std::invalid_argument("local maximum threshold must be >= 0");
  auto s = column_value_schema();
  auto x = ItemFn::field(s, "x");
  auto lm3 = make_cost_op(Operation("local_max3", {p}), {pick(s, 0, 3, x), pick(s, 1, 3, x), pick(s, 2, 3, x)});
  return make_split(Operation("right"), any_star(s), lm3);
}

QrePtr qre_one_max(std::size_t i, std::size_t n, double p) {
  return make_stream_compose(qre_repeat_select_coef(i, n), qre_local_max(p));
}

QrePtr qre_union_times() {
  auto s = marker_schema();
  auto one = ItemFn::constant(Value(std::int64_t{1}));
  // One interval 0*1, its length counting the closing 1.
  std::string c = fresh_param("c");
  auto zeros = make_iter(c, make_cost_op(Operation("add"), {operand(CostTerm::param(c, CostType::integer())),
                                                            operand(make_basic(marker_zero(), one))}),
                         Value(std::int64_t{0}));
  auto interval = make_split(Operation("add"), zeros, make_basic(marker_one(), one));
  CostType acc_t = CostType::tuple({CostType::integer(), CostType::intset()});
  std::string acc = fresh_param("acc");
  auto times = make_iter(acc, make_cost_op(Operation("union_insert"), {operand(CostTerm::param(acc, acc_t)),
                                                                       operand(interval)}),
                         Value::tuple({Value(std::int64_t{0}), Value::intset({})}));
  auto tail = repeat(make_basic(marker_zero(), zero_fn()));
  return make_cost_op(Operation("tuple_get", {1}), {make_split(Operation("left"), times, tail)});
}

QrePtr qre_peak_times(std::size_t i, std::size_t n, double p) {
  return make_stream_compose(qre_repeat_select_coef(i, n), make_stream_compose(qre_local_max(p), qre_union_times()));
}

QrePtr qre_peak_wpm(std::size_t sigma, std::size_t n, double pbar, std::int64_t delta) {
  if (sigma < 1 || sigma > n) throw std::invalid_argument("scale index out of range");
  std::vector<QrePtr> levels;
  for (std::size_t i = sigma; i >= 1; --i) levels.push_back(qre_peak_times(i, n, i == sigma ? pbar : 0.0));
  if (levels.size() == 1) return levels[0];
  return make_cost_op(Operation("conn", {static_cast<double>(delta)}), std::move(levels));
}

QrePtr qre_latest_peak(std::int64_t blanking) {
  if (blanking < 1) throw std::invalid_argument("blanking length must be >= 1");
  auto s = marker_schema();
  auto zeros = repeat(make_basic(marker_zero(), zero_fn()));
  auto window = qre_skip(s, static_cast<std::size_t>(blanking));
  auto block = make_split(Operation("left"), make_split(Operation("left"), make_basic(marker_one(), zero_fn()), window),
                          zeros);
  auto prefix = make_split(Operation("left"), zeros, repeat(block));
  return make_split(Operation("right"), prefix, make_basic(marker_one(), ItemFn::constant(Value(std::int64_t{1}))));
}

QrePtr qre_peak_wpb(std::size_t sigma, std::size_t n, double pbar, std::int64_t blanking) {
  return make_stream_compose(qre_repeat_select_coef(sigma, n),
                             make_stream_compose(qre_local_max(pbar), qre_latest_peak(blanking)));
}

std::vector<std::int64_t> conn_delta(const std::vector<std::vector<std::int64_t>>& sets, std::int64_t delta) {
  if (sets.empty()) throw std::invalid_argument("conn_delta needs at least one set");
  if (delta < 0) throw std::invalid_argument("delta must be >= 0");
  std::vector<Value> args;
  for (auto set : sets) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    args.push_back(Value::intset(std::move(set)));
  }
  return Operation("conn", {static_cast<double>(delta)}).apply(args).as_intset();
}

PeakAnnotation detect_wpm(const Spectrogram& sp, const WpmParams& params) {
  ScaleGrid grid = grid_of(sp);
  params.validate(grid);
  const std::size_t n = sp.n_scales(), sigma = grid.index_of(params.sbar) + 1;
  StreamEvaluator ev(qre_peak_wpm(sigma, n, params.pbar, params.delta));
  for (const auto& d : column_stream(sp)) ev.step(to_item(d));
  std::vector<std::int64_t> idx;
  if (auto out = ev.output()) idx = out->as_intset();  // marker position k is sample k
  return annotate("wpm", sp, idx, params.guard);
}

PeakAnnotation detect_wpb(const Spectrogram& sp, const WpbParams& params) {
  ScaleGrid grid = grid_of(sp);
  params.validate(grid);
  const std::size_t n = sp.n_scales(), sigma = grid.index_of(params.sbar) + 1;
  StreamEvaluator ev(qre_peak_wpb(sigma, n, params.pbar, params.blanking));
  std::vector<std::int64_t> idx;
  std::size_t at = 0;
  for (const auto& d : column_stream(sp)) {
    ev.step(to_item(d));
    if (++at % n) continue;
    std::size_t column = at / n;  // 1-based; its marker is for column - 1
    if (column >= 3 && ev.output()) idx.push_back(static_cast<std::int64_t>(column) - 2);
  }
  return annotate("wpb", sp, idx, params.guard);
}

QrePtr qre_mdt(const MdtParams& params) {
  params.validate();
  auto s = signal_schema();
  auto y = make_basic(Predicate::always(s), ItemFn::unary(ItemFn::Kind::abs, ItemFn::field(s, "v")));
  std::string st = fresh_param("state");
  Operation thev("thev", {static_cast<double>(params.blanking), params.decay, params.min_threshold});
  auto body = make_cost_op(thev, {operand(CostTerm::param(st, mdt_state_type())), operand(y)});
  return make_iter(st, body, mdt_to_value(mdt_initial(params)));
}

namespace {

void record(MdtRun& run, const MdtState& s, const Signal& x) {
  run.states.push_back(s);
  run.threshold.push_back(s.threshold);
  if (s.flag) {
    run.peaks.indices.push_back(s.time);
    run.peaks.times.push_back(x.t[s.time]);
  }
}

}  // namespace

MdtRun detect_mdt(const Signal& x, const MdtParams& params) {
  x.validate();
  MdtRun run;
  run.peaks.detector = "mdt";
  StreamEvaluator ev(qre_mdt(params));
  for (double v : x.v) {
    ev.step(Item{v});
    record(run, mdt_from_value(*ev.output()), x);
  }
  return run;
}

MdtRun detect_mdt_direct(const Signal& x, const MdtParams& params) {
  x.validate();
  params.validate();
  MdtRun run;
  run.peaks.detector = "mdt";
  MdtState s = mdt_initial(params);
  for (double v : x.v) {
    s = mdt_thev(s, std::fabs(v), params);
    record(run, s, x);
  }
  return run;
}

void write_annotation(std::ostream& out, const PeakAnnotation& a, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "index,time,detector\n";
  for (std::size_t k = 0; k < a.indices.size(); ++k)
    out << a.indices[k] << ',' << format_real(a.times[k]) << ',' << a.detector << '\n';
}

}  // namespace qre
