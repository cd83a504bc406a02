#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "detector_oracles.hpp"
#include "oracles.hpp"
#include "qre/detectors.hpp"
#include "qre/io.hpp"
#include "qre/reference.hpp"
#include "qre/streaming.hpp"

using namespace qre;

namespace {

std::vector<Item> items_of(const Spectrogram& sp) {
  std::vector<Item> out;
  for (const auto& d : column_stream(sp)) out.push_back(to_item(d));
  return out;
}

std::vector<Item> scalars(const std::vector<double>& xs) {
  std::vector<Item> out;
  for (double x : xs) out.push_back(Item{x});
  return out;
}

std::optional<Value> run(const QrePtr& q, const std::vector<Item>& w) {
  StreamEvaluator ev(q);
  for (const auto& it : w) ev.step(it);
  auto out = ev.output();
  CHECK(oracle::same_output(out, eval_reference(*q, w)));
  return out;
}

// Prefix lengths (1-based) at which the expression is defined.
std::vector<std::int64_t> defined_at(const QrePtr& q, const std::vector<Item>& w) {
  std::vector<std::int64_t> out;
  StreamEvaluator ev(q);
  for (std::size_t k = 0; k < w.size(); ++k) {
    ev.step(w[k]);
    if (ev.output()) out.push_back(static_cast<std::int64_t>(k + 1));
  }
  return out;
}

Spectrogram random_spectrogram(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::uniform_real_distribution<double> u(0, 10);
  Spectrogram sp;
  for (std::size_t i = 1; i <= n; ++i) sp.scales.push_back(static_cast<double>(i));
  for (std::size_t j = 0; j < m; ++j) sp.times.push_back(0.001 * static_cast<double>(j));
  sp.w.resize(n * m);
  for (double& x : sp.w) x = std::round(u(rng));  // ties exercise the strict comparison
  return sp;
}

std::vector<std::int64_t> ints(const std::optional<Value>& v) { return v ? v->as_intset() : std::vector<std::int64_t>{99}; }

}  // namespace

TEST_CASE("coefficient selection") {
  // One column, scales 1..3, read largest scale first.
  Spectrogram sp{{1, 2, 3}, {0.0, 0.1}, {10, 11, 20, 21, 30, 31}};
  auto w = items_of(sp);
  std::vector<Item> first(w.begin(), w.begin() + 3);
  CHECK(run(qre_select_coef(1, 3), first)->to_real() == 10);
  CHECK(run(qre_select_coef(2, 3), first)->to_real() == 20);
  CHECK(run(qre_select_coef(3, 3), first)->to_real() == 30);
  CHECK_FALSE(run(qre_select_coef(1, 3), w));
  CHECK_FALSE(run(qre_select_coef(1, 3), {w.begin(), w.begin() + 2}));
  CHECK_THROWS(qre_select_coef(0, 3));
  CHECK_THROWS(qre_select_coef(4, 3));

  auto rep = qre_repeat_select_coef(2, 3);
  CHECK(run(rep, first)->to_real() == 20);
  CHECK(run(rep, w)->to_real() == 21);
  CHECK_FALSE(run(rep, {}));
  CHECK_FALSE(run(rep, {w.begin(), w.begin() + 4}));
}

TEST_CASE("local maximum") {
  CHECK(run(qre_local_max(2), scalars({1, 3, 2}))->as_int() == 1);
  CHECK(run(qre_local_max(5), scalars({1, 3, 2}))->as_int() == 0);
  CHECK(run(qre_local_max(0), scalars({1, 2, 3}))->as_int() == 0);
  CHECK(run(qre_local_max(0), scalars({2, 2, 1}))->as_int() == 0);
  CHECK(run(qre_local_max(0), scalars({5, 1, 3, 2}))->as_int() == 1);
  CHECK(run(qre_local_max(0), scalars({1, 3, 2, 2}))->as_int() == 0);
  CHECK_FALSE(run(qre_local_max(0), scalars({1, 3})));
  CHECK_FALSE(run(qre_local_max(0), {}));
  CHECK_THROWS(qre_local_max(-1));

  // Column by column: the marker is for the second-to-last column.
  Spectrogram sp{{1, 2}, {0, 1, 2, 3, 4}, {0, 5, 1, 7, 2, /* s2 */ 9, 9, 9, 9, 9}};
  auto w = items_of(sp);
  auto q = qre_one_max(1, 2, 0.0);
  std::vector<std::int64_t> marks;
  StreamEvaluator ev(q);
  for (std::size_t k = 0; k < w.size(); ++k) {
    ev.step(w[k]);
    if ((k + 1) % 2 == 0) marks.push_back(ev.output() ? ev.output()->as_int() : -1);
  }
  CHECK(marks == std::vector<std::int64_t>{-1, -1, 1, 0, 1});
  CHECK(run(qre_one_max(2, 2, 0.0), w)->as_int() == 0);
}

TEST_CASE("marker positions") {
  auto ut = qre_union_times();
  CHECK(ints(run(ut, scalars({0, 1, 0, 0, 1}))) == std::vector<std::int64_t>{2, 5});
  CHECK(ints(run(ut, scalars({0, 0, 0}))).empty());
  CHECK(ints(run(ut, scalars({1}))) == std::vector<std::int64_t>{1});
  CHECK(ints(run(ut, scalars({1, 1, 0}))) == std::vector<std::int64_t>{1, 2});
  CHECK(ints(run(ut, {})).empty());
  CHECK(check_equivalent(ut->domain(), Regex::star(Regex::atom(Predicate::always(marker_schema())))));

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> m(rng() % 12);
    std::vector<std::int64_t> want;
    for (std::size_t k = 0; k < m.size(); ++k)
      if ((m[k] = static_cast<double>(rng() % 2)) == 1) want.push_back(static_cast<std::int64_t>(k + 1));
    CHECK(ints(run(ut, scalars(m))) == want);
  }

  // Through the whole pipeline: marker position k is sample k.
  Spectrogram sp{{1}, {0, 1, 2, 3, 4, 5, 6}, {0, 4, 1, 1, 6, 2, 3}};
  CHECK(ints(run(qre_peak_times(1, 1, 0.0), items_of(sp))) == std::vector<std::int64_t>{1, 4});
  CHECK(ints(run(qre_peak_times(1, 1, 5.0), items_of(sp))) == std::vector<std::int64_t>{4});
  CHECK(qre_peak_times(1, 1, 0.0)->exact_domain());
}

TEST_CASE("latest peak") {
  auto lp = qre_latest_peak(2);
  CHECK(defined_at(lp, scalars({1, 0, 0, 1})) == std::vector<std::int64_t>{1, 4});
  CHECK(defined_at(lp, scalars({1, 1})) == std::vector<std::int64_t>{1});
  CHECK(defined_at(lp, scalars({0, 1, 1, 1, 1, 0, 1})) == std::vector<std::int64_t>{2, 5});
  CHECK(defined_at(lp, scalars({0, 0, 0})).empty());
  CHECK(run(lp, scalars({1}))->as_int() == 1);
  CHECK_THROWS(qre_latest_peak(0));

  // Greedy blanking oracle over random marker strings.
  std::mt19937_64 rng(5);
  for (long bl : {1L, 2L, 3L})
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> m(rng() % 14);
      std::vector<std::int64_t> want;
      long last = -1000;
      for (std::size_t k = 0; k < m.size(); ++k) {
        m[k] = rng() % 3 == 0 ? 1 : 0;
        long pos = static_cast<long>(k + 1);
        if (m[k] == 1 && pos > last + bl) {
          want.push_back(pos);
          last = pos;
        }
      }
      CHECK(defined_at(qre_latest_peak(bl), scalars(m)) == want);
    }
}

TEST_CASE("delta connectivity") {
  CHECK(conn_delta({{10}, {12}, {15}}, 3) == std::vector<std::int64_t>{15});
  CHECK(conn_delta({{10}, {14}}, 3).empty());
  CHECK(conn_delta({{1, 20}, {3, 18, 30}}, 2) == std::vector<std::int64_t>{3, 18});
  CHECK(conn_delta({{4, 2}}, 0) == std::vector<std::int64_t>{2, 4});
  CHECK(conn_delta({{}, {1, 2}}, 5).empty());
  CHECK_THROWS(conn_delta({}, 1));
  CHECK_THROWS(conn_delta({{1}}, -1));

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 2000; ++trial) {
    std::size_t k = 1 + rng() % 4;
    long delta = static_cast<long>(rng() % 4);
    std::vector<std::vector<std::int64_t>> sets(k);
    std::vector<std::set<long>> osets(k);
    for (std::size_t i = 0; i < k; ++i)
      for (int e = 0, n = static_cast<int>(rng() % 5); e < n; ++e) {
        long t = static_cast<long>(rng() % 16);
        sets[i].push_back(t);
        osets[i].insert(t);
      }
    auto got = conn_delta(sets, delta);
    std::set<long> want = oracle::conn_chain(osets, delta);
    CHECK(std::set<long>(got.begin(), got.end()) == want);
    CHECK(std::is_sorted(got.begin(), got.end()));
    // More tolerance or larger sets never lose survivors.
    auto looser = conn_delta(sets, delta + 1);
    CHECK(std::includes(looser.begin(), looser.end(), got.begin(), got.end()));
    auto bigger = sets;
    bigger[0].push_back(static_cast<long>(rng() % 16));
    auto more = conn_delta(bigger, delta);
    CHECK(std::includes(more.begin(), more.end(), got.begin(), got.end()));
  }
}

TEST_CASE("detectors against direct loops") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 1 + rng() % 4, m = 3 + rng() % 40;
    auto sp = random_spectrogram(rng, n, m);
    double sbar = static_cast<double>(1 + rng() % n);
    double pbar = static_cast<double>(rng() % 8);
    std::int64_t delta = static_cast<std::int64_t>(rng() % 3), guard = static_cast<std::int64_t>(rng() % 3);
    std::int64_t bl = 1 + static_cast<std::int64_t>(rng() % 6);
    std::size_t top = static_cast<std::size_t>(sbar) - 1;

    auto wpm = detect_wpm(sp, WpmParams{sbar, pbar + 0.5, 1, delta, guard});
    CHECK(wpm.detector == "wpm");
    CHECK(wpm.indices == oracle::wpm(sp, top, pbar + 0.5, delta, guard));
    for (std::size_t k = 0; k < wpm.indices.size(); ++k) CHECK(wpm.times[k] == sp.times[wpm.indices[k]]);

    auto wpb = detect_wpb(sp, WpbParams{sbar, pbar + 0.5, bl, guard});
    CHECK(wpb.indices == oracle::wpb(sp, top, pbar + 0.5, bl, guard));
  }

  Spectrogram sp{{1, 3}, {0, 1, 2}, {0, 1, 0, 0, 1, 0}};
  CHECK_THROWS(detect_wpm(sp, WpmParams{3, 0.5, 1, 1, 0}));  // eps below the grid step
  CHECK_NOTHROW(detect_wpm(sp, WpmParams{3, 0.5, 2, 1, 0}));
  CHECK_THROWS(detect_wpm(sp, WpmParams{2, 0.5, 2, 1, 0}));  // sbar not on the grid
  CHECK_THROWS(detect_wpb(sp, WpbParams{3, 0.5, 0, 0}));
  CHECK_THROWS(detect_wpb(sp, WpbParams{3, -1, 5, 0}));
}

TEST_CASE("wpm peaks refine the scale-sbar maxima") {
  // Each level may move a chain by delta, so a peak lies within
  // (levels - 1) * delta of a seed; with two levels that is delta.
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 2 + rng() % 3, m = 10 + rng() % 40;
    auto sp = random_spectrogram(rng, n, m);
    std::size_t top = 1 + rng() % (n - 1);
    std::int64_t delta = static_cast<std::int64_t>(rng() % 3);
    double pbar = 4.5;
    auto seeds = oracle::row_maxima(sp, top, pbar);
    auto peaks = detect_wpm(sp, WpmParams{static_cast<double>(top + 1), pbar, 1, delta, 0}).indices;
    const auto slack = static_cast<std::int64_t>(top) * delta;
    for (auto t : peaks) {
      bool near = std::any_of(seeds.begin(), seeds.end(), [&](long s) { return std::llabs(t - s) <= slack; });
      CHECK(near);
    }
  }

  // Three levels drifting 10 -> 12 -> 14 with delta 2: the peak is 4 from its seed.
  Spectrogram sp{{1, 2, 3}, {}, {}};
  for (int j = 0; j < 20; ++j) sp.times.push_back(j);
  sp.w.assign(3 * 20, 0.0);
  sp.at(2, 10) = 9;
  sp.at(1, 12) = 1;
  sp.at(0, 14) = 1;
  CHECK(detect_wpm(sp, WpmParams{3, 5, 1, 2, 0}).indices == std::vector<std::int64_t>{14});
}

TEST_CASE("synthetic spikes") {
  SyntheticSpec spec;
  spec.gaps = {250, 250, 250, 250};
  spec.noise = 10;
  spec.seed = 3;
  auto syn = generate_synthetic(spec);
  WaveletSpec ws{2, spec.dt};
  ScaleGrid grid{{4, 8, 12, 16}};
  auto sp = cwt(syn.signal, grid, ws);
  double top = 0;
  for (std::size_t j = 0; j < sp.n_times(); ++j) top = std::max(top, sp.at(3, j));
  auto guard = boundary_guard(ws, 16, spec.dt);
  CHECK(guard == 96);

  auto near_each = [&](const std::vector<std::int64_t>& got, std::int64_t tol) {
    REQUIRE(got.size() == syn.centers.size());
    for (std::size_t k = 0; k < got.size(); ++k) CHECK(std::llabs(got[k] - syn.centers[k]) <= tol);
  };
  near_each(detect_wpm(sp, WpmParams{16, top / 2, 4, 3, guard}).indices, 3);
  near_each(detect_wpb(sp, WpbParams{16, top / 2, 150, guard}).indices, 3);
}

TEST_CASE("threshold detector") {
  MdtParams p;
  p.blanking = 5;
  p.decay = 0.1;
  p.min_threshold = 2;
  p.initial_threshold = 10;

  SUBCASE("floor") {
    auto run = detect_mdt_direct(make_signal(std::vector<double>(100, 0.0), 1e-3), p);
    CHECK(run.peaks.indices.empty());
    CHECK(run.threshold[0] == doctest::Approx(10 * std::exp(-0.1)));
    for (double th : run.threshold) CHECK(th >= 2);
    CHECK(run.threshold.back() == 2);
  }

  SUBCASE("single spike") {
    std::vector<double> v(40, 0.0);
    v[3] = -50;  // rectified
    v[5] = 60;   // inside the blanking window: absorbed, raises the maximum
    auto run = detect_mdt_direct(make_signal(v, 1e-3), p);
    CHECK(run.peaks.indices == std::vector<std::int64_t>{3});
    for (int t = 3; t < 8; ++t) CHECK(run.threshold[t] == run.threshold[2]);
    CHECK(run.threshold[8] == doctest::Approx(0.75 * 60));
    for (std::size_t t = 9; t < v.size(); ++t)
      CHECK(run.threshold[t] == doctest::Approx(std::max(2.0, 45 * std::exp(-0.1 * (t - 8.0)))).epsilon(1e-12));
    CHECK(run.states[8].tmax == 5);
  }

  SUBCASE("engine matches the loop and the closed form") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> v(300);
      for (auto& x : v) x = u(rng) + (rng() % 25 == 0 ? 40 * u(rng) : 0);
      auto x = make_signal(v, 1e-3);
      auto direct = detect_mdt_direct(x, p), engine = detect_mdt(x, p);
      CHECK(engine.states == direct.states);
      CHECK(engine.peaks.indices == direct.peaks.indices);

      // After each reset at tstart + BL, until the next crossing.
      for (std::size_t t = 0; t < v.size(); ++t) {
        const auto& s = direct.states[t];
        if (s.blanking || direct.peaks.indices.empty() || static_cast<std::int64_t>(t) < direct.peaks.indices.front())
          continue;
        double want = std::max(p.min_threshold, 0.75 * s.ymax * std::exp(-p.decay * (t - s.tstart - p.blanking)));
        CHECK(std::fabs(direct.threshold[t] - want) <= 1e-9 * want);
      }
    }
  }

  CHECK_THROWS(qre_mdt(MdtParams{0}));
  MdtParams bad = p;
  bad.initial_threshold = 1;
  CHECK_THROWS(detect_mdt(make_signal({1.0}, 1e-3), bad));
}

TEST_CASE("annotation output") {
  PeakAnnotation a{"wpb", {3, 9}, {0.003, 0.009}};
  std::ostringstream out;
  write_annotation(out, a, {"sbar=80"});
  CHECK(out.str() == "# sbar=80\nindex,time,detector\n3,0.003,wpb\n9,0.009,wpb\n");
}
