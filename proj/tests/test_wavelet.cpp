#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "qre/wavelet.hpp"

using namespace qre;

namespace {

double gauss(double t, double sigma) {
  return std::exp(-t * t / (2 * sigma * sigma)) / (sigma * std::sqrt(2 * std::numbers::pi));
}

// Mexican hat written out by hand: d2/dt2 of the Gaussian density.
double hat(double t, double sigma) { return (t * t / (sigma * sigma) - 1) * gauss(t, sigma) / (sigma * sigma); }

Signal random_signal(std::mt19937_64& rng, std::size_t n, double dt = 1e-3) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return make_signal(v, dt);
}

}  // namespace

TEST_CASE("mother wavelet") {
  WaveletSpec d1{1, 1.0};
  CHECK(mother_wavelet(d1, 0.0) == 0.0);
  WaveletSpec d2{2, 1.0};
  CHECK(mother_wavelet(d2, 0.0) < 0);
  CHECK(std::fabs(mother_wavelet(d2, 40.0)) < 1e-300);
  CHECK(std::fabs(mother_wavelet(d2, -40.0)) < 1e-300);

  SUBCASE("matches numeric derivatives of the Gaussian") {
    const double h = 1e-4;
    for (double sigma : {0.5, 1.0, 2.0})
      for (double t : {-1.7, -0.3, 0.0, 1.0, 2.5}) {
        double d = (gauss(t + h, sigma) - gauss(t - h, sigma)) / (2 * h);
        CHECK(mother_wavelet(WaveletSpec{1, sigma}, t) == doctest::Approx(d).epsilon(1e-6).scale(1));
        double dd = (gauss(t + h, sigma) - 2 * gauss(t, sigma) + gauss(t - h, sigma)) / (h * h);
        CHECK(std::fabs(mother_wavelet(WaveletSpec{2, sigma}, t) - dd) < 1e-5);
        CHECK(mother_wavelet(WaveletSpec{2, sigma}, t) == doctest::Approx(hat(t, sigma)).epsilon(1e-12));
        // Order 3 against a difference of the order-2 closed form.
        double ddd = (hat(t + h, sigma) - hat(t - h, sigma)) / (2 * h);
        CHECK(std::fabs(mother_wavelet(WaveletSpec{3, sigma}, t) - ddd) < 1e-5);
      }
  }

  CHECK_THROWS(WaveletSpec{0, 1.0}.validate());
  CHECK_THROWS(WaveletSpec{2, 0.0}.validate());
}

TEST_CASE("scaled wavelet") {
  WaveletSpec spec{2, 1.0};
  for (double t : {-2.0, 0.0, 0.7}) CHECK(scaled_wavelet(spec, 1.0, t) == mother_wavelet(spec, t));
  CHECK_THROWS_AS(scaled_wavelet(spec, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(scaled_wavelet(spec, -1.0, 1.0), std::invalid_argument);

  auto energy = [&](double s) {
    const double h = 1e-3;
    double e = 0;
    for (double t = -80; t <= 80; t += h) e += std::pow(scaled_wavelet(spec, s, t), 2) * h;
    return e;
  };
  CHECK(std::fabs(energy(4.0) - energy(1.0)) < 1e-6);
  CHECK(std::fabs(energy(2.5) - energy(1.0)) < 1e-6);

  // Four times wider, half the height.
  CHECK(scaled_wavelet(spec, 4.0, 0.0) == doctest::Approx(mother_wavelet(spec, 0.0) / 2));
  CHECK(std::fabs(scaled_wavelet(spec, 4.0, 4.0)) < 1e-15);  // zero crossing moves from 1 to 4
  CHECK(std::fabs(mother_wavelet(spec, 1.0)) < 1e-15);
  for (double t : {0.3, 1.7, 3.1}) CHECK(scaled_wavelet(spec, 4.0, 4 * t) == doctest::Approx(mother_wavelet(spec, t) / 2));
}

TEST_CASE("cwt") {
  const double dt = 1e-3;
  WaveletSpec spec{2, dt};
  ScaleGrid grid{{1, 2, 4, 8}};

  SUBCASE("zero signal") {
    auto sp = cwt(make_signal(std::vector<double>(200, 0.0), dt), grid, spec);
    for (double w : sp.w) CHECK(w == 0.0);
  }

  SUBCASE("impulse response") {
    std::vector<double> v(301, 0.0);
    const std::size_t j0 = 150;
    v[j0] = 1.0;
    auto sp = cwt_signed(make_signal(v, dt), grid, spec);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double s = grid.scales[i];
      auto half = static_cast<long>(support_samples(spec, s, dt));
      CHECK(half == static_cast<long>(std::ceil(6 * s)));
      for (std::size_t j = 0; j < v.size(); ++j) {
        long k = static_cast<long>(j0) - static_cast<long>(j);
        double want = std::labs(k) <= half ? hat(k * dt / s, dt) / std::sqrt(s) * dt : 0.0;
        CHECK(std::fabs(sp.at(i, j) - want) <= 1e-9);
      }
    }
  }

  SUBCASE("best scale grows with bump width") {
    ScaleGrid fine = ScaleGrid::range(1, 40);
    std::vector<std::size_t> best;
    for (double width : {2.0, 4.0, 8.0}) {
      std::vector<double> v(600);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-0.5 * std::pow((i - 300.0) / width, 2));
      auto sp = cwt(make_signal(v, dt), fine, spec);
      std::size_t arg = 0;
      for (std::size_t i = 0; i < fine.size(); ++i)
        if (sp.at(i, 300) > sp.at(arg, 300)) arg = i;
      best.push_back(arg);
    }
    CHECK(best[0] < best[1]);
    CHECK(best[1] < best[2]);
  }

  SUBCASE("linearity and shift covariance") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
      auto x = random_signal(rng, 400), y = random_signal(rng, 400);
      double a = 1.7, b = -0.4;
      std::vector<double> mix(400);
      for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x.v[i] + b * y.v[i];
      auto wx = cwt_signed(x, grid, spec), wy = cwt_signed(y, grid, spec);
      auto wm = cwt_signed(make_signal(mix, dt), grid, spec);
      double scale = 0;
      for (double w : wm.w) scale = std::max(scale, std::fabs(w));
      for (std::size_t k = 0; k < wm.w.size(); ++k)
        CHECK(std::fabs(wm.w[k] - (a * wx.w[k] + b * wy.w[k])) <= 1e-12 * scale);

      const std::size_t shift = 17;
      std::vector<double> shifted(400, 0.0);
      for (std::size_t i = 0; i + shift < 400; ++i) shifted[i + shift] = x.v[i];
      auto ws = cwt_signed(make_signal(shifted, dt), grid, spec);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        auto half = support_samples(spec, grid.scales[i], dt);
        for (std::size_t j = shift + half; j + half < 400; ++j)
          CHECK(std::fabs(ws.at(i, j) - wx.at(i, j - shift)) <= 1e-9);
      }
    }
  }

  SUBCASE("magnitudes") {
    std::mt19937_64 rng(9);
    auto x = random_signal(rng, 100);
    auto sp = cwt(x, grid, spec);
    auto signed_sp = cwt_signed(x, grid, spec);
    for (std::size_t k = 0; k < sp.w.size(); ++k) {
      CHECK(sp.w[k] >= 0);
      CHECK(std::isfinite(sp.w[k]));
      CHECK(sp.w[k] == std::fabs(signed_sp.w[k]));
    }
  }
}

TEST_CASE("column stream") {
  Spectrogram sp{{1, 2}, {0.0, 0.5}, {10, 11, 20, 21}};  // row s1: 10 11, row s2: 20 21
  auto items = column_stream(sp);
  REQUIRE(items.size() == 4);
  CHECK(items[0] == SpectrogramItem{2, 0.0, 20});
  CHECK(items[1] == SpectrogramItem{1, 0.0, 10});
  CHECK(items[2] == SpectrogramItem{2, 0.5, 21});
  CHECK(items[3] == SpectrogramItem{1, 0.5, 11});

  Spectrogram one{{3}, {0.25}, {7}};
  CHECK(column_stream(one) == std::vector<SpectrogramItem>{{3, 0.25, 7}});

  std::mt19937_64 rng(2);
  auto x = random_signal(rng, 50);
  auto big = cwt(x, ScaleGrid{{1, 2, 3, 5}}, WaveletSpec{2, 1e-3});
  auto stream = column_stream(big);
  REQUIRE(stream.size() == big.w.size());
  Spectrogram back{big.scales, big.times, std::vector<double>(big.w.size())};
  for (std::size_t k = 0; k < stream.size(); ++k) {
    std::size_t j = k / big.n_scales(), i = big.n_scales() - 1 - k % big.n_scales();
    CHECK(stream[k].scale == big.scales[i]);
    CHECK(stream[k].time == big.times[j]);
    back.at(i, j) = stream[k].magnitude;
  }
  CHECK(back.w == big.w);
}

TEST_CASE("spectrogram dumps") {
  Spectrogram sp{{1, 2}, {0.0, 0.5, 1.0}, {1, 2, 3, 4.5, 5, 6e-300}};
  std::stringstream bin;
  write_spectrogram_binary(bin, sp);
  CHECK(bin.str().size() == 16 + 8 * (2 + 3 + 6));
  CHECK(static_cast<unsigned char>(bin.str()[0]) == 2);  // little-endian n_scales
  auto back = read_spectrogram_binary(bin);
  CHECK(back.scales == sp.scales);
  CHECK(back.times == sp.times);
  CHECK(back.w == sp.w);

  std::stringstream text;
  write_spectrogram_text(text, sp);
  std::string first;
  std::getline(text, first);
  CHECK(first == "s,t,w");

  std::stringstream truncated(bin.str().substr(0, 20));
  CHECK_THROWS(read_spectrogram_binary(truncated));
}

TEST_CASE("signals and grids") {
  CHECK_NOTHROW(make_signal({1, 2, 3}, 0.001).validate());
  Signal jitter{{0.0, 0.001, 0.0020001}, {1, 2, 3}};
  CHECK_THROWS(jitter.validate());
  CHECK_THROWS(Signal{}.validate());
  CHECK_THROWS(ScaleGrid{{2, 1}}.validate());
  CHECK_THROWS(ScaleGrid{{0, 1}}.validate());
  CHECK(ScaleGrid::defaults().size() == 128);
  CHECK(ScaleGrid::defaults().index_of(80) == 79);
  CHECK_THROWS(ScaleGrid::defaults().index_of(80.5));
}
