#include "qre/wavelet.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "qre/value.hpp"

namespace qre {

void Signal::validate() const {
  if (v.empty()) throw std::invalid_argument("signal has no samples");
  if (t.size() != v.size()) throw std::invalid_argument("signal has mismatched time and value columns");
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument("signal contains a non-finite value");
  if (t.size() < 2) return;
  double step = t[1] - t[0];
  if (!(step > 0)) throw std::invalid_argument("sample times must be strictly increasing");
  for (std::size_t i = 1; i < t.size(); ++i) {
    double d = t[i] - t[i - 1];
    if (!(d > 0)) throw std::invalid_argument("sample times must be strictly increasing (row " + std::to_string(i) + ")");
    if (std::fabs(d - step) > 1e-9)
      throw std::invalid_argument("non-uniform sample spacing at row " + std::to_string(i));
  }
}

Signal make_signal(std::vector<double> v, double dt, double t0) {
  Signal s;
  s.t.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) s.t[i] = t0 + static_cast<double>(i) * dt;
  s.v = std::move(v);
  return s;
}

void WaveletSpec::validate() const {
  if (order < 1) throw std::invalid_argument("wavelet order must be >= 1");
  if (!(sigma > 0) || !std::isfinite(sigma)) throw std::invalid_argument("wavelet sigma must be > 0");
}

ScaleGrid ScaleGrid::range(int lo, int hi) {
  ScaleGrid g;
  for (int s = lo; s <= hi; ++s) g.scales.push_back(s);
  g.validate();
  return g;
}

void ScaleGrid::validate() const {
  if (scales.empty()) throw std::invalid_argument("scale grid is empty");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0) || !std::isfinite(scales[i])) throw std::invalid_argument("scales must be positive");
    if (i && !(scales[i] > scales[i - 1])) throw std::invalid_argument("scales must be strictly increasing");
  }
}

std::size_t ScaleGrid::index_of(double s) const {
  for (std::size_t i = 0; i < scales.size(); ++i)
    if (std::fabs(scales[i] - s) <= 1e-9) return i;
  throw std::invalid_argument("scale " + std::to_string(s) + " is not in the grid");
}

double mother_wavelet(const WaveletSpec& spec, double t) {
  double x = t / spec.sigma;
  double h0 = 1.0, h1 = x;
  for (int k = 1; k < spec.order; ++k) {
    double h2 = x * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  double he = spec.order == 0 ? 1.0 : h1;
  double g = std::exp(-0.5 * x * x) / (spec.sigma * std::sqrt(2.0 * std::numbers::pi));
  double sign = spec.order % 2 ? -1.0 : 1.0;
  return sign * he * g / std::pow(spec.sigma, spec.order);
}

double scaled_wavelet(const WaveletSpec& spec, double s, double t) {
  if (!(s > 0)) throw std::invalid_argument("scale must be > 0");
  return mother_wavelet(spec, t / s) / std::sqrt(s);
}

std::size_t support_samples(const WaveletSpec& spec, double s, double dt) {
  return static_cast<std::size_t>(std::ceil(6.0 * s * spec.sigma / dt - 1e-12));
}

Spectrogram cwt_signed(const Signal& x, const ScaleGrid& grid, const WaveletSpec& spec) {
  x.validate();
  grid.validate();
  spec.validate();
  const double dt = x.dt();
  const std::size_t m = x.size();
  Spectrogram sp;
  sp.scales = grid.scales;
  sp.times = x.t;
  sp.w.assign(grid.size() * m, 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = grid.scales[i];
    const auto half = static_cast<std::ptrdiff_t>(support_samples(spec, s, dt));
    std::vector<double> taps(2 * half + 1);
    for (std::ptrdiff_t k = -half; k <= half; ++k) taps[k + half] = scaled_wavelet(spec, s, k * dt) * dt;
    for (std::size_t j = 0; j < m; ++j) {
      const auto jj = static_cast<std::ptrdiff_t>(j);
      std::ptrdiff_t lo = std::max(-half, -jj);
      std::ptrdiff_t hi = std::min(half, static_cast<std::ptrdiff_t>(m) - 1 - jj);
      // Compensated dot product: the error terms of each product and each
      // addition are summed separately, so the result is nearly correctly rounded.
      double acc = 0.0, err = 0.0;
      for (std::ptrdiff_t k = lo; k <= hi; ++k) {
        const double a = x.v[j + k], b = taps[k + half];
        const double p = a * b;
        const double s = acc + p;
        const double z = s - acc;
        err += std::fma(a, b, -p) + ((acc - (s - z)) + (p - z));
        acc = s;
      }
      sp.at(i, j) = acc + err;
    }
  }
  return sp;
}

Spectrogram cwt(const Signal& x, const ScaleGrid& grid, const WaveletSpec& spec) {
  Spectrogram sp = cwt_signed(x, grid, spec);
  for (double& c : sp.w) c = std::fabs(c);
  return sp;
}

std::vector<SpectrogramItem> column_stream(const Spectrogram& sp) {
  std::vector<SpectrogramItem> out;
  out.reserve(sp.w.size());
  for (std::size_t j = 0; j < sp.n_times(); ++j)
    for (std::size_t i = sp.n_scales(); i-- > 0;) out.push_back({sp.scales[i], sp.times[j], sp.at(i, j)});
  return out;
}

SchemaPtr spectrogram_schema() {
  static const SchemaPtr s = Schema::make({Field{"s", FieldKind::real, {}}, Field{"t", FieldKind::real, {}},
                                           Field{"w", FieldKind::real, {}}});
  return s;
}

Item to_item(const SpectrogramItem& d) { return Item{d.scale, d.time, d.magnitude}; }

void write_spectrogram_text(std::ostream& out, const Spectrogram& sp) {
  out << "s,t,w\n";
  for (std::size_t i = 0; i < sp.n_scales(); ++i)
    for (std::size_t j = 0; j < sp.n_times(); ++j)
      out << format_real(sp.scales[i]) << ',' << format_real(sp.times[j]) << ',' << format_real(sp.at(i, j)) << '\n';
}

namespace {

void put_u64(std::ostream& out, std::uint64_t x) {
  char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((x >> (8 * k)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated spectrogram file");
  std::uint64_t x = 0;
  for (int k = 7; k >= 0; --k) x = (x << 8) | b[k];
  return x;
}

void put_f64(std::ostream& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void write_spectrogram_binary(std::ostream& out, const Spectrogram& sp) {
  put_u64(out, sp.n_scales());
  put_u64(out, sp.n_times());
  for (double s : sp.scales) put_f64(out, s);
  for (double t : sp.times) put_f64(out, t);
  for (double w : sp.w) put_f64(out, w);
}

Spectrogram read_spectrogram_binary(std::istream& in) {
  Spectrogram sp;
  std::uint64_t ns = get_u64(in), nt = get_u64(in);
  if (ns > (1u << 20) || nt > (1ull << 32) || ns * nt > (1ull << 32))
    throw std::runtime_error("implausible spectrogram dimensions");
  sp.scales.resize(ns);
  sp.times.resize(nt);
  sp.w.resize(ns * nt);
  for (auto& s : sp.scales) s = get_f64(in);
  for (auto& t : sp.times) t = get_f64(in);
  for (auto& w : sp.w) w = get_f64(in);
  return sp;
}

}  // namespace qre
