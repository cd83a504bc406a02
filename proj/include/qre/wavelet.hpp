#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "qre/predicate.hpp"

namespace qre {

/// Uniformly sampled signal. `t` is strictly increasing with constant step.
struct Signal {
  std::vector<double> t;
  std::vector<double> v;

  std::size_t size() const { return v.size(); }
  double dt() const { return t.size() > 1 ? t[1] - t[0] : 1.0; }
  /// Throws std::invalid_argument if empty, non-increasing, or the spacing
  /// deviates from uniform by more than 1e-9.
  void validate() const;
};

/// Samples v at t0, t0 + dt, ...
Signal make_signal(std::vector<double> v, double dt, double t0 = 0.0);

/// n-th derivative of a zero-mean Gaussian of width sigma (seconds).
struct WaveletSpec {
  int order = 2;
  double sigma = 1.0;

  void validate() const;
};

struct ScaleGrid {
  std::vector<double> scales;  // strictly increasing, positive

  static ScaleGrid range(int lo, int hi);  // lo, lo+1, ..., hi
  static ScaleGrid defaults() { return range(1, 128); }
  void validate() const;
  /// Index of scale s (exact match within 1e-9), or throws.
  std::size_t index_of(double s) const;
  std::size_t size() const { return scales.size(); }
};

/// Row-major (scale, time) matrix of wavelet coefficients.
struct Spectrogram {
  std::vector<double> scales;
  std::vector<double> times;
  std::vector<double> w;

  std::size_t n_scales() const { return scales.size(); }
  std::size_t n_times() const { return times.size(); }
  double at(std::size_t i, std::size_t j) const { return w[i * times.size() + j]; }
  double& at(std::size_t i, std::size_t j) { return w[i * times.size() + j]; }
};

struct SpectrogramItem {
  double scale;
  double time;
  double magnitude;

  bool operator==(const SpectrogramItem&) const = default;
};

/// psi(t) = d^n/dt^n G(t) = (-1)^n He_n(t/sigma) G(t) / sigma^n, with He_n the
/// probabilists' Hermite polynomial.
double mother_wavelet(const WaveletSpec& spec, double t);

/// psi(t/s) / sqrt(s); throws std::invalid_argument for s <= 0.
double scaled_wavelet(const WaveletSpec& spec, double s, double t);

/// Half-width, in samples, of the truncated support at scale s: ceil(6 s sigma / dt).
std::size_t support_samples(const WaveletSpec& spec, double s, double dt);

/// Signed coefficients W(s, t_j) = sum_k x[j+k] Psi_s(k dt) dt over |k dt| <=
/// 6 s sigma, with zero padding outside the signal.
Spectrogram cwt_signed(const Signal& x, const ScaleGrid& grid, const WaveletSpec& spec);

/// Magnitudes |W(s, t_j)|.
Spectrogram cwt(const Signal& x, const ScaleGrid& grid, const WaveletSpec& spec);

/// Column by column from the first time; within a column from the largest
/// scale down to the smallest.
std::vector<SpectrogramItem> column_stream(const Spectrogram& sp);

/// Schema {s, t, w} of spectrogram items when fed to a QRE.
SchemaPtr spectrogram_schema();
Item to_item(const SpectrogramItem& d);

/// Text table "s,t,w", one row per coefficient, scale-major.
void write_spectrogram_text(std::ostream& out, const Spectrogram& sp);

/// Little-endian: uint64 n_scales, uint64 n_times, n_scales doubles (scales),
/// n_times doubles (times), then n_scales * n_times doubles row-major.
void write_spectrogram_binary(std::ostream& out, const Spectrogram& sp);
Spectrogram read_spectrogram_binary(std::istream& in);

}  // namespace qre
