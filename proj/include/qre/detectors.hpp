#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qre/expr.hpp"
#include "qre/mdt.hpp"
#include "qre/wavelet.hpp"

namespace qre {

/// Maxima-line detector. sbar must be a grid scale; delta is in samples; eps
/// (scale units) must be at least the largest grid step up to sbar, so that
/// chaining every grid scale realizes the scale tolerance.
struct WpmParams {
  double sbar = 80;
  double pbar = 400;
  double eps = 1;
  std::int64_t delta = 3;
  /// Peaks closer than this many samples to either end are dropped.
  std::int64_t guard = 0;

  void validate(const ScaleGrid& grid) const;
};

struct WpbParams {
  double sbar = 80;
  double pbar = 400;
  std::int64_t blanking = 150;
  std::int64_t guard = 0;

  void validate(const ScaleGrid& grid) const;
};

struct PeakAnnotation {
  std::string detector;
  std::vector<std::int64_t> indices;  // strictly increasing sample indices
  std::vector<double> times;
};

/// Guard band for scale sbar: the half-width of its truncated wavelet support.
std::int64_t boundary_guard(const WaveletSpec& spec, double sbar, double dt);

// Item schemas of the pipeline stages.
SchemaPtr column_value_schema();  // {x: real}, one coefficient per column
SchemaPtr marker_schema();        // {x: int}, 0/1 local-maximum markers
SchemaPtr signal_schema();        // {v: real}, raw samples
Predicate marker_zero();          // x < 0.5
Predicate marker_one();           // x >= 0.5

/// Exactly k >= 1 items of any value; costs 0.
QrePtr qre_skip(const SchemaPtr& schema, std::size_t k);

/// One column of n spectrogram items; the magnitude at scale index i
/// (1-based, scale s_i), which is item n - i of the column.
QrePtr qre_select_coef(std::size_t i, std::size_t n);

/// k >= 1 whole columns; the scale-s_i magnitude of the last one.
QrePtr qre_repeat_select_coef(std::size_t i, std::size_t n);

/// Over column values: on r_1..r_k with k >= 3, 1 if r_{k-1} is a strict
/// local maximum above p, else 0.
QrePtr qre_local_max(double p);

/// repeatSelectCoef_i >> localMax: the marker of the second-to-last column.
QrePtr qre_one_max(std::size_t i, std::size_t n, double p);

/// Over markers: the set of 1-based positions holding a 1.
QrePtr qre_union_times();

/// repeatSelectCoef_i >> (localMax >> unionTimes): marker positions at
/// scale s_i. Marker position k belongs to column k + 1.
QrePtr qre_peak_times(std::size_t i, std::size_t n, double p);

/// conn_delta(peakTimes_sigma, ..., peakTimes_1) with threshold p at scale
/// index sigma and 0 below.
QrePtr qre_peak_wpm(std::size_t sigma, std::size_t n, double pbar, std::int64_t delta);

/// Over markers: defined (value 1) exactly on marker strings whose last 1 is
/// a reported peak, i.e. 0* (1 (0|1)^BL 0*)* 1.
QrePtr qre_latest_peak(std::int64_t blanking);

/// repeatSelectCoef_sigma >> (localMax >> latestPeak).
QrePtr qre_peak_wpb(std::size_t sigma, std::size_t n, double pbar, std::int64_t blanking);

/// Left fold of conn(X, Y) = {y in Y : some x in X with |x - y| <= delta}.
/// Throws std::invalid_argument on an empty list.
std::vector<std::int64_t> conn_delta(const std::vector<std::vector<std::int64_t>>& sets, std::int64_t delta);

PeakAnnotation detect_wpm(const Spectrogram& sp, const WpmParams& params);
PeakAnnotation detect_wpb(const Spectrogram& sp, const WpbParams& params);

/// iter over samples of thev applied to |v|; the state tuple is the
/// iteration value.
QrePtr qre_mdt(const MdtParams& params);

struct MdtRun {
  PeakAnnotation peaks;
  std::vector<double> threshold;  // threshold after each sample
  std::vector<MdtState> states;
};

/// Runs qre_mdt through the streaming evaluator.
MdtRun detect_mdt(const Signal& x, const MdtParams& params);
/// Same fold as a plain loop over mdt_thev.
MdtRun detect_mdt_direct(const Signal& x, const MdtParams& params);

/// "index,time,detector" rows, preceded by `# ` comment lines.
void write_annotation(std::ostream& out, const PeakAnnotation& a, const std::vector<std::string>& comments = {});

}  // namespace qre
