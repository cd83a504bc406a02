#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "qre/expr.hpp"

namespace qre {

SchemaPtr beat_schema();     // {beat: boolean}
SchemaPtr chamber_schema();  // {chamber: enum(0|A|V)}

/// Exactly `window` beat items; true iff the number of beats is in [lo, hi].
/// The count is a balanced split-add tree of (beat ? 1 else 0).
QrePtr qre_count_in_range(std::int64_t lo, std::int64_t hi, std::size_t window = 60);

/// One interval 0*1; its length counting the closing beat.
QrePtr qre_interval_length();

/// Mean of four consecutive interval lengths.
QrePtr qre_four_beats();

/// Eight intervals; true iff 0.8 * mean(first four) >= mean(last four).
QrePtr qre_sudden_onset();

/// V 0^{a:b} A 0^{c:d} V 0^{e:f} A 0^{g:h} V; true on a match, undefined
/// otherwise. bounds = {a, b, c, d, e, f, g, h}.
QrePtr qre_pattern(const std::array<std::size_t, 8>& bounds);

/// Consumer over {x: kind} computing a windowed aggregate of the last
/// `window` values (all values while fewer are available).
enum class WindowAggregate { mean, stddev, mean_square };
QrePtr qre_sliding(std::size_t window, WindowAggregate agg, const CostType& kind = CostType::integer());

/// producer >> sliding mean. The producer emits per-block 0/1 peak markers.
QrePtr qre_heart_rate(const QrePtr& producer, std::size_t window);
/// producer >> sliding population standard deviation.
QrePtr qre_stability(const QrePtr& producer, std::size_t window);

/// gt(fV, fA): true iff the first rate is >= the second.
QrePtr qre_rate_compare(const QrePtr& fv, const QrePtr& fa);

/// Marker producer for a raw beat stream: the last item as 0/1.
QrePtr qre_last_beat();
/// Marker producer for a dual-chamber stream: 1 iff the last item is `label`.
QrePtr qre_last_chamber(const std::string& label);

/// any* . f: f on the suffix it matches, so the result is defined at every
/// prefix ending in a match of f. Throws ConstructionError when the split is
/// ambiguous (f must fix where its match starts).
QrePtr qre_on_suffix(const QrePtr& f);
/// (0*1)* . f over beat streams: f on the suffix after some beat. Used for
/// interval-based f, whose leading zeros would make any* . f ambiguous.
QrePtr qre_after_beat(const QrePtr& f);

}  // namespace qre
