#pragma once

#include <cmath>
#include <cstdint>

#include "qre/value.hpp"

namespace qre {

/// Threshold-automaton parameters. Times are in samples.
struct MdtParams {
  std::int64_t blanking = 150;
  double decay = std::log(2.0) / 300.0;  // threshold halves every 300 samples
  double min_threshold = 20.0;
  double initial_threshold = 200.0;
  static constexpr double reset_fraction = 0.75;

  void validate() const;  // throws std::invalid_argument
};

struct MdtState {
  double threshold = 0.0;
  bool blanking = false;
  std::int64_t counter = 0;
  double ymax = 0.0;          // largest sample seen in the current blanking window
  std::int64_t tmax = 0;      // its index
  std::int64_t tstart = 0;    // index of the crossing that opened the window
  bool flag = false;          // the last sample crossed the threshold
  std::int64_t time = -1;     // index of the last sample consumed

  bool operator==(const MdtState&) const = default;
};

MdtState mdt_initial(const MdtParams& p);

/// One step of the threshold evolution on a rectified sample y >= 0.
MdtState mdt_thev(const MdtState& s, double y, const MdtParams& p);

CostType mdt_state_type();
Value mdt_to_value(const MdtState& s);
MdtState mdt_from_value(const Value& v);

}  // namespace qre
