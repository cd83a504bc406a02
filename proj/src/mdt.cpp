#include "qre/mdt.hpp"

#include <algorithm>
#include <stdexcept>

namespace qre {

void MdtParams::validate() const {
  if (blanking < 1) throw std::invalid_argument("mdt: blanking length must be >= 1");
  if (!(decay > 0.0) || !std::isfinite(decay)) throw std::invalid_argument("mdt: decay rate must be > 0");
  if (!(min_threshold > 0.0)) throw std::invalid_argument("mdt: minimum threshold must be > 0");
  if (!(min_threshold <= initial_threshold) || !std::isfinite(initial_threshold))
    throw std::invalid_argument("mdt: initial threshold must be >= minimum threshold");
}

MdtState mdt_initial(const MdtParams& p) {
  MdtState s;
  s.threshold = p.initial_threshold;
  return s;
}

MdtState mdt_thev(const MdtState& s, double y, const MdtParams& p) {
  MdtState n = s;
  n.time = s.time + 1;
  n.flag = false;
  if (!s.blanking) {
    if (y > s.threshold) {
      n.flag = true;
      n.blanking = true;
      n.counter = 0;
      n.ymax = y;
      n.tmax = n.time;
      n.tstart = n.time;
    } else {
      n.threshold = std::max(p.min_threshold, s.threshold * std::exp(-p.decay));
    }
    return n;
  }
  n.counter = s.counter + 1;
  if (y > n.ymax) {
    n.ymax = y;
    n.tmax = n.time;
  }
  if (n.counter >= p.blanking) {
    n.blanking = false;
    n.threshold = std::max(p.min_threshold, MdtParams::reset_fraction * n.ymax);
  }
  return n;
}

CostType mdt_state_type() {
  auto r = CostType::real(), i = CostType::integer(), b = CostType::boolean();
  return CostType::tuple({r, b, i, r, i, i, b, i});
}

Value mdt_to_value(const MdtState& s) {
  return Value::tuple({Value(s.threshold), Value(s.blanking), Value(s.counter), Value(s.ymax), Value(s.tmax),
                       Value(s.tstart), Value(s.flag), Value(s.time)});
}

MdtState mdt_from_value(const Value& v) {
  const auto& t = v.as_tuple();
  if (t.size() != 8) throw TypeError("mdt state must have 8 fields");
  MdtState s;
  s.threshold = t[0].as_real();
  s.blanking = t[1].as_bool();
  s.counter = t[2].as_int();
  s.ymax = t[3].as_real();
  s.tmax = t[4].as_int();
  s.tstart = t[5].as_int();
  s.flag = t[6].as_bool();
  s.time = t[7].as_int();
  return s;
}

}  // namespace qre
