#include "cpb/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace cpb {

namespace {

void check_rates(const std::vector<double>& v, RateUnits units,
                 const char* name) {
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double r = v[k];
    if (!std::isfinite(r) || r <= 0.0) {
      std::ostringstream msg;
      msg << name << " rate at index " << k << " must be positive, got " << r;
      throw InvalidSchedule(msg.str());
    }
    if (units == RateUnits::per_slot && r >= 1.0) {
      std::ostringstream msg;
      msg << name << " per-slot rate at index " << k
          << " must be below 1, got " << r;
      throw InvalidSchedule(msg.str());
    }
  }
}

} // namespace

RateSchedule::RateSchedule(std::vector<double> pre_change,
                           std::vector<double> post_change, TailMode tail,
                           RateUnits units)
    : pre_(std::move(pre_change)), post_(std::move(post_change)), tail_(tail),
      units_(units) {
  if (pre_.empty()) throw InvalidSchedule("rate schedule is empty");
  if (pre_.size() != post_.size())
    throw InvalidSchedule("pre- and post-change schedules differ in length");
  check_rates(pre_, units_, "pre-change");
  check_rates(post_, units_, "post-change");
}

History::History(double horizon, std::vector<double> arrivals)
    : horizon_(horizon), arrivals_(std::move(arrivals)) {
  if (!std::isfinite(horizon_) || horizon_ <= 0.0)
    throw InvalidHistory("horizon must be a positive number");
  double prev = 0.0;
  for (double a : arrivals_) {
    if (!(a > prev))
      throw InvalidHistory("arrival times must be positive and strictly "
                           "increasing");
    prev = a;
  }
  if (prev > horizon_)
    throw InvalidHistory("arrival after the observation horizon");
}

std::size_t History::count_at(double s) const {
  return static_cast<std::size_t>(
      std::upper_bound(arrivals_.begin(), arrivals_.end(), s) -
      arrivals_.begin());
}

DiscreteHistory::DiscreteHistory(long horizon_slot,
                                 std::vector<long> arrival_slots)
    : horizon_(horizon_slot), slots_(std::move(arrival_slots)) {
  if (horizon_ < 1) throw InvalidHistory("horizon slot must be at least 1");
  long prev = 0;
  for (long s : slots_) {
    if (s <= prev)
      throw InvalidHistory("arrival slots must be >= 1 and strictly "
                           "increasing");
    prev = s;
  }
  if (prev > horizon_)
    throw InvalidHistory("arrival slot after the horizon slot");
}

namespace {

template <class H> void require_comparable(const H& a, const H& b) {
  if (a.horizon() != b.horizon())
    throw IncomparableInputs("histories observed on different horizons");
  if (a.count() != b.count())
    throw IncomparableInputs("histories with different arrival counts");
}

template <class H> bool dominates(const H& a, const H& b) {
  require_comparable(a, b);
  const auto xa = a.arrivals();
  const auto xb = b.arrivals();
  for (std::size_t i = 0; i < xa.size(); ++i)
    if (xa[i] < xb[i]) return false;
  return true;
}

} // namespace

bool history_dominates(const History& a, const History& b) {
  return dominates(a, b);
}

bool history_dominates(const DiscreteHistory& a, const DiscreteHistory& b) {
  return dominates(a, b);
}

std::size_t default_condition_bound(const RateSchedule& rates) {
  return rates.size() + 1;
}

double ser_ratio(const RateSchedule& r, std::size_t k) {
  if (k == 0) throw IndexError("ser ratio is defined for k >= 1");
  return ((1.0 - r.post(k - 1)) * (1.0 - r.pre(k))) /
         ((1.0 - r.pre(k - 1)) * (1.0 - r.post(k)));
}

ConditionReport validate_rates(const RateSchedule& rates, std::size_t bound) {
  if (bound < 1) throw InvalidParameter("condition bound must be >= 1");
  ConditionReport rep;
  rep.bound = bound;

  // Past a halting index no further arrival exists, so nothing is checked.
  std::size_t last = bound;
  if (rates.tail() == TailMode::zero_after_k)
    last = std::min(bound, rates.size() - 1);

  rep.assu_strict = true;
  rep.assu_broad = true;
  for (std::size_t k = 0; k <= last; ++k) {
    if (!(rates.post(k) > rates.pre(k))) rep.assu_strict = false;
    if (!(rates.post(k) >= rates.pre(k))) rep.assu_broad = false;
  }

  rep.catania = true;
  const std::size_t pairs_end = std::min(last, rates.size() - 1);
  for (std::size_t k = 0; k < pairs_end; ++k) {
    const double d0 = rates.post(k) - rates.pre(k);
    const double d1 = rates.post(k + 1) - rates.pre(k + 1);
    if (!(d0 < d1)) rep.catania = false;
  }

  if (rates.units() == RateUnits::per_slot) {
    rep.plo = rep.assu_strict;
    bool ser = true;
    for (std::size_t k = 1; k <= last; ++k)
      if (!(ser_ratio(rates, k) >= 1.0)) ser = false;
    rep.ser = ser;
  }
  return rep;
}

ConditionReport validate_rates(const RateSchedule& rates) {
  return validate_rates(rates, default_condition_bound(rates));
}

DiscreteHistory shift_operator(const DiscreteHistory& h, std::size_t i) {
  const std::size_t k = h.count();
  if (i < 1 || i > k)
    throw IndexError("shift index " + std::to_string(i) + " outside 1.." +
                     std::to_string(k));
  std::vector<long> slots(h.arrivals().begin(), h.arrivals().end());
  const std::size_t idx = i - 1;
  const bool admissible = (i < k) ? slots[idx + 1] > slots[idx] + 1
                                  : slots[idx] < h.horizon();
  if (!admissible) return h;
  ++slots[idx];
  return DiscreteHistory(h.horizon(), std::move(slots));
}

std::vector<std::size_t> shift_chain(const DiscreteHistory& from,
                                     const DiscreteHistory& to) {
  if (!history_dominates(to, from))
    throw IncomparableInputs("target history does not dominate the source");
  std::vector<std::size_t> chain;
  DiscreteHistory cur = from;
  for (std::size_t i = from.count(); i >= 1; --i) {
    while (cur.arrival(i - 1) < to.arrival(i - 1)) {
      chain.push_back(i);
      cur = shift_operator(cur, i);
    }
  }
  return chain;
}

} // namespace cpb
