#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cpb/errors.hpp"

namespace cpb {

enum class TailMode {
  repeat_last,  // rate(k) = rate(K-1) for k >= K
  zero_after_k  // rate(k) = 0 for k >= K; the process halts after K arrivals
};

enum class RateUnits {
  per_time, // continuous time: events per unit time
  per_slot  // discrete time: arrival probability per slot, in (0,1)
};

// Pre- and post-change birth rates indexed by the number of past arrivals.
// Stores a finite prefix; the tail mode defines every index past it.
class RateSchedule {
public:
  RateSchedule(std::vector<double> pre_change, std::vector<double> post_change,
               TailMode tail = TailMode::repeat_last,
               RateUnits units = RateUnits::per_time);

  double pre(std::size_t k) const { return at(pre_, k); }
  double post(std::size_t k) const { return at(post_, k); }
  double rate(bool after_change, std::size_t k) const {
    return after_change ? post(k) : pre(k);
  }

  std::size_t size() const { return pre_.size(); }
  TailMode tail() const { return tail_; }
  RateUnits units() const { return units_; }
  std::span<const double> pre_prefix() const { return pre_; }
  std::span<const double> post_prefix() const { return post_; }

  // True when no further arrival can occur after k arrivals.
  bool halted(std::size_t k) const {
    return tail_ == TailMode::zero_after_k && k >= pre_.size();
  }

private:
  double at(const std::vector<double>& v, std::size_t k) const {
    if (k < v.size()) return v[k];
    return tail_ == TailMode::repeat_last ? v.back() : 0.0;
  }

  std::vector<double> pre_;
  std::vector<double> post_;
  TailMode tail_;
  RateUnits units_;
};

// Observed arrivals 0 < t_1 < ... < t_k <= horizon, silence up to horizon.
// An arrival exactly at the horizon is admitted; conditioning is always on
// T_{k+1} > horizon.
class History {
public:
  History(double horizon, std::vector<double> arrivals = {});

  double horizon() const { return horizon_; }
  std::span<const double> arrivals() const { return arrivals_; }
  std::size_t count() const { return arrivals_.size(); }
  double arrival(std::size_t i) const { return arrivals_.at(i); }

  // N_s: arrivals in (0, s].
  std::size_t count_at(double s) const;

  friend bool operator==(const History&, const History&) = default;

private:
  double horizon_;
  std::vector<double> arrivals_;
};

// Discrete-time history: arrival slots 1 <= n_1 < ... < n_k <= n.
class DiscreteHistory {
public:
  DiscreteHistory(long horizon_slot, std::vector<long> arrival_slots = {});

  long horizon() const { return horizon_; }
  std::span<const long> arrivals() const { return slots_; }
  std::size_t count() const { return slots_.size(); }
  long arrival(std::size_t i) const { return slots_.at(i); }

  friend bool operator==(const DiscreteHistory&,
                         const DiscreteHistory&) = default;

private:
  long horizon_;
  std::vector<long> slots_;
};

struct PosteriorResult {
  double prob_after;  // P(U <= t | h_t)
  double prob_before; // P(U > t | h_t)
  double intensity;   // mu_t(h_t)
};

struct ConditionReport {
  bool assu_strict = false; // post(k) > pre(k)
  bool assu_broad = false;  // post(k) >= pre(k)
  bool catania = false;     // post(k) - pre(k) strictly increasing
  // Discrete-only conditions; empty for per-time schedules.
  std::optional<bool> plo;
  std::optional<bool> ser;
  std::size_t bound = 0;
};

// h_a dominates h_b: same horizon and count, a_i >= b_i componentwise.
bool history_dominates(const History& a, const History& b);
bool history_dominates(const DiscreteHistory& a, const DiscreteHistory& b);

// Default index bound for validate_rates: stored prefix length + 1.
std::size_t default_condition_bound(const RateSchedule& rates);

// Evaluates the rate-sequence conditions for k = 0..bound using the tail.
// The strict-increase condition is checked on consecutive pairs inside the
// stored prefix only: a finite schedule with a constant tail cannot be
// strictly increasing forever.
ConditionReport validate_rates(const RateSchedule& rates, std::size_t bound);
ConditionReport validate_rates(const RateSchedule& rates);

// ser ratio (1-b1(k-1))(1-b0(k)) / ((1-b0(k-1))(1-b1(k))) for k >= 1.
double ser_ratio(const RateSchedule& rates, std::size_t k);

// Moves arrival i (1-based) one slot later when admissible; identity
// otherwise.
DiscreteHistory shift_operator(const DiscreteHistory& h, std::size_t i);

// Indices (1-based) of shifts turning `from` into `to`; right-to-left order.
std::vector<std::size_t> shift_chain(const DiscreteHistory& from,
                                     const DiscreteHistory& to);

} // namespace cpb
