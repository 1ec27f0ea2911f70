#pragma once

#include <span>
#include <vector>

#include "cpb/continuous.hpp"
#include "cpb/core.hpp"
#include "cpb/law.hpp"

namespace cpb {

// Clock speeds gamma_0, gamma_1, ...: between the k-th and (k+1)-th arrival
// the new clock runs at speed gamma_k. Entries past the list repeat the last.
class TimeScale {
public:
  explicit TimeScale(std::vector<double> gammas);

  double gamma(std::size_t k) const {
    return k < gammas_.size() ? gammas_[k] : gammas_.back();
  }
  std::span<const double> gammas() const { return gammas_; }
  std::size_t size() const { return gammas_.size(); }
  bool is_constant() const;

private:
  std::vector<double> gammas_;
};

// g(t) along the arrivals of h; t in [0, horizon].
double time_map(const TimeScale& scale, const History& h, double t);

// Unique t with g(t) = s; s in [0, g(horizon)].
double inverse_time_map(const TimeScale& scale, const History& h, double s);

// Maps arrivals and horizon through g.
History transform_history(const TimeScale& scale, const History& h);

// Arrival times g(T_l), interarrivals gamma_{l-1} A_l, change time g(U).
PathSample transform_path(const TimeScale& scale, const PathSample& path);

// Rates divided by gamma_k.
RateSchedule transform_rates(const TimeScale& scale, const RateSchedule& rates);

// Default weights c_k = 1 / (1 + k/(K+1)) for a schedule of length K.
std::vector<double> default_regularizing_weights(std::size_t length);

// gamma_k = c_k (post(k) - pre(k)) / (post(0) - pre(0)); the transformed
// schedule then has differences (post(0) - pre(0)) / c_k.
TimeScale regularizing_gammas(const RateSchedule& rates,
                              std::span<const double> weights);
TimeScale regularizing_gammas(const RateSchedule& rates);

// Model seen on the clock g(t) = gamma t of a constant scale.
ContinuousModel transform_model_constant(double gamma,
                                         const ContinuousModel& model);

} // namespace cpb
