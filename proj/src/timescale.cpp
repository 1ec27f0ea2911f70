#include "cpb/timescale.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cpb {

TimeScale::TimeScale(std::vector<double> gammas) : gammas_(std::move(gammas)) {
  if (gammas_.empty()) throw InvalidParameter("time scale needs gamma_0");
  for (std::size_t k = 0; k < gammas_.size(); ++k) {
    if (!std::isfinite(gammas_[k]) || gammas_[k] <= 0.0) {
      std::ostringstream msg;
      msg << "gamma_" << k << " must be positive and finite, got "
          << gammas_[k];
      throw InvalidParameter(msg.str());
    }
  }
}

bool TimeScale::is_constant() const {
  return std::all_of(gammas_.begin(), gammas_.end(),
                     [&](double g) { return g == gammas_.front(); });
}

namespace {

// g(t) for a path with the given arrival times; t may exceed the last one.
double map_along(const TimeScale& scale, std::span<const double> arrivals,
                 double t) {
  double acc = 0.0;
  double prev = 0.0;
  std::size_t k = 0;
  for (; k < arrivals.size() && arrivals[k] <= t; ++k) {
    acc += scale.gamma(k) * (arrivals[k] - prev);
    prev = arrivals[k];
  }
  return acc + scale.gamma(k) * (t - prev);
}

} // namespace

double time_map(const TimeScale& scale, const History& h, double t) {
  if (!(t >= 0.0 && t <= h.horizon()))
    throw RangeError("time outside [0, horizon]");
  return map_along(scale, h.arrivals(), t);
}

double inverse_time_map(const TimeScale& scale, const History& h, double s) {
  const double end = time_map(scale, h, h.horizon());
  if (!(s >= 0.0 && s <= end))
    throw RangeError("clock value outside [0, g(horizon)]");
  const auto t = h.arrivals();
  double g_prev = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double g_next = g_prev + scale.gamma(k) * (t[k] - prev);
    if (s <= g_next) {
      if (s == g_next) return t[k];
      return prev + (s - g_prev) / scale.gamma(k);
    }
    g_prev = g_next;
    prev = t[k];
  }
  if (s == end) return h.horizon();
  return std::min(h.horizon(), prev + (s - g_prev) / scale.gamma(t.size()));
}

History transform_history(const TimeScale& scale, const History& h) {
  std::vector<double> mapped;
  mapped.reserve(h.count());
  for (double a : h.arrivals()) mapped.push_back(time_map(scale, h, a));
  return History(time_map(scale, h, h.horizon()), std::move(mapped));
}

PathSample transform_path(const TimeScale& scale, const PathSample& path) {
  PathSample out;
  out.seed = path.seed;
  out.arrival_times.reserve(path.arrival_times.size());
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < path.arrival_times.size(); ++k) {
    acc += scale.gamma(k) * (path.arrival_times[k] - prev);
    prev = path.arrival_times[k];
    out.arrival_times.push_back(acc);
  }
  out.horizon = std::isfinite(path.horizon)
                    ? map_along(scale, path.arrival_times, path.horizon)
                    : path.horizon;
  if (path.change_censored || path.change_time > path.horizon) {
    out.change_time = out.horizon;
    out.change_censored = true;
  } else {
    out.change_time = map_along(scale, path.arrival_times, path.change_time);
  }
  return out;
}

RateSchedule transform_rates(const TimeScale& scale,
                             const RateSchedule& rates) {
  const std::size_t len = rates.tail() == TailMode::zero_after_k
                              ? rates.size()
                              : std::max(rates.size(), scale.size());
  std::vector<double> pre(len), post(len);
  for (std::size_t k = 0; k < len; ++k) {
    pre[k] = rates.pre(k) / scale.gamma(k);
    post[k] = rates.post(k) / scale.gamma(k);
  }
  return RateSchedule(std::move(pre), std::move(post), rates.tail(),
                      rates.units());
}

std::vector<double> default_regularizing_weights(std::size_t length) {
  std::vector<double> c(std::max<std::size_t>(length, 1));
  const double denom = static_cast<double>(c.size() + 1);
  for (std::size_t k = 0; k < c.size(); ++k)
    c[k] = 1.0 / (1.0 + static_cast<double>(k) / denom);
  return c;
}

TimeScale regularizing_gammas(const RateSchedule& rates,
                              std::span<const double> weights) {
  if (weights.empty() || weights.front() != 1.0)
    throw InvalidParameter("regularizing weights must start with c_0 = 1");
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] > 0.0))
      throw InvalidParameter("regularizing weights must be positive");
    if (k > 0 && weights[k] > weights[k - 1])
      throw InvalidParameter("regularizing weights must be decreasing");
  }
  for (std::size_t k = 0; k < rates.size(); ++k)
    if (!(rates.post(k) > rates.pre(k)))
      throw PreconditionError("regularization needs post(k) > pre(k) for "
                              "every k");

  const std::size_t len = rates.tail() == TailMode::zero_after_k
                              ? rates.size()
                              : std::max(rates.size(), weights.size());
  const double d0 = rates.post(0) - rates.pre(0);
  std::vector<double> gammas(len);
  for (std::size_t k = 0; k < len; ++k) {
    const double c = k < weights.size() ? weights[k] : weights.back();
    gammas[k] = c * (rates.post(k) - rates.pre(k)) / d0;
  }
  return TimeScale(std::move(gammas));
}

TimeScale regularizing_gammas(const RateSchedule& rates) {
  const auto c = default_regularizing_weights(rates.size());
  return regularizing_gammas(rates, c);
}

ContinuousModel transform_model_constant(double gamma,
                                         const ContinuousModel& model) {
  const TimeScale scale({gamma});
  return ContinuousModel(transform_rates(scale, model.rates()),
                         model.law().scaled(gamma));
}

} // namespace cpb
