#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace cpb {

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

inline double log_sum_exp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

// pre + (post - pre) p, kept inside the rate pair despite rounding.
inline double mix_rates(double pre, double post, double p) {
  return std::clamp(pre + (post - pre) * p, std::min(pre, post),
                    std::max(pre, post));
}

} // namespace cpb
