#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "cpb/errors.hpp"

namespace cpb {

struct Exponential {
  double rate;
};

struct Weibull {
  double shape;
  double scale;
};

struct PointMass {
  double at;
};

// CDF given at knots (s, G(s)), linearly interpolated in between. A knot
// (0, 0) is implied when the first knot is not at the origin; the last knot
// must reach 1.
struct TableCdf {
  std::vector<std::pair<double, double>> knots;
};

// Distribution G of the change point U on (0, inf).
class ContinuousLaw {
public:
  using Family = std::variant<Exponential, Weibull, PointMass, TableCdf>;

  ContinuousLaw(Family family);

  const Family& family() const { return family_; }

  double cdf(double s) const;
  double survival(double s) const;
  double log_survival(double s) const;
  // Smallest s with G(s) >= p, p in (0,1).
  double quantile(double p) const;

  // Law of c*U for c > 0.
  ContinuousLaw scaled(double c) const;

private:
  Family family_;
};

// Discrete change-point law through its hazard nu(m) = P(U = m | U > m-1),
// m = 1, 2, ...; entries past the list repeat `tail`.
class DiscreteHazard {
public:
  DiscreteHazard(std::vector<double> values, double tail);
  explicit DiscreteHazard(std::vector<double> values);

  double hazard(long m) const;
  std::span<const double> values() const { return values_; }
  double tail() const { return tail_; }

  // log P(U > n) = sum_{l <= n} log(1 - nu(l)).
  double log_survival(long n) const;
  // log P(U = j).
  double log_mass(long j) const;

private:
  std::vector<double> values_;
  double tail_;
};

} // namespace cpb
