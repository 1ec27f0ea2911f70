#include "cpb/law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cpb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts> struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0)
    throw InvalidLaw(std::string(what) + " must be positive and finite");
}

TableCdf normalize_table(TableCdf table) {
  auto& k = table.knots;
  if (k.empty()) throw InvalidLaw("table CDF has no knots");
  if (k.front().first != 0.0) k.insert(k.begin(), {0.0, 0.0});
  if (k.front().second != 0.0) throw InvalidLaw("table CDF must have G(0)=0");
  for (std::size_t i = 1; i < k.size(); ++i) {
    if (!(k[i].first > k[i - 1].first))
      throw InvalidLaw("table CDF knots must be strictly increasing in s");
    if (k[i].second < k[i - 1].second)
      throw InvalidLaw("table CDF must be nondecreasing");
    if (k[i].second > 1.0) throw InvalidLaw("table CDF exceeds 1");
  }
  if (k.back().second != 1.0)
    throw InvalidLaw("table CDF must reach 1 at its last knot");
  return table;
}

double table_cdf(const TableCdf& t, double s) {
  const auto& k = t.knots;
  if (s <= 0.0) return 0.0;
  if (s >= k.back().first) return 1.0;
  auto it = std::upper_bound(
      k.begin(), k.end(), s,
      [](double v, const std::pair<double, double>& kn) { return v < kn.first; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (s - lo.first) / (hi.first - lo.first);
  return lo.second + w * (hi.second - lo.second);
}

} // namespace

ContinuousLaw::ContinuousLaw(Family family) : family_(std::move(family)) {
  std::visit(overloaded{
                 [](const Exponential& e) { require_positive(e.rate, "rate"); },
                 [](const Weibull& w) {
                   require_positive(w.shape, "Weibull shape");
                   require_positive(w.scale, "Weibull scale");
                 },
                 [](const PointMass& p) {
                   require_positive(p.at, "point-mass location");
                 },
                 [](TableCdf&) {},
             },
             family_);
  if (auto* t = std::get_if<TableCdf>(&family_))
    *t = normalize_table(std::move(*t));
}

double ContinuousLaw::cdf(double s) const {
  if (s <= 0.0) return 0.0;
  return std::visit(
      overloaded{
          [&](const Exponential& e) { return -std::expm1(-e.rate * s); },
          [&](const Weibull& w) {
            return -std::expm1(-std::pow(s / w.scale, w.shape));
          },
          [&](const PointMass& p) { return s >= p.at ? 1.0 : 0.0; },
          [&](const TableCdf& t) { return table_cdf(t, s); },
      },
      family_);
}

double ContinuousLaw::survival(double s) const {
  return std::exp(log_survival(s));
}

double ContinuousLaw::log_survival(double s) const {
  if (s <= 0.0) return 0.0;
  return std::visit(
      overloaded{
          [&](const Exponential& e) { return -e.rate * s; },
          [&](const Weibull& w) { return -std::pow(s / w.scale, w.shape); },
          [&](const PointMass& p) { return s >= p.at ? -kInf : 0.0; },
          [&](const TableCdf& t) { return std::log1p(-table_cdf(t, s)); },
      },
      family_);
}

double ContinuousLaw::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw RangeError("quantile level outside (0,1)");
  return std::visit(
      overloaded{
          [&](const Exponential& e) { return -std::log1p(-p) / e.rate; },
          [&](const Weibull& w) {
            return w.scale * std::pow(-std::log1p(-p), 1.0 / w.shape);
          },
          [&](const PointMass& pm) { return pm.at; },
          [&](const TableCdf& t) {
            const auto& k = t.knots;
            auto it = std::lower_bound(
                k.begin(), k.end(), p,
                [](const std::pair<double, double>& kn, double v) {
                  return kn.second < v;
                });
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            const double w = (p - lo.second) / (hi.second - lo.second);
            return lo.first + w * (hi.first - lo.first);
          },
      },
      family_);
}

ContinuousLaw ContinuousLaw::scaled(double c) const {
  require_positive(c, "scale factor");
  return std::visit(
      overloaded{
          [&](const Exponential& e) {
            return ContinuousLaw(Exponential{e.rate / c});
          },
          [&](const Weibull& w) {
            return ContinuousLaw(Weibull{w.shape, w.scale * c});
          },
          [&](const PointMass& p) { return ContinuousLaw(PointMass{p.at * c}); },
          [&](const TableCdf& t) {
            TableCdf out = t;
            for (auto& kn : out.knots) kn.first *= c;
            return ContinuousLaw(std::move(out));
          },
      },
      family_);
}

DiscreteHazard::DiscreteHazard(std::vector<double> values, double tail)
    : values_(std::move(values)), tail_(tail) {
  auto check = [](double v, std::size_t m) {
    if (!(v > 0.0 && v < 1.0)) {
      std::ostringstream msg;
      msg << "hazard nu(" << m << ") must lie in (0,1), got " << v;
      throw InvalidLaw(msg.str());
    }
  };
  for (std::size_t i = 0; i < values_.size(); ++i) check(values_[i], i + 1);
  check(tail_, values_.size() + 1);
}

DiscreteHazard::DiscreteHazard(std::vector<double> values)
    : DiscreteHazard(values, values.empty() ? 0.0 : values.back()) {}

double DiscreteHazard::hazard(long m) const {
  if (m < 1) throw IndexError("hazard index starts at 1");
  const auto idx = static_cast<std::size_t>(m - 1);
  return idx < values_.size() ? values_[idx] : tail_;
}

double DiscreteHazard::log_survival(long n) const {
  double acc = 0.0;
  const long listed = std::min<long>(n, static_cast<long>(values_.size()));
  for (long l = 1; l <= listed; ++l) acc += std::log1p(-hazard(l));
  if (n > listed) acc += static_cast<double>(n - listed) * std::log1p(-tail_);
  return acc;
}

double DiscreteHazard::log_mass(long j) const {
  return std::log(hazard(j)) + log_survival(j - 1);
}

} // namespace cpb
