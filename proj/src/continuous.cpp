#include "cpb/continuous.hpp"

#include <algorithm>
#include <cmath>
#include <variant>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "cpb/numeric.hpp"
#include "cpb/rng.hpp"

namespace cpb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// Rate times duration, with 0 * inf treated as 0 for halted schedules.
double exposure(double rate, double duration) {
  return rate == 0.0 ? 0.0 : rate * duration;
}

// log of int_0^w exp(s v) dv.
double log_int_exp(double s, double w) {
  if (w <= 0.0) return kNegInf;
  if (s == 0.0) return std::log(w);
  if (s > 0.0) return s * w + std::log(-std::expm1(-s * w) / s);
  return std::log(std::expm1(s * w) / s);
}

// Segment i covers (t_i, t_{i+1}) with t_0 = 0 and t_{k+1} = horizon. For
// u inside it, log L(h|u) = base - pre(i)(u - t_i) - post(i)(t_{i+1} - u).
struct Segment {
  double start;
  double end;
  double pre;
  double post;
  double base;
};

std::vector<Segment> segments(const RateSchedule& rates, const History& h) {
  const auto t = h.arrivals();
  const std::size_t k = t.size();
  auto knot = [&](std::size_t i) {
    if (i == 0) return 0.0;
    if (i <= k) return t[i - 1];
    return h.horizon();
  };

  // pre_acc[i]  = sum_{s<i} pre(s)(t_{s+1}-t_s), log rates of arrivals 1..i
  // post_acc[i] = sum_{s>=i} post(s)(...),       log rates of arrivals i+1..k
  std::vector<double> pre_acc(k + 2, 0.0);
  for (std::size_t i = 0; i <= k; ++i) {
    double step = -exposure(rates.pre(i), knot(i + 1) - knot(i));
    if (i < k) step += safe_log(rates.pre(i));
    pre_acc[i + 1] = pre_acc[i] + step;
  }
  std::vector<double> post_acc(k + 2, 0.0);
  for (std::size_t i = k + 1; i-- > 0;) {
    double step = -exposure(rates.post(i), knot(i + 1) - knot(i));
    if (i < k) step += safe_log(rates.post(i));
    post_acc[i] = post_acc[i + 1] + step;
  }

  std::vector<Segment> out;
  out.reserve(k + 1);
  for (std::size_t i = 0; i <= k; ++i) {
    const double a = knot(i);
    const double b = knot(i + 1);
    if (!(b > a)) continue;
    // Arrivals 1..i are pre-change, i+1..k post-change.
    double base = pre_acc[i];
    base += post_acc[i + 1];
    if (i < k) base += safe_log(rates.post(i));
    out.push_back({a, b, rates.pre(i), rates.post(i), base});
  }
  return out;
}

double log_segment_mass(const Segment& seg, const Exponential& e) {
  const double s = (seg.post - seg.pre) - e.rate;
  return seg.base - exposure(seg.post, seg.end - seg.start) +
         std::log(e.rate) - e.rate * seg.start +
         log_int_exp(s, seg.end - seg.start);
}

double log_segment_mass(const Segment& seg, const TableCdf& table) {
  const auto& kn = table.knots;
  double acc = kNegInf;
  for (std::size_t q = 0; q + 1 < kn.size(); ++q) {
    const double lo = std::max(seg.start, kn[q].first);
    const double hi = std::min(seg.end, kn[q + 1].first);
    if (!(hi > lo)) continue;
    const double mass = kn[q + 1].second - kn[q].second;
    if (mass <= 0.0) continue;
    const double density = mass / (kn[q + 1].first - kn[q].first);
    const double term = std::log(density) - exposure(seg.pre, lo - seg.start) -
                        exposure(seg.post, seg.end - lo) +
                        log_int_exp(seg.post - seg.pre, hi - lo);
    acc = log_add_exp(acc, term);
  }
  return acc == kNegInf ? acc : seg.base + acc;
}

double log_segment_mass(const Segment& seg, const Weibull& w) {
  // z = (u/scale)^shape turns dG(u) into exp(-z) dz.
  const double za = std::pow(seg.start / w.scale, w.shape);
  const double zb = std::pow(seg.end / w.scale, w.shape);
  auto phi = [&](double z) {
    const double u = std::clamp(w.scale * std::pow(z, 1.0 / w.shape),
                                seg.start, seg.end);
    return -exposure(seg.pre, u - seg.start) -
           exposure(seg.post, seg.end - u) - z;
  };
  double ref = kNegInf;
  constexpr int probes = 32;
  for (int i = 0; i <= probes; ++i)
    ref = std::max(ref, phi(za + (zb - za) * i / probes));
  auto f = [&](double z) { return std::exp(phi(z) - ref); };
  // tanh-sinh copes with the z^(1/shape) kink at z = 0.
  thread_local boost::math::quadrature::tanh_sinh<double> rule;
  const double integral = rule.integrate(f, za, zb, kQuadratureRelTol);
  return seg.base + ref + safe_log(integral);
}

} // namespace

ContinuousModel::ContinuousModel(RateSchedule rates, ContinuousLaw law)
    : rates_(std::move(rates)), law_(std::move(law)) {
  if (rates_.units() != RateUnits::per_time)
    throw InvalidSchedule("continuous model needs per-time rates");
}

double log_likelihood_given_changepoint(const ContinuousModel& model,
                                        const History& h, double u) {
  const RateSchedule& rates = model.rates();
  const auto t = h.arrivals();
  double acc = 0.0;
  double from = 0.0;
  for (std::size_t i = 0; i <= t.size(); ++i) {
    const double to = i < t.size() ? t[i] : h.horizon();
    // Interval (from, to] spent with i arrivals.
    const double pre_part = std::clamp(u, from, to) - from;
    acc -= exposure(rates.pre(i), pre_part);
    acc -= exposure(rates.post(i), (to - from) - pre_part);
    if (i < t.size()) acc += safe_log(rates.rate(t[i] >= u, i));
    from = to;
  }
  return acc;
}

double likelihood_given_changepoint(const ContinuousModel& model,
                                    const History& h, double u) {
  return std::exp(log_likelihood_given_changepoint(model, h, u));
}

double PosteriorTerms::log_total() const {
  return log_add_exp(log_change, log_no_change);
}

double PosteriorTerms::prob_before() const {
  const double total = log_total();
  if (!std::isfinite(total))
    throw DegenerateModel("history has zero probability under the model");
  return std::exp(log_no_change - total);
}

double PosteriorTerms::prob_after() const {
  const double total = log_total();
  if (!std::isfinite(total))
    throw DegenerateModel("history has zero probability under the model");
  return std::exp(log_change - total);
}

PosteriorTerms posterior_terms(const ContinuousModel& model, const History& h) {
  PosteriorTerms terms;
  const double t = h.horizon();
  terms.log_no_change = model.law().log_survival(t) +
                        log_likelihood_given_changepoint(model, h, kNever);

  if (const auto* pm = std::get_if<PointMass>(&model.law().family())) {
    terms.log_change = pm->at <= t
                           ? log_likelihood_given_changepoint(model, h, pm->at)
                           : kNegInf;
    return terms;
  }

  double acc = kNegInf;
  for (const Segment& seg : segments(model.rates(), h)) {
    const double part = std::visit(
        [&](const auto& fam) -> double {
          using F = std::decay_t<decltype(fam)>;
          if constexpr (std::is_same_v<F, PointMass>)
            return kNegInf; // handled above
          else
            return log_segment_mass(seg, fam);
        },
        model.law().family());
    acc = log_add_exp(acc, part);
  }
  terms.log_change = acc;
  return terms;
}

double posterior_survival(const ContinuousModel& model, const History& h) {
  return posterior_terms(model, h).prob_before();
}

PosteriorResult intensity(const ContinuousModel& model, const History& h) {
  const PosteriorTerms terms = posterior_terms(model, h);
  const double before = terms.prob_before();
  const double after = terms.prob_after();
  const std::size_t k = h.count();
  return {after, before, mix_rates(model.rates().pre(k), model.rates().post(k), after)};
}

PathSample sample_path(const ContinuousModel& model, SimulationLimit limit,
                       std::uint64_t seed) {
  const RateSchedule& rates = model.rates();
  if (!std::isfinite(limit.horizon) &&
      limit.max_arrivals == std::numeric_limits<std::size_t>::max() &&
      rates.tail() == TailMode::repeat_last)
    throw PreconditionError(
        "a horizon or arrival cap is needed for schedules that never halt");

  Engine eng(seed);
  PathSample path;
  path.seed = seed;
  path.horizon = limit.horizon;
  const double u = model.law().quantile(uniform01(eng));
  path.change_time = u;

  double now = 0.0;
  std::size_t count = 0;
  while (count < limit.max_arrivals && !rates.halted(count)) {
    // Unit-rate exponential consumed by a piecewise-constant hazard.
    double e = standard_exponential(eng);
    double next;
    if (now < u) {
      const double pre_budget = exposure(rates.pre(count), u - now);
      if (e < pre_budget) {
        next = now + e / rates.pre(count);
      } else {
        e -= pre_budget;
        const double r = rates.post(count);
        next = r > 0.0 ? u + e / r : kNever;
      }
    } else {
      const double r = rates.post(count);
      next = r > 0.0 ? now + e / r : kNever;
    }
    if (!(next <= limit.horizon)) break;
    path.arrival_times.push_back(next);
    now = next;
    ++count;
  }
  // Without a horizon the window ends at the last draw, unless the schedule
  // halted and the whole path is known.
  if (!std::isfinite(limit.horizon) && !rates.halted(count)) path.horizon = now;
  return path;
}

DiscreteModel discretize(const ContinuousModel& model, long m,
                         double horizon) {
  if (m < 1) throw InvalidParameter("discretization level must be >= 1");
  const RateSchedule& rates = model.rates();
  std::vector<double> pre, post;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    pre.push_back(rates.pre(k) / static_cast<double>(m));
    post.push_back(rates.post(k) / static_cast<double>(m));
  }
  for (std::size_t k = 0; k < pre.size(); ++k)
    if (pre[k] >= 1.0 || post[k] >= 1.0)
      throw PreconditionError("rate overflow: m=" + std::to_string(m) +
                              " leaves a per-slot rate >= 1");

  const long slots =
      static_cast<long>(std::ceil(horizon * static_cast<double>(m))) + 1;
  std::vector<double> nu;
  nu.reserve(static_cast<std::size_t>(slots));
  const ContinuousLaw& law = model.law();
  double prev = 0.0; // log P(U > (j-1)/m)
  for (long j = 1; j <= slots; ++j) {
    const double cur =
        law.log_survival(static_cast<double>(j) / static_cast<double>(m));
    nu.push_back(-std::expm1(cur - prev));
    prev = cur;
  }
  RateSchedule slot_rates(std::move(pre), std::move(post), rates.tail(),
                          RateUnits::per_slot);
  return DiscreteModel(std::move(slot_rates), DiscreteHazard(std::move(nu)));
}

std::optional<DiscreteHistory> snap_history(const History& h, long m) {
  const double md = static_cast<double>(m);
  const long n = static_cast<long>(std::floor(h.horizon() * md));
  if (n < 1) return std::nullopt;
  std::vector<long> slots;
  long prev = 0;
  for (double t : h.arrivals()) {
    const long s = static_cast<long>(std::floor(t * md));
    if (s <= prev) return std::nullopt;
    slots.push_back(s);
    prev = s;
  }
  return DiscreteHistory(n, std::move(slots));
}

std::vector<ConvergenceRow> convergence_study(const ContinuousModel& model,
                                              const History& h,
                                              std::span<const long> m_list) {
  const double exact = posterior_survival(model, h);
  std::vector<ConvergenceRow> rows;
  for (long m : m_list) {
    ConvergenceRow row;
    row.m = m;
    row.continuous_posterior = exact;
    const auto snapped = snap_history(h, m);
    if (snapped) {
      const DiscreteModel dm = discretize(model, m, h.horizon());
      row.discrete_posterior = posterior_survival(dm, *snapped);
      row.error = std::abs(row.discrete_posterior - exact);
      row.admissible = true;
    }
    rows.push_back(row);
  }
  return rows;
}

} // namespace cpb
