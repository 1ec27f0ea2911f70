#include "cpb/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cpb/numeric.hpp"
#include "cpb/rng.hpp"

namespace cpb {

DiscreteModel::DiscreteModel(RateSchedule rates, DiscreteHazard law)
    : rates_(std::move(rates)), law_(std::move(law)) {
  if (rates_.units() != RateUnits::per_slot)
    throw InvalidSchedule("discrete model needs per-slot rates");
}

namespace {

double log_slot_factor(double p, bool arrival) {
  return arrival ? std::log(p) : std::log1p(-p);
}

// Per-slot log factors under the pre- and post-change regime.
struct SlotFactors {
  std::vector<double> pre;
  std::vector<double> post;
};

SlotFactors slot_factors(const RateSchedule& rates, const DiscreteHistory& h) {
  const long n = h.horizon();
  SlotFactors f;
  f.pre.resize(static_cast<std::size_t>(n));
  f.post.resize(static_cast<std::size_t>(n));
  const auto slots = h.arrivals();
  std::size_t count = 0;
  for (long r = 1; r <= n; ++r) {
    const bool arrival = count < slots.size() && slots[count] == r;
    const auto idx = static_cast<std::size_t>(r - 1);
    f.pre[idx] = log_slot_factor(rates.pre(count), arrival);
    f.post[idx] = log_slot_factor(rates.post(count), arrival);
    if (arrival) ++count;
  }
  return f;
}

} // namespace

JointWeights joint_weights(const DiscreteModel& model,
                           const DiscreteHistory& h) {
  const long n = h.horizon();
  const auto nn = static_cast<std::size_t>(n);
  const SlotFactors f = slot_factors(model.rates(), h);

  // suffix_post[i] = sum of post factors over slots i+1..n (0-based i).
  std::vector<double> suffix_post(nn + 1, 0.0);
  for (std::size_t i = nn; i-- > 0;)
    suffix_post[i] = suffix_post[i + 1] + f.post[i];

  JointWeights w;
  w.log_weight.resize(nn);
  double prefix_pre = 0.0;
  double log_surv = 0.0; // log P(U > j-1)
  for (long j = 1; j <= n; ++j) {
    const auto idx = static_cast<std::size_t>(j - 1);
    prefix_pre += f.pre[idx];
    const double nu = model.law().hazard(j);
    w.log_weight[idx] =
        std::log(nu) + log_surv + prefix_pre + suffix_post[idx + 1];
    log_surv += std::log1p(-nu);
  }
  w.log_tail = log_surv + prefix_pre;
  return w;
}

double joint_weight(const DiscreteModel& model, const DiscreteHistory& h,
                    long j) {
  if (j < 1) throw IndexError("change slot j must be >= 1");
  const SlotFactors f = slot_factors(model.rates(), h);
  double acc = model.law().log_mass(j);
  for (long r = 1; r <= h.horizon(); ++r) {
    const auto idx = static_cast<std::size_t>(r - 1);
    acc += r > j ? f.post[idx] : f.pre[idx];
  }
  return std::exp(acc);
}

double posterior_survival(const DiscreteModel& model,
                          const DiscreteHistory& h) {
  const JointWeights w = joint_weights(model, h);
  const double before = log_sum_exp(w.log_weight);
  const double total = log_add_exp(before, w.log_tail);
  if (!std::isfinite(total))
    throw DegenerateModel("history has zero probability under the model");
  return std::exp(w.log_tail - total);
}

PosteriorResult step_intensity(const DiscreteModel& model,
                               const DiscreteHistory& h) {
  const double surv = posterior_survival(model, h);
  const std::size_t k = h.count();
  return {1.0 - surv, surv,
          mix_rates(model.rates().pre(k), model.rates().post(k), 1.0 - surv)};
}

ShiftRatios shift_ratios(const RateSchedule& r, std::size_t l) {
  if (l < 1) throw IndexError("shift ratios need l >= 1");
  const double alpha = (1.0 - r.post(l - 1)) / (1.0 - r.post(l));
  const double delta = ((1.0 - r.pre(l - 1)) * r.post(l - 1)) /
                       (r.pre(l - 1) * (1.0 - r.post(l)));
  const double gamma = (1.0 - r.pre(l - 1)) / (1.0 - r.pre(l));
  return {alpha, gamma, delta};
}

ShiftIdentityReport verify_shift_identities(const DiscreteModel& model,
                                            const DiscreteHistory& h,
                                            std::size_t l, double rel_tol) {
  const DiscreteHistory shifted = shift_operator(h, l);
  if (shifted == h)
    throw PreconditionError("shift of arrival " + std::to_string(l) +
                            " is not admissible");
  const long nl = h.arrival(l - 1);
  const JointWeights w = joint_weights(model, h);
  const JointWeights ws = joint_weights(model, shifted);

  ShiftIdentityReport rep;
  for (long j = 1; j <= h.horizon(); ++j) {
    const auto idx = static_cast<std::size_t>(j - 1);
    const double v = std::exp(w.log_weight[idx]);
    const double vs = std::exp(ws.log_weight[idx]);
    if (j < nl) {
      rep.a += v;
      rep.a_hat += vs;
    } else if (j == nl) {
      rep.g = v;
      rep.g_hat = vs;
    } else {
      rep.b += v;
      rep.b_hat += vs;
    }
  }
  rep.c = std::exp(w.log_tail);
  rep.c_hat = std::exp(ws.log_tail);

  rep.expected = shift_ratios(model.rates(), l);
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  rep.measured.alpha = rep.a > 0 ? rep.a_hat / rep.a : nan;
  rep.measured.gamma = rep.c_hat / rep.c;
  rep.measured.delta = rep.g_hat / rep.g;
  rep.measured_gamma_b = rep.b > 0 ? rep.b_hat / rep.b : nan;

  auto rel = [](double measured, double expected) {
    if (std::isnan(measured)) return 0.0; // empty partial sum
    return std::abs(measured - expected) / std::abs(expected);
  };
  rep.max_rel_error = std::max({rel(rep.measured.alpha, rep.expected.alpha),
                                rel(rep.measured.gamma, rep.expected.gamma),
                                rel(rep.measured.delta, rep.expected.delta),
                                rel(rep.measured_gamma_b, rep.expected.gamma)});
  rep.holds = rep.max_rel_error <= rel_tol;
  return rep;
}

namespace {

struct Enumeration {
  double matched = 0.0;       // P(history)
  double matched_after = 0.0; // P(history, U > n)
  double matched_next = 0.0;  // P(history, arrival at slot n+1)
  double total = 0.0;         // sums to 1 over all outcomes
};

// Walks every (change slot, arrival pattern) pair on `slots` slots. The
// first n slots are matched against h.
Enumeration enumerate(const DiscreteModel& model, const DiscreteHistory& h,
                      long slots) {
  const long n = h.horizon();
  std::uint32_t target = 0;
  for (long s : h.arrivals()) target |= 1u << (s - 1);
  const std::uint32_t low_mask = (n >= 32) ? ~0u : ((1u << n) - 1u);

  Enumeration e;
  const RateSchedule& rates = model.rates();
  // Change slots beyond `slots` behave identically; lump them.
  for (long j = 1; j <= slots + 1; ++j) {
    const double pj = (j <= slots) ? std::exp(model.law().log_mass(j))
                                   : std::exp(model.law().log_survival(slots));
    const std::uint32_t patterns = 1u << slots;
    for (std::uint32_t mask = 0; mask < patterns; ++mask) {
      double p = pj;
      std::size_t count = 0;
      for (long r = 1; r <= slots; ++r) {
        const double rate = rates.rate(r > j, count);
        if (mask & (1u << (r - 1))) {
          p *= rate;
          ++count;
        } else {
          p *= 1.0 - rate;
        }
      }
      e.total += p;
      if ((mask & low_mask) != target) continue;
      e.matched += p;
      if (j > n) e.matched_after += p;
      if (slots > n && (mask & (1u << n))) e.matched_next += p;
    }
  }
  return e;
}

void check_capacity(const DiscreteHistory& h, long extra) {
  if (h.horizon() + extra > kBruteForceMaxSlots)
    throw CapacityError("enumeration oracle is limited to " +
                        std::to_string(kBruteForceMaxSlots) + " slots");
}

} // namespace

double brute_force_posterior(const DiscreteModel& model,
                             const DiscreteHistory& h) {
  check_capacity(h, 0);
  const Enumeration e = enumerate(model, h, h.horizon());
  if (!(e.matched > 0.0))
    throw DegenerateModel("history has zero probability under the model");
  return e.matched_after / e.matched;
}

double brute_force_next_arrival(const DiscreteModel& model,
                                const DiscreteHistory& h) {
  check_capacity(h, 1);
  const Enumeration e = enumerate(model, h, h.horizon() + 1);
  if (!(e.matched > 0.0))
    throw DegenerateModel("history has zero probability under the model");
  return e.matched_next / e.matched;
}

DiscretePath sample_discrete_path(const DiscreteModel& model, long horizon,
                                  std::uint64_t seed) {
  if (horizon < 1) throw InvalidParameter("horizon must be >= 1");
  Engine eng(seed);
  DiscretePath path{0, {}, seed};

  const auto& law = model.law();
  const long listed = static_cast<long>(law.values().size());
  long m = 1;
  while (m <= listed && uniform01(eng) >= law.hazard(m)) ++m;
  if (m > listed) {
    // Geometric tail with success probability law.tail().
    const double draws = std::ceil(std::log(uniform01(eng)) /
                                   std::log1p(-law.tail()));
    m = listed + static_cast<long>(std::max(1.0, draws));
  }
  path.change_slot = m;

  const RateSchedule& rates = model.rates();
  std::size_t count = 0;
  for (long r = 1; r <= horizon; ++r) {
    if (rates.halted(count)) break;
    if (uniform01(eng) < rates.rate(r > m, count)) {
      path.arrival_slots.push_back(r);
      ++count;
    }
  }
  return path;
}

} // namespace cpb
