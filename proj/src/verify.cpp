#include "cpb/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include "cpb/rng.hpp"

namespace cpb {

std::string engine_name(SweepEngine e) {
  switch (e) {
  case SweepEngine::discrete: return "discrete";
  case SweepEngine::oracle: return "oracle";
  case SweepEngine::continuous: return "continuous";
  }
  return "unknown";
}

namespace {

unsigned thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, count) on a pool; body writes only its own slot.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body body) {
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

PosteriorResult oracle_result(const DiscreteModel& m, const DiscreteHistory& h) {
  const double p = brute_force_posterior(m, h);
  return {1.0 - p, p, brute_force_next_arrival(m, h)};
}

std::vector<double> sorted_uniforms(Engine& eng, std::size_t k, double hi) {
  for (;;) {
    std::vector<double> t(k);
    for (auto& x : t) x = uniform(eng, 0.0, hi);
    std::sort(t.begin(), t.end());
    if (std::adjacent_find(t.begin(), t.end()) == t.end()) return t;
  }
}

// k distinct sorted values from 1..n by a partial Fisher-Yates shuffle.
std::vector<long> random_subset(Engine& eng, long n, std::size_t k) {
  std::vector<long> all(static_cast<std::size_t>(n));
  for (long s = 0; s < n; ++s) all[static_cast<std::size_t>(s)] = s + 1;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(
        uniform_int(eng, static_cast<long>(i), n - 1));
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

} // namespace

RateSchedule sample_plo_ser_rates(Engine& eng, std::size_t length) {
  std::vector<double> pre(length), post(length);
  double ratio = uniform(eng, 0.3, 0.95);
  for (std::size_t k = 0; k < length; ++k) {
    pre[k] = uniform(eng, 0.02, 0.4);
    // (1-post)/(1-pre) below 1 and nonincreasing gives plo and ser.
    if (k > 0) ratio *= uniform(eng, 0.7, 1.0);
    post[k] = 1.0 - ratio * (1.0 - pre[k]);
  }
  return RateSchedule(std::move(pre), std::move(post), TailMode::repeat_last,
                      RateUnits::per_slot);
}

RateSchedule sample_time_rates(Engine& eng, RateClass cls, std::size_t length,
                               double lo, double hi) {
  std::vector<double> pre(length), post(length);
  double diff = 0.0;
  for (std::size_t k = 0; k < length; ++k) {
    pre[k] = uniform(eng, lo, hi);
    if (cls == RateClass::assu_broad) {
      // Ties on purpose now and then.
      post[k] = uniform01(eng) < 0.2 ? pre[k] : pre[k] + uniform(eng, 0.0, hi - lo);
    } else {
      diff += uniform(eng, 0.01, 0.5 * (hi - lo));
      post[k] = pre[k] + diff;
    }
  }
  return RateSchedule(std::move(pre), std::move(post));
}

ContinuousLaw sample_law(Engine& eng) {
  switch (uniform_int(eng, 0, 2)) {
  case 0: return ContinuousLaw(Exponential{uniform(eng, 0.2, 2.0)});
  case 1:
    return ContinuousLaw(Weibull{uniform(eng, 0.5, 3.0), uniform(eng, 0.5, 3.0)});
  default: {
    const double s1 = uniform(eng, 0.2, 1.5);
    const double s2 = s1 + uniform(eng, 0.2, 1.5);
    const double s3 = s2 + uniform(eng, 0.2, 3.0);
    const double g1 = uniform(eng, 0.05, 0.5);
    const double g2 = g1 + uniform(eng, 0.05, 0.45);
    return ContinuousLaw(TableCdf{{{s1, g1}, {s2, g2}, {s3, 1.0}}});
  }
  }
}

DiscreteHazard sample_hazard(Engine& eng) {
  std::vector<double> nu(static_cast<std::size_t>(uniform_int(eng, 1, 5)));
  for (auto& v : nu) v = uniform(eng, 0.02, 0.5);
  return DiscreteHazard(std::move(nu), uniform(eng, 0.02, 0.5));
}

DiscreteHistory random_shift_chain(Engine& eng, const DiscreteHistory& h) {
  DiscreteHistory cur = h;
  if (h.count() == 0) return cur;
  std::size_t steps = 1;
  while (steps < 4 * h.count() && uniform01(eng) < 0.6) ++steps;
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<std::size_t> movable;
    for (std::size_t i = 1; i <= cur.count(); ++i)
      if (shift_operator(cur, i) != cur) movable.push_back(i);
    if (movable.empty()) break;
    const auto pick = static_cast<std::size_t>(
        uniform_int(eng, 0, static_cast<long>(movable.size()) - 1));
    cur = shift_operator(cur, movable[pick]);
  }
  return cur;
}

History random_forward_move(Engine& eng, const History& h) {
  std::vector<double> t(h.arrivals().begin(), h.arrivals().end());
  for (std::size_t i = t.size(); i-- > 0;) {
    const double upper = i + 1 < t.size() ? t[i + 1] : h.horizon();
    if (uniform01(eng) < 0.5) continue;
    const double moved = uniform(eng, t[i], upper);
    if (moved > t[i] && moved < upper) t[i] = moved;
  }
  return History(h.horizon(), std::move(t));
}

std::pair<PosteriorResult, PosteriorResult> reevaluate(const Witness& w) {
  if (w.engine == SweepEngine::continuous) {
    const ContinuousModel m(w.rates, std::get<ContinuousLaw>(w.law));
    const auto& [a, b] = std::get<std::pair<History, History>>(w.histories);
    return {intensity(m, a), intensity(m, b)};
  }
  const DiscreteModel m(w.rates, std::get<DiscreteHazard>(w.law));
  const auto& [a, b] =
      std::get<std::pair<DiscreteHistory, DiscreteHistory>>(w.histories);
  if (w.engine == SweepEngine::oracle)
    return {oracle_result(m, a), oracle_result(m, b)};
  return {step_intensity(m, a), step_intensity(m, b)};
}

SweepReport theorem1_sweep(const SweepConfig& cfg) {
  if (!(cfg.tolerance > 0.0)) throw InvalidParameter("tolerance must be > 0");
  if (cfg.instances < 1) throw InvalidParameter("instances must be >= 1");
  if (cfg.engine == SweepEngine::continuous && cfg.fixed_discrete)
    throw InvalidParameter("continuous sweep given a discrete model");
  if (cfg.engine != SweepEngine::continuous && cfg.fixed_continuous)
    throw InvalidParameter("discrete sweep given a continuous model");
  const long max_slots = cfg.engine == SweepEngine::oracle
                             ? std::min(cfg.max_slots, kBruteForceMaxSlots - 1)
                             : cfg.max_slots;
  if (max_slots < 1) throw InvalidParameter("max_slots must be >= 1");
  const std::size_t length =
      std::max(cfg.schedule_length, cfg.max_arrivals + 1);

  struct Outcome {
    double margin = 0.0;
    bool violated = false;
    std::size_t resampled = 0;
    std::optional<Witness> witness;
  };
  std::vector<Outcome> out(cfg.instances);

  parallel_for(cfg.instances, thread_count(cfg.threads), [&](std::size_t i) {
    Engine eng = make_engine(cfg.seed, i);
    Outcome& o = out[i];
    std::optional<Witness> w;
    if (cfg.engine == SweepEngine::continuous) {
      std::optional<ContinuousModel> model = cfg.fixed_continuous;
      while (!model) {
        RateSchedule r = sample_time_rates(eng, cfg.rate_class, length,
                                           cfg.rate_lo, cfg.rate_hi);
        const ConditionReport rep = validate_rates(r);
        const bool ok = cfg.rate_class == RateClass::catania
                            ? rep.catania && rep.assu_strict
                            : rep.assu_broad;
        if (!ok) {
          ++o.resampled;
          continue;
        }
        model.emplace(std::move(r), sample_law(eng));
      }
      const double horizon = uniform(eng, cfg.horizon_lo, cfg.horizon_hi);
      const auto k = static_cast<std::size_t>(
          uniform_int(eng, 0, static_cast<long>(cfg.max_arrivals)));
      const History h1(horizon, sorted_uniforms(eng, k, horizon));
      const History h2 = random_forward_move(eng, h1);
      w = Witness{"theorem1", cfg.engine, model->rates(), model->law(),
                  std::pair{h1, h2}, intensity(*model, h1),
                  intensity(*model, h2), "", i};
    } else {
      std::optional<DiscreteModel> model = cfg.fixed_discrete;
      if (!model) {
        for (;;) {
          RateSchedule r = sample_plo_ser_rates(eng, length);
          const ConditionReport rep = validate_rates(r);
          if (rep.plo.value_or(false) && rep.ser.value_or(false)) {
            model.emplace(std::move(r), sample_hazard(eng));
            break;
          }
          ++o.resampled;
        }
      }
      const long n = uniform_int(eng, 1, max_slots);
      const auto k = static_cast<std::size_t>(
          uniform_int(eng, 0, std::min<long>(n, static_cast<long>(cfg.max_arrivals))));
      const DiscreteHistory h1(n, random_subset(eng, n, k));
      const DiscreteHistory h2 = random_shift_chain(eng, h1);
      const bool oracle = cfg.engine == SweepEngine::oracle;
      w = Witness{"theorem1",
                  cfg.engine,
                  model->rates(),
                  model->law(),
                  std::pair{h1, h2},
                  oracle ? oracle_result(*model, h1) : step_intensity(*model, h1),
                  oracle ? oracle_result(*model, h2) : step_intensity(*model, h2),
                  "",
                  i};
    }
    o.margin = w->first.prob_before - w->second.prob_before;
    const double mu_gap = w->second.intensity - w->first.intensity;
    if (o.margin < -cfg.tolerance || mu_gap < -cfg.tolerance) {
      o.violated = true;
      w->relation = "P(U>t|h'') > P(U>t|h') and mu(h'') < mu(h')";
      o.witness = std::move(w);
    }
  });

  SweepReport rep;
  rep.pairs = cfg.instances;
  rep.min_margin = std::numeric_limits<double>::infinity();
  rep.max_margin = -std::numeric_limits<double>::infinity();
  for (auto& o : out) {
    rep.min_margin = std::min(rep.min_margin, o.margin);
    rep.max_margin = std::max(rep.max_margin, o.margin);
    rep.resampled += o.resampled;
    if (o.violated) {
      ++rep.violations;
      if (rep.witnesses.size() < kMaxReportedWitnesses)
        rep.witnesses.push_back(std::move(*o.witness));
    }
  }
  return rep;
}

ContinuousModel added_arrival_model(double M) {
  if (!(M >= 1.0) || !std::isfinite(M))
    throw PreconditionError("added-arrival model needs M >= 1");
  return ContinuousModel(RateSchedule({1.0, 1.0}, {2.0, M}),
                         ContinuousLaw(Exponential{1.0}));
}

Witness search_added_arrival(const ContinuousModel& model,
                             const SearchGrid& grid) {
  if (!(grid.t_step > 0.0) || !(grid.t_max > grid.t_step) || grid.refine < 1)
    throw InvalidParameter("bad search grid");
  struct Cell {
    double t = 0, t1 = 0, margin = -std::numeric_limits<double>::infinity();
  };
  auto margin = [&](double t, double t1) {
    return intensity(model, History(t)).intensity -
           intensity(model, History(t, {t1})).intensity;
  };
  Cell best;
  auto consider = [&](double t, double t1) {
    if (!(t1 > 0.0) || !(t1 < t) || t > grid.t_max) return;
    const double m = margin(t, t1);
    if (m > best.margin) best = {t, t1, m};
  };
  const int steps = static_cast<int>(std::llround(grid.t_max / grid.t_step));
  for (int a = 1; a <= steps; ++a)
    for (int b = 1; b < a; ++b) consider(a * grid.t_step, b * grid.t_step);
  if (!std::isfinite(best.margin))
    throw SearchFailure("search grid has no admissible cell");
  const Cell coarse = best;
  const double fine = grid.t_step / grid.refine;
  for (int a = -grid.refine; a <= grid.refine; ++a)
    for (int b = -grid.refine; b <= grid.refine; ++b)
      consider(coarse.t + a * fine, coarse.t1 + b * fine);

  if (!(best.margin > grid.margin)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "no (t, t1) with mu(one arrival) < mu(no arrival) beyond margin "
        << grid.margin << "; best cell t=" << best.t << " t1=" << best.t1
        << " mu(h')-mu(h'')=" << best.margin;
    throw SearchFailure(msg.str());
  }
  const History h1(best.t);
  const History h2(best.t, {best.t1});
  return Witness{"added_arrival",
                 SweepEngine::continuous,
                 model.rates(),
                 model.law(),
                 std::pair{h1, h2},
                 intensity(model, h1),
                 intensity(model, h2),
                 "mu(h'') < mu(h'); arrival counts differ (0 vs 1) so the "
                 "domination order does not apply",
                 0};
}

Witness counterexample_added_arrival(double M, const SearchGrid& grid) {
  return search_added_arrival(added_arrival_model(M), grid);
}

namespace {

// Best (t', t'') with t' < t'' maximizing sign * (P(t'') - P(t')).
Witness interval_search(const ContinuousModel& model, double sign,
                        const SearchGrid& grid, const std::string& relation) {
  const int steps = static_cast<int>(std::llround(grid.t_max / grid.t_step));
  std::vector<double> surv(static_cast<std::size_t>(steps) + 1);
  for (int a = 1; a <= steps; ++a)
    surv[static_cast<std::size_t>(a)] =
        posterior_survival(model, History(a * grid.t_step));
  double best = -std::numeric_limits<double>::infinity();
  int ba = 0, bb = 0;
  for (int a = 1; a <= steps; ++a)
    for (int b = a + 1; b <= steps; ++b) {
      const double m = sign * (surv[static_cast<std::size_t>(b)] -
                               surv[static_cast<std::size_t>(a)]);
      if (m > best) {
        best = m;
        ba = a;
        bb = b;
      }
    }
  if (!(best > grid.margin)) {
    std::ostringstream msg;
    msg << "interval search failed; best margin " << best;
    throw SearchFailure(msg.str());
  }
  const History h1(ba * grid.t_step);
  const History h2(bb * grid.t_step);
  return Witness{"interval", SweepEngine::continuous, model.rates(),
                 model.law(), std::pair{h1, h2}, intensity(model, h1),
                 intensity(model, h2), relation, 0};
}

} // namespace

std::pair<Witness, Witness> interval_mismatch_examples(const SearchGrid& grid) {
  // Decreasing hazard and a strong post-change rate: silence is evidence
  // against an early change, outweighing the prior decay.
  const ContinuousModel a(RateSchedule({1.0}, {50.0}),
                          ContinuousLaw(Weibull{0.5, 1.0}));
  // Nearly equal regimes: the prior decay dominates.
  const ContinuousModel b(RateSchedule({1.0}, {1.1}),
                          ContinuousLaw(Exponential{1.0}));
  return {interval_search(a, 1.0, grid, "P(U>t'|h') < P(U>t''|h''), t' < t''"),
          interval_search(b, -1.0, grid, "P(U>t'|h') > P(U>t''|h''), t' < t''")};
}

Remark5Result remark5_check(double A, double B, double C, double D,
                            double alpha, double gamma, double delta) {
  for (double v : {A, B, C, D, alpha, gamma, delta})
    if (!(v > 0.0) || !std::isfinite(v))
      throw InvalidParameter("constants must be positive and finite");
  Remark5Result r;
  r.theta = C / (A + B + C + D);
  r.theta_prime = C * gamma / (A * alpha + B * gamma + C * gamma + D * delta);
  r.preconditions = alpha / gamma >= 1.0 && delta / gamma >= 1.0;
  // A few ulps of slack for the equality case alpha = gamma = delta.
  r.holds = r.theta - r.theta_prime >=
            -8.0 * std::numeric_limits<double>::epsilon() * r.theta;
  return r;
}

Remark5SweepReport remark5_sweep(std::size_t draws, std::uint64_t seed) {
  Engine eng(mix_seed(seed, 0));
  Remark5SweepReport rep;
  rep.draws = draws;
  rep.min_gap = std::numeric_limits<double>::infinity();
  auto logu = [&](double lo, double hi) { return std::exp(uniform(eng, lo, hi)); };
  for (std::size_t i = 0; i < draws; ++i) {
    const double A = logu(-5, 5), B = logu(-5, 5), C = logu(-5, 5),
                 D = logu(-5, 5);
    const double gamma = logu(-3, 3);
    const double alpha =
        uniform01(eng) < 0.1 ? gamma : gamma * (1.0 + logu(-8, 3));
    const double delta =
        uniform01(eng) < 0.1 ? gamma : gamma * (1.0 + logu(-8, 3));
    const Remark5Result r = remark5_check(A, B, C, D, alpha, gamma, delta);
    if (!r.preconditions) continue; // cannot happen by construction
    rep.min_gap = std::min(rep.min_gap, r.theta - r.theta_prime);
    if (!r.holds) ++rep.failures;
  }
  return rep;
}

IdentitySweepReport shift_identity_sweep(std::size_t shifts,
                                         std::uint64_t seed, double rel_tol) {
  IdentitySweepReport rep;
  rep.shifts = shifts;
  for (std::size_t i = 0; i < shifts; ++i) {
    Engine eng = make_engine(seed, i);
    const DiscreteModel model(sample_plo_ser_rates(eng, 4), sample_hazard(eng));
    for (;;) {
      const long n = uniform_int(eng, 2, 12);
      const auto k = static_cast<std::size_t>(
          uniform_int(eng, 1, std::min<long>(n - 1, 5)));
      const DiscreteHistory h(n, random_subset(eng, n, k));
      std::vector<std::size_t> movable;
      for (std::size_t l = 1; l <= k; ++l)
        if (shift_operator(h, l) != h) movable.push_back(l);
      if (movable.empty()) continue;
      const std::size_t l = movable[static_cast<std::size_t>(
          uniform_int(eng, 0, static_cast<long>(movable.size()) - 1))];
      const ShiftIdentityReport r = verify_shift_identities(model, h, l, rel_tol);
      rep.max_rel_error = std::max(rep.max_rel_error, r.max_rel_error);
      if (!r.holds) {
        ++rep.failures;
        if (rep.failed.size() < kMaxReportedWitnesses) rep.failed.push_back(r);
      }
      break;
    }
  }
  return rep;
}

BridgeReport catania_bridge_check(const RateSchedule& rates,
                                  std::span<const long> m_list) {
  if (rates.units() != RateUnits::per_time)
    throw InvalidSchedule("bridge check needs per-time rates");
  BridgeReport rep;
  const auto pre = rates.pre_prefix();
  const auto post = rates.post_prefix();
  for (std::size_t k = 1; k < pre.size(); ++k) {
    const double d0 = post[k - 1] - pre[k - 1];
    const double d1 = post[k] - pre[k];
    if (std::abs(d1 - d0) <= 1e-15 * std::max(std::abs(d0), std::abs(d1)))
      rep.broad_equality = true;
  }
  double peak = 0.0;
  for (std::size_t k = 0; k < pre.size(); ++k)
    peak = std::max({peak, pre[k], post[k]});

  std::vector<long> ms(m_list.begin(), m_list.end());
  std::sort(ms.begin(), ms.end());
  for (long m : ms) {
    BridgeRow row;
    row.m = m;
    const double md = static_cast<double>(m);
    row.admissible = m >= 1 && peak / md < 1.0;
    if (row.admissible) {
      std::vector<double> a(pre.begin(), pre.end()), b(post.begin(), post.end());
      for (auto& x : a) x /= md;
      for (auto& x : b) x /= md;
      const RateSchedule slot(a, b, rates.tail(), RateUnits::per_slot);
      row.ser = validate_rates(slot).ser.value_or(false);
      row.min_ratio = 1.0;
      for (std::size_t k = 1; k < pre.size(); ++k)
        row.min_ratio = std::min(row.min_ratio, ser_ratio(slot, k));
    }
    rep.rows.push_back(row);
  }
  // Least m from which every larger listed admissible m also passes.
  for (std::size_t i = rep.rows.size(); i-- > 0;) {
    if (!rep.rows[i].admissible) continue;
    if (!rep.rows[i].ser) break;
    rep.least_m = rep.rows[i].m;
  }
  return rep;
}

std::vector<ConvergenceInstance> convergence_ratio_study(
    std::size_t instances, std::uint64_t seed, std::span<const long> m_list) {
  std::vector<ConvergenceInstance> out;
  for (std::size_t i = 0; i < instances; ++i) {
    Engine eng = make_engine(seed, i);
    const RateSchedule rates({uniform(eng, 0.3, 2.0), uniform(eng, 0.3, 2.0)},
                             {uniform(eng, 0.3, 3.0), uniform(eng, 0.3, 3.0)});
    ContinuousLaw law = uniform01(eng) < 0.5
                            ? ContinuousLaw(Exponential{uniform(eng, 0.3, 2.0)})
                            : ContinuousLaw(Weibull{uniform(eng, 1.5, 3.0),
                                                    uniform(eng, 0.5, 2.0)});
    const long ticks = uniform_int(eng, 32, 192); // horizon in 1/64 units
    const auto k = static_cast<std::size_t>(uniform_int(eng, 0, 3));
    std::vector<double> arrivals;
    for (long p : random_subset(eng, ticks - 1, k)) arrivals.push_back(static_cast<double>(p) / 64.0);
    ConvergenceInstance inst{ContinuousModel(rates, std::move(law)),
                             History(static_cast<double>(ticks) / 64.0,
                                     std::move(arrivals)),
                             {},
                             {}};
    inst.rows = convergence_study(inst.model, inst.history, m_list);
    for (std::size_t r = 0; r + 1 < inst.rows.size(); ++r) {
      const auto& lo = inst.rows[r];
      const auto& hi = inst.rows[r + 1];
      if (hi.m == 2 * lo.m && lo.admissible && hi.admissible)
        inst.ratios.push_back(lo.error / hi.error);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

} // namespace cpb
