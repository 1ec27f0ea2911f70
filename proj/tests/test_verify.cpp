#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpb/verify.hpp"

using namespace cpb;

namespace {

void check_reevaluates(const Witness& w) {
  const auto [a, b] = reevaluate(w);
  CHECK(std::abs(a.prob_before - w.first.prob_before) <= 1e-10);
  CHECK(std::abs(b.prob_before - w.second.prob_before) <= 1e-10);
  CHECK(std::abs(a.intensity - w.first.intensity) <= 1e-10);
  CHECK(std::abs(b.intensity - w.second.intensity) <= 1e-10);
}

} // namespace

TEST_CASE("ratio inequality examples") {
  const Remark5Result eq = remark5_check(1, 2, 3, 4, 0.7, 0.7, 0.7);
  CHECK(eq.preconditions);
  CHECK(eq.holds);
  CHECK(eq.theta == doctest::Approx(eq.theta_prime).epsilon(1e-15));

  const Remark5Result r = remark5_check(1, 1, 1, 1, 2.0, 1.0, 3.0);
  CHECK(r.theta == doctest::Approx(0.25));
  CHECK(r.theta_prime == doctest::Approx(1.0 / 7.0));
  CHECK(r.holds);

  const Remark5Result bad = remark5_check(1, 1, 1, 1, 0.5, 1.0, 0.5);
  CHECK_FALSE(bad.preconditions);
  CHECK_FALSE(bad.holds);
  CHECK_THROWS_AS(remark5_check(0, 1, 1, 1, 1, 1, 1), InvalidParameter);

  const Remark5SweepReport sweep = remark5_sweep(100000, 3);
  CHECK(sweep.failures == 0);
}

TEST_CASE("discrete sweep finds no violation under plo and ser") {
  SweepConfig cfg;
  cfg.instances = 10000;
  cfg.seed = 17;
  const SweepReport rep = theorem1_sweep(cfg);
  CHECK(rep.pairs == 10000);
  CHECK(rep.violations == 0);
  CHECK(rep.min_margin >= -1e-12);
  CHECK(rep.max_margin > 0.0);
}

TEST_CASE("oracle and product-form engines agree on shared instances") {
  SweepConfig cfg;
  cfg.instances = 1500;
  cfg.seed = 5;
  const SweepReport a = theorem1_sweep(cfg);
  cfg.engine = SweepEngine::oracle;
  const SweepReport b = theorem1_sweep(cfg);
  CHECK(a.violations == b.violations);
  CHECK(std::abs(a.min_margin - b.min_margin) <= 1e-12);
  CHECK(std::abs(a.max_margin - b.max_margin) <= 1e-12);
}

TEST_CASE("sweep results do not depend on the thread count") {
  SweepConfig cfg;
  cfg.engine = SweepEngine::continuous;
  cfg.rate_class = RateClass::assu_broad;
  cfg.tolerance = 1e-9;
  cfg.instances = 600;
  cfg.threads = 1;
  const SweepReport a = theorem1_sweep(cfg);
  cfg.threads = 4;
  const SweepReport b = theorem1_sweep(cfg);
  CHECK(a.violations == b.violations);
  CHECK(a.min_margin == b.min_margin);
  CHECK(a.max_margin == b.max_margin);
  REQUIRE(a.witnesses.size() == b.witnesses.size());
  for (std::size_t i = 0; i < a.witnesses.size(); ++i)
    CHECK(a.witnesses[i].instance == b.witnesses[i].instance);
}

TEST_CASE("equal regimes give zero margins") {
  SweepConfig cfg;
  cfg.instances = 500;
  cfg.fixed_discrete.emplace(
      RateSchedule({0.2, 0.3}, {0.2, 0.3}, TailMode::repeat_last,
                   RateUnits::per_slot),
      DiscreteHazard({0.1, 0.2}, 0.15));
  // Equal regimes violate plo; the sweep takes the fixed model as given.
  SweepReport rep = theorem1_sweep(cfg);
  CHECK(std::abs(rep.min_margin) <= 1e-15);
  CHECK(std::abs(rep.max_margin) <= 1e-15);

  SweepConfig c2;
  c2.engine = SweepEngine::continuous;
  c2.instances = 300;
  c2.tolerance = 1e-9;
  c2.fixed_continuous.emplace(RateSchedule({1.0, 2.0}, {1.0, 2.0}),
                              ContinuousLaw(Weibull{1.4, 1.0}));
  rep = theorem1_sweep(c2);
  CHECK(std::abs(rep.min_margin) <= 1e-14);
  CHECK(std::abs(rep.max_margin) <= 1e-14);
}

TEST_CASE("continuous sweep under increasing rate gaps") {
  SweepConfig cfg;
  cfg.engine = SweepEngine::continuous;
  cfg.rate_class = RateClass::catania;
  cfg.tolerance = 1e-9;
  cfg.instances = 3000;
  cfg.seed = 99;
  const SweepReport rep = theorem1_sweep(cfg);
  CHECK(rep.violations == 0);
  CHECK(rep.min_margin >= -1e-9);
}

TEST_CASE("domination can fail when only post >= pre holds") {
  // Shrinking rate gap: one early arrival says less about the change than
  // one late arrival, yet the late one lowers the intensity.
  const ContinuousModel m(RateSchedule({1.0, 1.0}, {10.0, 1.5}),
                          ContinuousLaw(Exponential{1.0}));
  const History early(1.0, {0.1});
  const History late(1.0, {0.9});
  REQUIRE(history_dominates(late, early));
  CHECK(validate_rates(m.rates()).assu_strict);
  CHECK_FALSE(validate_rates(m.rates()).catania);
  CHECK(posterior_survival(m, late) > posterior_survival(m, early) + 0.05);
  CHECK(intensity(m, late).intensity < intensity(m, early).intensity);

  SweepConfig cfg;
  cfg.engine = SweepEngine::continuous;
  cfg.rate_class = RateClass::assu_broad;
  cfg.tolerance = 1e-9;
  cfg.instances = 2000;
  const SweepReport rep = theorem1_sweep(cfg);
  CHECK(rep.violations > 0);
  REQUIRE_FALSE(rep.witnesses.empty());
  for (const Witness& w : rep.witnesses) {
    check_reevaluates(w);
    const auto& [a, b] = std::get<std::pair<History, History>>(w.histories);
    CHECK(history_dominates(b, a));
    CHECK(validate_rates(w.rates).assu_broad);
    CHECK(w.second.prob_before > w.first.prob_before + 1e-9);
  }
}

TEST_CASE("sweep witnesses from discrete engines reevaluate") {
  SweepConfig cfg;
  cfg.instances = 200;
  // A schedule that breaks ser, so violations show up and can be replayed.
  cfg.fixed_discrete.emplace(
      RateSchedule({0.05, 0.02}, {0.6, 0.1}, TailMode::repeat_last,
                   RateUnits::per_slot),
      DiscreteHazard({0.2}, 0.2));
  const SweepReport rep = theorem1_sweep(cfg);
  REQUIRE(rep.violations > 0);
  for (const Witness& w : rep.witnesses) check_reevaluates(w);
}

TEST_CASE("added-arrival model and search") {
  const ContinuousModel m = added_arrival_model(100.0);
  const double t = 1.0;
  CHECK(intensity(m, History(t)).intensity ==
        doctest::Approx(1.0 + t / (1.0 + t)).epsilon(1e-12));
  CHECK_THROWS_AS(added_arrival_model(0.5), PreconditionError);

  // No witness exists on the grid for large M.
  CHECK_THROWS_AS(counterexample_added_arrival(100.0), SearchFailure);
  CHECK_THROWS_AS(counterexample_added_arrival(10.0), SearchFailure);

  // Below 2 the rate gap shrinks and a witness appears.
  const Witness w = counterexample_added_arrival(1.2);
  CHECK(w.second.intensity < w.first.intensity - 1e-6);
  const auto& [a, b] = std::get<std::pair<History, History>>(w.histories);
  CHECK(a.count() == 0);
  CHECK(b.count() == 1);
  CHECK(a.horizon() == b.horizon());
  CHECK_THROWS_AS(history_dominates(b, a), IncomparableInputs);
  check_reevaluates(w);
}

TEST_CASE("interval mismatch examples") {
  const auto [up, down] = interval_mismatch_examples();
  const auto& [a1, a2] = std::get<std::pair<History, History>>(up.histories);
  CHECK(a1.horizon() < a2.horizon());
  CHECK(up.first.prob_before < up.second.prob_before - 1e-6);
  const auto& [b1, b2] = std::get<std::pair<History, History>>(down.histories);
  CHECK(b1.horizon() < b2.horizon());
  CHECK(down.first.prob_before > down.second.prob_before + 1e-6);
  check_reevaluates(up);
  check_reevaluates(down);
}

TEST_CASE("shift identity sweep") {
  const IdentitySweepReport rep = shift_identity_sweep(1000, 8);
  CHECK(rep.shifts == 1000);
  CHECK(rep.failures == 0);
  CHECK(rep.max_rel_error <= 1e-12);
}

TEST_CASE("catania bridge") {
  const std::vector<long> ms{1, 2, 4, 8, 16, 64, 256, 1024};
  const BridgeReport ok =
      catania_bridge_check(RateSchedule({1.0, 1.0}, {2.0, 3.0}), ms);
  REQUIRE(ok.least_m.has_value());
  CHECK_FALSE(ok.broad_equality);
  CHECK_FALSE(ok.rows[0].admissible); // m = 1 leaves a per-slot rate >= 1
  CHECK_FALSE(ok.rows[1].admissible);
  for (const auto& r : ok.rows)
    if (r.admissible && r.m >= *ok.least_m) CHECK(r.ser);

  const BridgeReport tie =
      catania_bridge_check(RateSchedule({1.0, 2.0}, {2.0, 3.0}), ms);
  CHECK(tie.broad_equality);
  for (const auto& r : tie.rows)
    if (r.admissible) CHECK(std::abs(r.min_ratio - 1.0) <= 10.0 / (r.m * r.m));
}

TEST_CASE("convergence ratios stay near two") {
  const std::vector<long> ms{64, 128, 256, 512};
  const auto study = convergence_ratio_study(10, 5, ms);
  REQUIRE(study.size() == 10);
  for (const auto& inst : study) {
    REQUIRE(inst.ratios.size() == 3);
    for (double r : inst.ratios) {
      CHECK(r >= 1.5);
      CHECK(r <= 2.5);
    }
    for (std::size_t i = 1; i < inst.rows.size(); ++i)
      CHECK(inst.rows[i].error < inst.rows[i - 1].error);
  }
}
