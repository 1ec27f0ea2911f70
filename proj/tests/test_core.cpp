#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cpb/core.hpp"
#include "test_support.hpp"

using namespace cpb;

TEST_CASE("rate schedule validation and tail extension") {
  RateSchedule r({1.0, 2.0}, {3.0, 4.0});
  CHECK(r.pre(5) == 2.0);
  CHECK(r.post(7) == 4.0);
  CHECK_FALSE(r.halted(10));

  RateSchedule z({1.0, 2.0}, {3.0, 4.0}, TailMode::zero_after_k);
  CHECK(z.pre(2) == 0.0);
  CHECK(z.halted(2));
  CHECK_FALSE(z.halted(1));

  CHECK_THROWS_AS(RateSchedule({1.0}, {1.0, 2.0}), InvalidSchedule);
  CHECK_THROWS_AS(RateSchedule({0.0}, {1.0}), InvalidSchedule);
  CHECK_THROWS_AS(RateSchedule({-1.0}, {1.0}), InvalidSchedule);
  CHECK_THROWS_AS(RateSchedule({0.5}, {1.0}, TailMode::repeat_last,
                               RateUnits::per_slot),
                  InvalidSchedule);
}

TEST_CASE("history invariants") {
  CHECK_NOTHROW(History(5.0, {1.0, 2.0, 5.0})); // arrival at the horizon
  CHECK_THROWS_AS(History(5.0, {2.0, 1.0}), InvalidHistory);
  CHECK_THROWS_AS(History(5.0, {1.0, 1.0}), InvalidHistory);
  CHECK_THROWS_AS(History(5.0, {0.0}), InvalidHistory);
  CHECK_THROWS_AS(History(5.0, {6.0}), InvalidHistory);
  CHECK_THROWS_AS(History(0.0), InvalidHistory);
  CHECK_THROWS_AS(DiscreteHistory(3, {0}), InvalidHistory);
  CHECK_THROWS_AS(DiscreteHistory(3, {4}), InvalidHistory);

  History h(5.0, {1.0, 2.0, 3.0});
  CHECK(h.count_at(0.5) == 0);
  CHECK(h.count_at(2.0) == 2);
  CHECK(h.count_at(5.0) == 3);
}

TEST_CASE("history domination") {
  CHECK(history_dominates(History(5, {1, 2, 3}), History(5, {1, 2, 3})));
  CHECK(history_dominates(History(5, {2, 3, 4}), History(5, {1, 2, 3})));
  CHECK_FALSE(history_dominates(History(5, {1, 4}), History(5, {2, 3})));
  CHECK_THROWS_AS(history_dominates(History(5, {1}), History(6, {1})),
                  IncomparableInputs);
  CHECK_THROWS_AS(history_dominates(History(5, {1}), History(5, {1, 2})),
                  IncomparableInputs);
  CHECK(history_dominates(DiscreteHistory(6, {2, 5}),
                          DiscreteHistory(6, {1, 5})));
}

TEST_CASE("domination is a partial order on random triples") {
  Engine eng(11);
  for (int rep = 0; rep < 2000; ++rep) {
    const long n = cpb::uniform_int(eng, 1, 7);
    const auto k = static_cast<std::size_t>(cpb::uniform_int(eng, 0, n));
    DiscreteHistory a(n, testing::random_slots(eng, n, k));
    DiscreteHistory b(n, testing::random_slots(eng, n, k));
    DiscreteHistory c(n, testing::random_slots(eng, n, k));
    CHECK(history_dominates(a, a));
    if (history_dominates(a, b) && history_dominates(b, a)) CHECK(a == b);
    if (history_dominates(a, b) && history_dominates(b, c))
      CHECK(history_dominates(a, c));
  }
}

TEST_CASE("validate_rates examples") {
  auto r1 = validate_rates(RateSchedule({1, 1}, {2, 3}));
  CHECK(r1.assu_strict);
  CHECK(r1.assu_broad);
  CHECK(r1.catania);
  CHECK_FALSE(r1.ser.has_value());

  auto r2 = validate_rates(RateSchedule({1, 1}, {2, 100}));
  CHECK(r2.assu_strict);
  CHECK(r2.catania);

  RateSchedule d({0.05, 0.02}, {0.2, 0.1}, TailMode::repeat_last,
                 RateUnits::per_slot);
  CHECK(ser_ratio(d, 1) == doctest::Approx(0.8 * 0.98 / (0.95 * 0.9)));
  CHECK(ser_ratio(d, 1) == doctest::Approx(0.917).epsilon(1e-3));
  auto r3 = validate_rates(d);
  REQUIRE(r3.ser.has_value());
  CHECK_FALSE(*r3.ser);
  CHECK(*r3.plo);

  auto r4 = validate_rates(RateSchedule({1, 1}, {3, 2}));
  CHECK(r4.assu_strict);
  CHECK_FALSE(r4.catania);

  auto r5 = validate_rates(RateSchedule({1, 2}, {1, 3}));
  CHECK_FALSE(r5.assu_strict);
  CHECK(r5.assu_broad);

  CHECK_THROWS_AS(validate_rates(RateSchedule({1}, {2}), 0), InvalidParameter);
}

TEST_CASE("assu_strict implies assu_broad") {
  Engine eng(3);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> pre(3), post(3);
    for (std::size_t k = 0; k < 3; ++k) {
      pre[k] = cpb::uniform(eng, 0.1, 2.0);
      post[k] = cpb::uniform(eng, 0.1, 2.0);
    }
    auto rep = validate_rates(RateSchedule(pre, post), 6);
    if (rep.assu_strict) CHECK(rep.assu_broad);
  }
}

TEST_CASE("shift operator") {
  CHECK(shift_operator(DiscreteHistory(6, {1, 3, 5}), 1) ==
        DiscreteHistory(6, {2, 3, 5}));
  CHECK(shift_operator(DiscreteHistory(6, {1, 2, 5}), 1) ==
        DiscreteHistory(6, {1, 2, 5}));
  CHECK(shift_operator(DiscreteHistory(6, {1, 3, 6}), 3) ==
        DiscreteHistory(6, {1, 3, 6}));
  CHECK(shift_operator(DiscreteHistory(6, {1, 3, 5}), 3) ==
        DiscreteHistory(6, {1, 3, 6}));
  CHECK_THROWS_AS(shift_operator(DiscreteHistory(6, {1}), 2), IndexError);
  CHECK_THROWS_AS(shift_operator(DiscreteHistory(6, {1}), 0), IndexError);
}

TEST_CASE("shift chain examples") {
  CHECK(shift_chain(DiscreteHistory(4, {1, 2}), DiscreteHistory(4, {1, 2}))
            .empty());
  CHECK(shift_chain(DiscreteHistory(4, {1, 2}), DiscreteHistory(4, {1, 3})) ==
        std::vector<std::size_t>{2});
  CHECK(shift_chain(DiscreteHistory(5, {1, 2}), DiscreteHistory(5, {3, 4})) ==
        std::vector<std::size_t>{2, 2, 1, 1});
  CHECK_THROWS_AS(
      shift_chain(DiscreteHistory(5, {3}), DiscreteHistory(5, {2})),
      IncomparableInputs);
}

TEST_CASE("shift chain replay and shift output dominate input") {
  Engine eng(42);
  for (int rep = 0; rep < 3000; ++rep) {
    const long n = cpb::uniform_int(eng, 1, 20);
    const auto k = static_cast<std::size_t>(
        cpb::uniform_int(eng, 0, std::min<long>(n, 8)));
    DiscreteHistory a(n, testing::random_slots(eng, n, k));
    DiscreteHistory b(n, testing::random_slots(eng, n, k));
    if (!history_dominates(b, a)) std::swap(a, b);
    if (!history_dominates(b, a)) continue;
    DiscreteHistory cur = a;
    for (std::size_t i : shift_chain(a, b)) {
      DiscreteHistory next = shift_operator(cur, i);
      CHECK(history_dominates(next, cur));
      CHECK(next != cur);
      cur = next;
    }
    CHECK(cur == b);
  }
}
