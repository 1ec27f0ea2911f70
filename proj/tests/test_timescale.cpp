#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpb/timescale.hpp"
#include "test_support.hpp"

using namespace cpb;

namespace {

ContinuousModel model(std::vector<double> pre, std::vector<double> post,
                      ContinuousLaw::Family law) {
  return ContinuousModel(RateSchedule(std::move(pre), std::move(post)),
                         ContinuousLaw(std::move(law)));
}

TimeScale random_scale(Engine& eng, std::size_t len) {
  std::vector<double> g(len);
  for (auto& x : g) x = cpb::uniform(eng, 0.2, 5.0);
  return TimeScale(std::move(g));
}

std::size_t count_at(const std::vector<double>& arrivals, double s) {
  return static_cast<std::size_t>(
      std::upper_bound(arrivals.begin(), arrivals.end(), s) - arrivals.begin());
}

} // namespace

TEST_CASE("time map examples") {
  History h(4.0, {1.0});
  CHECK(time_map(TimeScale({1.0}), h, 2.7) == 2.7);
  CHECK(time_map(TimeScale({2.0, 3.0}), h, 1.5) == doctest::Approx(3.5));
  CHECK_THROWS_AS(time_map(TimeScale({1.0}), h, 4.5), RangeError);
  CHECK_THROWS_AS(time_map(TimeScale({1.0}), h, -0.1), RangeError);
  CHECK_THROWS_AS(TimeScale({1.0, 0.0}), InvalidParameter);
  CHECK_THROWS_AS(TimeScale(std::vector<double>{}), InvalidParameter);

  TimeScale s({2.0, 0.5, 3.0});
  History h2(6.0, {1.0, 3.0, 4.5});
  CHECK(time_map(s, h2, 3.0) == doctest::Approx(2.0 * 1.0 + 0.5 * 2.0));
  CHECK(time_map(s, h2, 4.5) == doctest::Approx(2.0 + 1.0 + 3.0 * 1.5));
  CHECK(time_map(s, h2, 6.0) == doctest::Approx(2.0 + 1.0 + 4.5 + 3.0 * 1.5));
}

TEST_CASE("time map is increasing with slope gamma of the current count") {
  Engine eng(31);
  for (int rep = 0; rep < 200; ++rep) {
    const TimeScale s = random_scale(eng, 4);
    const History h = testing::random_history(eng, 1.0, 5.0, 5);
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
      const double t = std::min(h.horizon(), h.horizon() * i / 100.0);
      const double g = time_map(s, h, t);
      CHECK(g > prev);
      prev = g;
    }
    const double t = cpb::uniform(eng, 0.0, h.horizon() * 0.99);
    const double dt = 1e-7;
    const std::size_t k = h.count_at(t);
    if (h.count_at(t + dt) == k) {
      const double slope = (time_map(s, h, t + dt) - time_map(s, h, t)) / dt;
      CHECK(slope == doctest::Approx(s.gamma(k)).epsilon(1e-6));
    }
  }
}

TEST_CASE("inverse time map") {
  Engine eng(5);
  for (int rep = 0; rep < 1000; ++rep) {
    const TimeScale s = random_scale(eng, 4);
    const History h = testing::random_history(eng, 1.0, 5.0, 5);
    const double t = cpb::uniform(eng, 0.0, h.horizon());
    const double back = inverse_time_map(s, h, time_map(s, h, t));
    CHECK(std::abs(back - t) <= 1e-14 * std::max(1.0, h.horizon()));
    for (std::size_t l = 0; l < h.count(); ++l)
      CHECK(inverse_time_map(s, h, time_map(s, h, h.arrival(l))) ==
            h.arrival(l));
  }
  History h(3.0, {1.0});
  CHECK(inverse_time_map(TimeScale({1.0}), h, 2.2) == 2.2);
  CHECK_THROWS_AS(inverse_time_map(TimeScale({1.0}), h, 3.5), RangeError);
}

TEST_CASE("transform path examples") {
  PathSample p;
  p.arrival_times = {1.0, 3.0};
  p.horizon = 5.0;
  p.change_time = 2.0;
  const PathSample id = transform_path(TimeScale({1.0}), p);
  CHECK(id.arrival_times == p.arrival_times);
  CHECK(id.change_time == p.change_time);
  CHECK(id.horizon == p.horizon);

  const TimeScale s({2.0, 3.0});
  const PathSample q = transform_path(s, p);
  REQUIRE(q.arrival_times.size() == 2);
  CHECK(q.arrival_times[0] == doctest::Approx(2.0));
  CHECK(q.arrival_times[1] - q.arrival_times[0] == doctest::Approx(6.0));
  // U between T1 and T2.
  CHECK(q.change_time == doctest::Approx(2.0 + 3.0 * (2.0 - 1.0)));
  CHECK_FALSE(q.change_censored);

  p.change_time = 9.0;
  const PathSample c = transform_path(s, p);
  CHECK(c.change_censored);
  CHECK(c.change_time == c.horizon);
}

TEST_CASE("transform rates") {
  RateSchedule r({1.0, 1.0}, {2.0, 100.0});
  const RateSchedule same = transform_rates(TimeScale({1.0}), r);
  CHECK(same.pre(0) == 1.0);
  CHECK(same.post(1) == 100.0);
  const RateSchedule t = transform_rates(TimeScale({1.0, 98.0}), r);
  CHECK(t.post(0) == 2.0);
  CHECK(t.post(1) == doctest::Approx(100.0 / 98.0));
  CHECK(t.pre(1) == doctest::Approx(1.0 / 98.0));

  Engine eng(2);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<double> pre(3), post(3);
    for (std::size_t k = 0; k < 3; ++k) {
      pre[k] = cpb::uniform(eng, 0.1, 2.0);
      post[k] = pre[k] + cpb::uniform(eng, 0.0, 2.0);
    }
    const RateSchedule rr(pre, post);
    const RateSchedule tt = transform_rates(random_scale(eng, 4), rr);
    CHECK(validate_rates(tt).assu_broad);
  }
}

TEST_CASE("regularizing gammas") {
  RateSchedule r({1.0, 1.0}, {2.0, 100.0});
  const std::vector<double> c{1.0, 0.5};
  const TimeScale s = regularizing_gammas(r, c);
  CHECK(s.gamma(0) == 1.0);
  CHECK(s.gamma(1) == doctest::Approx(49.5));
  CHECK(validate_rates(transform_rates(s, r)).catania);

  // Constant differences: gamma_k = c_k.
  RateSchedule flat({1.0, 2.0, 3.0}, {1.5, 2.5, 3.5});
  const std::vector<double> c2{1.0, 1.0 / 1.1, 1.0 / 1.2};
  const TimeScale s2 = regularizing_gammas(flat, c2);
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(s2.gamma(k) == doctest::Approx(c2[k]));
  CHECK(validate_rates(transform_rates(s2, flat)).catania);

  // Ties are accepted; the transform is then only broad.
  const std::vector<double> ones{1.0, 1.0, 1.0};
  const TimeScale s3 = regularizing_gammas(flat, ones);
  const auto rep = validate_rates(transform_rates(s3, flat));
  CHECK_FALSE(rep.catania);
  CHECK(rep.assu_strict);

  const std::vector<double> bad_start{0.9, 0.5};
  const std::vector<double> rising{1.0, 1.2};
  const std::vector<double> negative{1.0, -0.5};
  CHECK_THROWS_AS(regularizing_gammas(r, bad_start), InvalidParameter);
  CHECK_THROWS_AS(regularizing_gammas(r, rising), InvalidParameter);
  CHECK_THROWS_AS(regularizing_gammas(r, negative), InvalidParameter);
  CHECK_THROWS_AS(regularizing_gammas(RateSchedule({1.0, 2.0}, {2.0, 2.0})),
                  PreconditionError);

  const auto w = default_regularizing_weights(4);
  CHECK(w.front() == 1.0);
  for (std::size_t k = 1; k < w.size(); ++k) CHECK(w[k] < w[k - 1]);
}

TEST_CASE("default regularization always yields strict increments") {
  Engine eng(77);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto len = static_cast<std::size_t>(cpb::uniform_int(eng, 1, 6));
    std::vector<double> pre(len), post(len);
    for (std::size_t k = 0; k < len; ++k) {
      pre[k] = cpb::uniform(eng, 0.05, 5.0);
      post[k] = pre[k] + cpb::uniform(eng, 1e-3, 10.0);
    }
    const RateSchedule r(pre, post);
    CHECK(validate_rates(transform_rates(regularizing_gammas(r), r)).catania);
  }
}

TEST_CASE("pathwise closure of the counting process") {
  Engine eng(9);
  auto m = model({1.0, 2.0, 0.5}, {3.0, 2.5, 4.0}, Exponential{0.4});
  for (int rep = 0; rep < 500; ++rep) {
    const TimeScale s = random_scale(eng, 4);
    const PathSample p = sample_path(m, {6.0}, mix_seed(9, rep));
    const PathSample q = transform_path(s, p);
    for (std::size_t k = 0; k < p.arrival_times.size(); ++k) {
      const double prev = k == 0 ? 0.0 : p.arrival_times[k - 1];
      const double qprev = k == 0 ? 0.0 : q.arrival_times[k - 1];
      const double a = s.gamma(k) * (p.arrival_times[k] - prev);
      CHECK(std::abs((q.arrival_times[k] - qprev) - a) <=
            1e-14 * std::max(1.0, q.horizon));
    }
    if (p.arrival_times.empty()) continue;
    const History h(p.horizon, p.arrival_times);
    for (int i = 0; i < 20; ++i) {
      const double t = cpb::uniform(eng, 0.0, p.horizon);
      const double g = time_map(s, h, t);
      // Stay off knots where rounding could move the count.
      bool near = false;
      for (double a : p.arrival_times) near = near || std::abs(a - t) < 1e-9;
      if (near) continue;
      CHECK(count_at(q.arrival_times, g) == h.count_at(t));
    }
  }
}

TEST_CASE("constant scale leaves the posterior invariant") {
  Engine eng(12);
  std::vector<ContinuousLaw::Family> laws{
      Exponential{0.9}, Weibull{1.6, 1.2}, Weibull{0.7, 2.0},
      TableCdf{{{0.5, 0.1}, {2.0, 0.7}, {5.0, 1.0}}}};
  for (int rep = 0; rep < 200; ++rep) {
    const auto& law = laws[static_cast<std::size_t>(rep) % laws.size()];
    auto m = model({cpb::uniform(eng, 0.2, 2), cpb::uniform(eng, 0.2, 2)},
                   {cpb::uniform(eng, 0.2, 4), cpb::uniform(eng, 0.2, 4)}, law);
    const double gamma = cpb::uniform(eng, 0.1, 10.0);
    const History h = testing::random_history(eng, 0.3, 3.0, 4);
    const ContinuousModel tm = transform_model_constant(gamma, m);
    const History th = transform_history(TimeScale({gamma}), h);
    CHECK(std::abs(posterior_survival(tm, th) - posterior_survival(m, h)) <=
          1e-10);
  }
}

TEST_CASE("intensity re-expressed through the survival posterior") {
  Engine eng(13);
  for (int rep = 0; rep < 300; ++rep) {
    auto m = model({cpb::uniform(eng, 0.2, 2), cpb::uniform(eng, 0.2, 2)},
                   {cpb::uniform(eng, 0.2, 4), cpb::uniform(eng, 0.2, 4)},
                   Weibull{cpb::uniform(eng, 0.5, 3.0), 1.0});
    const History h = testing::random_history(eng, 0.3, 3.0, 4);
    const std::size_t k = h.count();
    const double p = posterior_survival(m, h);
    const double via = m.rates().pre(k) +
                       (m.rates().post(k) - m.rates().pre(k)) * (1.0 - p);
    CHECK(via == doctest::Approx(intensity(m, h).intensity).epsilon(1e-13));
  }
}

TEST_CASE("transformed interarrivals under degenerate laws") {
  constexpr int paths = 100000;
  const TimeScale s({2.0, 0.5, 3.0});
  auto check = [&](const ContinuousModel& m, bool after) {
    const RateSchedule tr = transform_rates(s, m.rates());
    std::vector<std::vector<double>> gaps(3);
    for (int i = 0; i < paths; ++i) {
      const PathSample q =
          transform_path(s, sample_path(m, {kNever, 3}, mix_seed(404, i)));
      double prev = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        gaps[k].push_back(q.arrival_times.at(k) - prev);
        prev = q.arrival_times[k];
      }
    }
    for (std::size_t k = 0; k < 3; ++k) {
      const double rate = tr.rate(after, k);
      const double d = testing::ks_statistic(
          gaps[k], [rate](double x) { return 1.0 - std::exp(-rate * x); });
      CHECK(testing::ks_p_value(d, gaps[k].size()) > 0.01);
    }
  };
  check(model({1.0, 0.7, 2.0}, {3.0, 1.5, 5.0}, PointMass{1e-300}), true);
  check(model({1.0, 0.7, 2.0}, {3.0, 1.5, 5.0}, PointMass{1e9}), false);
}

TEST_CASE("scaling by gamma then by its reciprocal is the identity") {
  Engine eng(1);
  for (int rep = 0; rep < 100; ++rep) {
    const double gamma = cpb::uniform(eng, 0.1, 10.0);
    const History h = testing::random_history(eng, 0.5, 3.0, 4);
    const History back = transform_history(
        TimeScale({1.0 / gamma}), transform_history(TimeScale({gamma}), h));
    CHECK(back.horizon() == doctest::Approx(h.horizon()).epsilon(1e-14));
    for (std::size_t l = 0; l < h.count(); ++l)
      CHECK(back.arrival(l) == doctest::Approx(h.arrival(l)).epsilon(1e-14));
    auto m = model({1.0, 2.0}, {3.0, 2.5}, Weibull{1.3, 0.8});
    const ContinuousModel mm =
        transform_model_constant(1.0 / gamma, transform_model_constant(gamma, m));
    CHECK(mm.rates().pre(1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(mm.law().cdf(0.9) == doctest::Approx(m.law().cdf(0.9)).epsilon(1e-13));
  }
}
