#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cpb/continuous.hpp"
#include "cpb/core.hpp"
#include "cpb/discrete.hpp"
#include "cpb/law.hpp"
#include "cpb/rng.hpp"

namespace cpb {

enum class SweepEngine {
  discrete,   // product-form weights
  oracle,     // brute-force enumeration, n <= 15
  continuous  // closed forms / quadrature
};

// Which rate condition the sampled schedules satisfy. For the discrete
// engines the schedules always satisfy plo and ser and this is ignored.
enum class RateClass {
  assu_broad, // post(k) >= pre(k)
  catania     // post(k) - pre(k) strictly increasing and positive
};

struct SweepConfig {
  SweepEngine engine = SweepEngine::discrete;
  RateClass rate_class = RateClass::assu_broad;
  std::size_t instances = 10000;
  std::uint64_t seed = 1;
  double tolerance = 1e-12;

  std::size_t schedule_length = 3;
  double rate_lo = 0.1; // per-time rates; per-slot rates use their own range
  double rate_hi = 3.0;
  double horizon_lo = 0.5;
  double horizon_hi = 4.0;
  long max_slots = 10;
  std::size_t max_arrivals = 5;

  // When set, every instance uses this model and only the histories vary.
  std::optional<ContinuousModel> fixed_continuous;
  std::optional<DiscreteModel> fixed_discrete;

  // 0 means the THREADS environment variable, else hardware concurrency.
  unsigned threads = 0;
};

using AnyLaw = std::variant<ContinuousLaw, DiscreteHazard>;
using HistoryPair = std::variant<std::pair<History, History>,
                                 std::pair<DiscreteHistory, DiscreteHistory>>;

// Everything needed to recompute a reported comparison.
struct Witness {
  std::string kind; // theorem1, added_arrival, interval
  SweepEngine engine = SweepEngine::continuous;
  RateSchedule rates;
  AnyLaw law;
  HistoryPair histories; // (h', h'')
  PosteriorResult first;  // at h'
  PosteriorResult second; // at h''
  std::string relation;   // observed inequality, in words
  std::size_t instance = 0;
};

std::pair<PosteriorResult, PosteriorResult> reevaluate(const Witness& w);

struct SweepReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  std::size_t resampled = 0; // schedules redrawn by the sampler
  // Margins are P(U>t|h') - P(U>t|h''); a violation is a margin < -tol.
  double min_margin = 0.0;
  double max_margin = 0.0;
  std::vector<Witness> witnesses; // violations in instance order, capped
};

inline constexpr std::size_t kMaxReportedWitnesses = 20;

SweepReport theorem1_sweep(const SweepConfig& cfg);

// Random generators shared by the sweeps and the tests.
RateSchedule sample_plo_ser_rates(Engine& eng, std::size_t length);
RateSchedule sample_time_rates(Engine& eng, RateClass cls, std::size_t length,
                               double lo, double hi);
ContinuousLaw sample_law(Engine& eng);
DiscreteHazard sample_hazard(Engine& eng);
// h'' >= h' by a random chain of admissible shifts.
DiscreteHistory random_shift_chain(Engine& eng, const DiscreteHistory& h);
// h'' >= h' by moving random arrivals later inside their gaps.
History random_forward_move(Engine& eng, const History& h);

struct SearchGrid {
  double t_step = 0.05;
  double t_max = 5.0;
  int refine = 10;
  double margin = 1e-6;
};

// Searches (t, t1) for mu_t({T1=t1, T2>t}) < mu_t(no arrival on [0,t]).
// Throws SearchFailure when no cell beats the margin.
Witness search_added_arrival(const ContinuousModel& model,
                             const SearchGrid& grid = {});

// Exponential(1) change point, pre = (1,1), post = (2,M).
ContinuousModel added_arrival_model(double M);
Witness counterexample_added_arrival(double M, const SearchGrid& grid = {});

// Two no-arrival comparisons over different windows t' < t'': one with
// P(U>t'|h') < P(U>t''|h''), one with the strict reverse.
std::pair<Witness, Witness> interval_mismatch_examples(
    const SearchGrid& grid = {});

struct Remark5Result {
  double theta = 0.0;
  double theta_prime = 0.0;
  bool preconditions = false; // alpha/gamma >= 1 and delta/gamma >= 1
  bool holds = false;         // theta >= theta' up to rounding
};

Remark5Result remark5_check(double A, double B, double C, double D,
                            double alpha, double gamma, double delta);

struct Remark5SweepReport {
  std::size_t draws = 0;
  std::size_t failures = 0;
  double min_gap = 0.0; // smallest theta - theta'
};

Remark5SweepReport remark5_sweep(std::size_t draws, std::uint64_t seed);

struct IdentitySweepReport {
  std::size_t shifts = 0;
  std::size_t failures = 0;
  double max_rel_error = 0.0;
  std::vector<ShiftIdentityReport> failed;
};

IdentitySweepReport shift_identity_sweep(std::size_t shifts,
                                         std::uint64_t seed,
                                         double rel_tol = 1e-12);

struct BridgeRow {
  long m = 0;
  bool admissible = false;
  bool ser = false;
  double min_ratio = 0.0; // smallest ser ratio over k = 1..bound
};

struct BridgeReport {
  std::vector<BridgeRow> rows;
  std::optional<long> least_m; // least listed m from which ser holds onward
  bool broad_equality = false; // some consecutive differences tie
};

BridgeReport catania_bridge_check(const RateSchedule& rates,
                                  std::span<const long> m_list);

struct ConvergenceInstance {
  ContinuousModel model;
  History history;
  std::vector<ConvergenceRow> rows;
  std::vector<double> ratios; // error(m) / error(2m) for consecutive pairs
};

// Random smooth instances with arrivals on a 1/64 grid so that every m that
// is a multiple of 64 snaps them exactly.
std::vector<ConvergenceInstance> convergence_ratio_study(
    std::size_t instances, std::uint64_t seed, std::span<const long> m_list);

std::string engine_name(SweepEngine e);

} // namespace cpb
