#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cpb/core.hpp"
#include "cpb/discrete.hpp"
#include "cpb/law.hpp"

namespace cpb {

// CPB(G, pre, post): conditionally on U the counting process is a pure
// birth process with rates pre(k) before U and post(k) from U on.
class ContinuousModel {
public:
  ContinuousModel(RateSchedule rates, ContinuousLaw law);

  const RateSchedule& rates() const { return rates_; }
  const ContinuousLaw& law() const { return law_; }

private:
  RateSchedule rates_;
  ContinuousLaw law_;
};

inline constexpr double kNever = std::numeric_limits<double>::infinity();

// Density of the arrivals on [0, horizon] jointly with T_{k+1} > horizon,
// given U = u. Arrival j uses the post-change rate iff t_j >= u.
double log_likelihood_given_changepoint(const ContinuousModel& model,
                                        const History& h, double u);
double likelihood_given_changepoint(const ContinuousModel& model,
                                    const History& h, double u);

// The two unnormalized masses of the posterior, in log space:
//   change  = int_0^t L(h|u) dG(u)
//   silence = (1 - G(t)) L(h|inf)
struct PosteriorTerms {
  double log_change = 0.0;
  double log_no_change = 0.0;

  double log_total() const;
  double prob_before() const;
  double prob_after() const;
};

inline constexpr double kQuadratureRelTol = 1e-10;

PosteriorTerms posterior_terms(const ContinuousModel& model, const History& h);

// P(U > t | h_t).
double posterior_survival(const ContinuousModel& model, const History& h);

PosteriorResult intensity(const ContinuousModel& model, const History& h);

struct SimulationLimit {
  double horizon = kNever;
  std::size_t max_arrivals = std::numeric_limits<std::size_t>::max();
};

struct PathSample {
  double change_time = 0.0;
  std::vector<double> arrival_times;
  // End of the simulated window; arrivals after it were not drawn.
  double horizon = kNever;
  // Set when the change time is only known to exceed the window end (after a
  // path-dependent time map).
  bool change_censored = false;
  std::uint64_t seed = 0;
};

PathSample sample_path(const ContinuousModel& model, SimulationLimit limit,
                       std::uint64_t seed);

// Per-slot discretization with m slots per unit time. Hazard values are
// materialized for slots 1..ceil(horizon*m)+1; later slots repeat the last.
DiscreteModel discretize(const ContinuousModel& model, long m, double horizon);

// Snaps arrivals to floor(t_i m); empty when two arrivals collide or one
// lands in slot 0.
std::optional<DiscreteHistory> snap_history(const History& h, long m);

struct ConvergenceRow {
  long m = 0;
  bool admissible = false;
  double discrete_posterior = 0.0;
  double continuous_posterior = 0.0;
  double error = 0.0;
};

std::vector<ConvergenceRow> convergence_study(const ContinuousModel& model,
                                              const History& h,
                                              std::span<const long> m_list);

} // namespace cpb
