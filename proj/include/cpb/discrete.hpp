#pragma once

#include <cstdint>
#include <vector>

#include "cpb/core.hpp"
#include "cpb/law.hpp"

namespace cpb {

// Discrete-time CPB model: per-slot arrival probabilities before/after the
// change slot, and a hazard sequence for the change slot itself.
//
// Slot r carries the post-change probability iff r > U, so U = j means the
// regime switches after slot j.
class DiscreteModel {
public:
  DiscreteModel(RateSchedule rates, DiscreteHazard law);

  const RateSchedule& rates() const { return rates_; }
  const DiscreteHazard& law() const { return law_; }

private:
  RateSchedule rates_;
  DiscreteHazard law_;
};

// Joint weights g_j = P(U=j, history) for j = 1..n, in log space, plus the
// closed-form mass of all j > n.
struct JointWeights {
  std::vector<double> log_weight; // index j-1
  double log_tail = 0.0;          // log sum_{j>n} g_j = log P(U>n) + log L0
};

JointWeights joint_weights(const DiscreteModel& model,
                           const DiscreteHistory& h);

// g_j for any j >= 1 (j > n allowed).
double joint_weight(const DiscreteModel& model, const DiscreteHistory& h,
                    long j);

// P(U > n | h).
double posterior_survival(const DiscreteModel& model,
                          const DiscreteHistory& h);

// P(T_{k+1} = n+1 | h), returned with both posterior masses.
PosteriorResult step_intensity(const DiscreteModel& model,
                               const DiscreteHistory& h);

struct ShiftRatios {
  double alpha;
  double gamma;
  double delta;
};

// Ratios by which shifting arrival l one slot later rescales the partial
// sums of joint weights.
ShiftRatios shift_ratios(const RateSchedule& rates, std::size_t l);

struct ShiftIdentityReport {
  // Partial sums for h: j < n_l, n_l < j <= n, j > n, and j = n_l.
  double a = 0, b = 0, c = 0, g = 0;
  // Same sums for the shifted history.
  double a_hat = 0, b_hat = 0, c_hat = 0, g_hat = 0;
  ShiftRatios expected{};
  ShiftRatios measured{}; // alpha from A, gamma from C, delta from g
  double measured_gamma_b = 0; // gamma measured from B (NaN if B empty)
  double max_rel_error = 0;
  bool holds = false;
};

ShiftIdentityReport verify_shift_identities(const DiscreteModel& model,
                                            const DiscreteHistory& h,
                                            std::size_t l,
                                            double rel_tol = 1e-12);

inline constexpr long kBruteForceMaxSlots = 16;

// P(U > n | h) by enumerating every arrival pattern on slots 1..n together
// with every change slot; independent of the product-form weights.
double brute_force_posterior(const DiscreteModel& model,
                             const DiscreteHistory& h);

// P(arrival at slot n+1 | h) by the same enumeration extended one slot.
double brute_force_next_arrival(const DiscreteModel& model,
                                const DiscreteHistory& h);

struct DiscretePath {
  long change_slot;
  std::vector<long> arrival_slots;
  std::uint64_t seed;
};

DiscretePath sample_discrete_path(const DiscreteModel& model, long horizon,
                                  std::uint64_t seed);

} // namespace cpb
