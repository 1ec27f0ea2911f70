#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cpb/continuous.hpp"
#include "cpb/core.hpp"
#include "cpb/discrete.hpp"
#include "cpb/law.hpp"

namespace cpb {

// Sectioned key = value text:
//
//   [rates]       pre = 1, 1   post = 2, 3   tail = repeat|zero
//   [changepoint] family = exponential|weibull|point|table|discrete
//                 rate | shape, scale | at | s, cdf | hazard, tail
//   [history]     arrivals = ..., horizon = ...   (continuous)
//                 slots = ..., n = ...            (discrete)
//   [run]         seed, tolerance, instances, M, scenario, horizon,
//                 max_arrivals
//
// Lists take commas or blanks; '#' and ';' start comments. A discrete
// family makes the rates per-slot probabilities.
struct ModelConfig {
  std::optional<RateSchedule> rates;
  std::optional<ContinuousLaw> law;
  std::optional<DiscreteHazard> hazard;
  std::optional<History> history;
  std::optional<DiscreteHistory> discrete_history;

  std::uint64_t seed = 1;
  std::optional<double> tolerance;
  std::size_t instances = 1000;
  double M = 100.0;
  std::string scenario = "config";
  std::optional<double> sim_horizon;
  std::optional<std::size_t> max_arrivals;

  bool is_discrete() const { return hazard.has_value(); }
  // Throw PreconditionError naming the missing section.
  ContinuousModel continuous_model() const;
  DiscreteModel discrete_model() const;
};

ModelConfig parse_config(std::istream& in);
ModelConfig parse_config_string(const std::string& text);
// Throws IoError when the file cannot be read.
ModelConfig load_config(const std::string& path);

// Inverse of parse_config for the fields that are set.
std::string format_config(const ModelConfig& cfg);

// 17 significant digits, so values survive a text round trip.
std::string format_number(double x);
std::string format_list(std::span<const double> xs);

} // namespace cpb
