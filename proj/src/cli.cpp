#include "cpb/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "cpb/timescale.hpp"

namespace cpb {

namespace {

// Long-format report: one quantity per row.
class Report {
public:
  Report(std::ostream& out, std::string scenario, std::string engine)
      : out_(out), scenario_(std::move(scenario)), engine_(std::move(engine)) {
    out_ << "scenario,engine,quantity,value,status\n";
  }
  void row(const std::string& quantity, double value, const char* status) {
    out_ << scenario_ << ',' << engine_ << ',' << quantity << ','
         << format_number(value) << ',' << status << '\n';
  }
  void row(const std::string& quantity, double value, bool pass) {
    row(quantity, value, pass ? "pass" : "fail");
    ok_ = ok_ && pass;
  }
  bool ok() const { return ok_; }

private:
  std::ostream& out_;
  std::string scenario_;
  std::string engine_;
  bool ok_ = true;
};

// Output stream for --out, or the given stream when no file is named.
class Sink {
public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw IoError("cannot write '" + path + "'");
    stream_ = file_.get();
  }
  std::ostream& get() { return *stream_; }
  void close() {
    if (!file_) return;
    file_->flush();
    if (!*file_) throw IoError("write failed");
  }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

SweepEngine parse_engine(const std::string& s) {
  if (s == "continuous") return SweepEngine::continuous;
  if (s == "discrete") return SweepEngine::discrete;
  if (s == "oracle") return SweepEngine::oracle;
  throw ParseError("unknown engine '" + s + "'");
}

SweepEngine default_engine(const ModelConfig& cfg) {
  return cfg.is_discrete() ? SweepEngine::discrete : SweepEngine::continuous;
}

// Discrete model and history for the discrete engines: taken as is from a
// discrete config, or by discretizing a continuous one at m.
std::pair<DiscreteModel, DiscreteHistory>
discrete_inputs(const ModelConfig& cfg, std::optional<long> m) {
  if (cfg.is_discrete()) {
    if (!cfg.discrete_history)
      throw PreconditionError("config has no [history] section");
    return {cfg.discrete_model(), *cfg.discrete_history};
  }
  if (!m) throw PreconditionError("a continuous config needs --m here");
  if (!cfg.history) throw PreconditionError("config has no [history] section");
  const auto snapped = snap_history(*cfg.history, *m);
  if (!snapped)
    throw PreconditionError("history is not admissible at m=" +
                            std::to_string(*m) +
                            " (arrivals share a slot or fall in slot 0)");
  return {discretize(cfg.continuous_model(), *m, cfg.history->horizon()),
          *snapped};
}

PosteriorResult evaluate(SweepEngine engine, const ModelConfig& cfg,
                         std::optional<long> m) {
  if (engine == SweepEngine::continuous) {
    if (!cfg.history) throw PreconditionError("config has no [history] section");
    return intensity(cfg.continuous_model(), *cfg.history);
  }
  const auto [model, h] = discrete_inputs(cfg, m);
  if (engine == SweepEngine::oracle) {
    const double p = brute_force_posterior(model, h);
    return {1.0 - p, p, brute_force_next_arrival(model, h)};
  }
  return step_intensity(model, h);
}

std::vector<double> parse_number_list(const std::string& text) {
  std::string t = text;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::vector<double> xs;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw ParseError("bad number '" + tok + "'");
    xs.push_back(x);
  }
  if (xs.empty()) throw ParseError("empty list");
  return xs;
}

} // namespace

std::string format_witness(const Witness& w, const std::string& scenario) {
  ModelConfig base;
  base.scenario = scenario;
  base.rates = w.rates;
  if (const auto* law = std::get_if<ContinuousLaw>(&w.law)) base.law = *law;
  else base.hazard = std::get<DiscreteHazard>(w.law);

  ModelConfig first = base, second = base;
  if (const auto* p = std::get_if<std::pair<History, History>>(&w.histories)) {
    first.history = p->first;
    second.history = p->second;
  } else {
    const auto& q = std::get<std::pair<DiscreteHistory, DiscreteHistory>>(w.histories);
    first.discrete_history = q.first;
    second.discrete_history = q.second;
  }
  std::ostringstream out;
  out << "# witness " << w.kind << " (" << engine_name(w.engine)
      << "), instance " << w.instance << ": " << w.relation << "\n"
      << "# h'\n" << format_config(first) << "# h''\n" << format_config(second)
      << "# which,prob_before,prob_after,intensity\n"
      << "# h'," << format_number(w.first.prob_before) << ','
      << format_number(w.first.prob_after) << ','
      << format_number(w.first.intensity) << "\n"
      << "# h''," << format_number(w.second.prob_before) << ','
      << format_number(w.second.prob_after) << ','
      << format_number(w.second.intensity) << "\n";
  return out.str();
}

namespace {

int cmd_posterior(const ModelConfig& cfg, const std::string& engine_flag,
                  std::optional<long> m, std::ostream& out) {
  const SweepEngine engine =
      engine_flag.empty() ? default_engine(cfg) : parse_engine(engine_flag);
  const PosteriorResult r = evaluate(engine, cfg, m);
  out << "scenario,engine,prob_before,prob_after,intensity\n"
      << cfg.scenario << ',' << engine_name(engine) << ','
      << format_number(r.prob_before) << ',' << format_number(r.prob_after)
      << ',' << format_number(r.intensity) << '\n';
  return kExitOk;
}

int cmd_simulate(const ModelConfig& cfg, std::size_t paths,
                 std::optional<std::uint64_t> seed_flag,
                 const std::string& out_path, std::ostream& out) {
  const std::uint64_t seed = seed_flag.value_or(cfg.seed);
  // Validate and draw before opening the file, so failures leave no output.
  std::ostringstream body;
  body << "path_id,change_time,arrival_index,arrival_time\n";
  if (cfg.is_discrete()) {
    long n = 0;
    if (cfg.sim_horizon) n = static_cast<long>(std::floor(*cfg.sim_horizon));
    else if (cfg.discrete_history) n = cfg.discrete_history->horizon();
    if (n < 1) throw PreconditionError("discrete simulation needs a horizon");
    const DiscreteModel model = cfg.discrete_model();
    for (std::size_t i = 0; i < paths; ++i) {
      const DiscretePath p = sample_discrete_path(model, n, mix_seed(seed, i));
      if (p.arrival_slots.empty()) body << i << ',' << p.change_slot << ",,\n";
      for (std::size_t k = 0; k < p.arrival_slots.size(); ++k)
        body << i << ',' << p.change_slot << ',' << k + 1 << ','
             << p.arrival_slots[k] << '\n';
    }
  } else {
    const ContinuousModel model = cfg.continuous_model();
    SimulationLimit limit;
    if (cfg.sim_horizon) limit.horizon = *cfg.sim_horizon;
    else if (cfg.history) limit.horizon = cfg.history->horizon();
    if (cfg.max_arrivals) limit.max_arrivals = *cfg.max_arrivals;
    if (!std::isfinite(limit.horizon) &&
        limit.max_arrivals == std::numeric_limits<std::size_t>::max() &&
        model.rates().tail() == TailMode::repeat_last)
      throw PreconditionError(
          "a horizon or arrival cap is needed for schedules that never halt");
    for (std::size_t i = 0; i < paths; ++i) {
      const PathSample p = sample_path(model, limit, mix_seed(seed, i));
      const std::string u = format_number(p.change_time);
      if (p.arrival_times.empty()) body << i << ',' << u << ",,\n";
      for (std::size_t k = 0; k < p.arrival_times.size(); ++k)
        body << i << ',' << u << ',' << k + 1 << ','
             << format_number(p.arrival_times[k]) << '\n';
    }
  }
  Sink sink(out_path, out);
  sink.get() << body.str();
  sink.close();
  return kExitOk;
}

int suite_theorem1(const ModelConfig& cfg, const std::string& engine_flag,
                   const std::string& rate_class, std::size_t instances,
                   std::uint64_t seed, std::ostream& out, std::ostream& err) {
  SweepConfig sc;
  sc.engine = engine_flag.empty() ? default_engine(cfg) : parse_engine(engine_flag);
  sc.instances = instances;
  sc.seed = seed;
  sc.tolerance = cfg.tolerance.value_or(
      sc.engine == SweepEngine::continuous ? 1e-9 : 1e-12);
  if (rate_class == "catania") sc.rate_class = RateClass::catania;
  else if (rate_class != "assu_broad")
    throw ParseError("unknown rate class '" + rate_class + "'");
  if (cfg.rates) {
    if (sc.engine == SweepEngine::continuous) {
      sc.fixed_continuous = cfg.continuous_model();
    } else {
      sc.fixed_discrete = cfg.discrete_model();
    }
  }
  const SweepReport rep = theorem1_sweep(sc);
  Report r(out, cfg.scenario, engine_name(sc.engine));
  r.row("pairs", static_cast<double>(rep.pairs), "info");
  r.row("violations", static_cast<double>(rep.violations), rep.violations == 0);
  r.row("min_margin", rep.min_margin, "info");
  r.row("max_margin", rep.max_margin, "info");
  r.row("tolerance", sc.tolerance, "info");
  for (const Witness& w : rep.witnesses) err << format_witness(w, cfg.scenario);
  return r.ok() ? kExitOk : kExitSuiteFailure;
}

int suite_counterexample(const ModelConfig& cfg, std::optional<double> M_flag,
                         std::ostream& out, std::ostream& err) {
  const double M = M_flag.value_or(cfg.M);
  std::optional<Witness> found;
  try {
    found = counterexample_added_arrival(M);
  } catch (const SearchFailure& e) {
    Report r(out, cfg.scenario, "continuous");
    r.row("M", M, "info");
    r.row("witness_found", 0.0, false);
    err << "counterexample search failed for M=" << format_number(M) << ": "
        << e.what() << "\n";
    return kExitSuiteFailure;
  }
  const Witness& w = *found;
  err << format_witness(w, cfg.scenario);
  const auto& [a, b] = std::get<std::pair<History, History>>(w.histories);
  Report r(out, cfg.scenario, "continuous");
  r.row("M", M, "info");
  r.row("witness_found", 1.0, true);
  r.row("t", a.horizon(), "info");
  r.row("t1", b.arrival(0), "info");
  r.row("mu_no_arrival", w.first.intensity, "info");
  r.row("mu_one_arrival", w.second.intensity, "info");
  r.row("margin", w.first.intensity - w.second.intensity, true);
  // Different arrival counts: the domination order does not relate them.
  r.row("counts_differ", 1.0, a.count() != b.count());
  return r.ok() ? kExitOk : kExitSuiteFailure;
}

int suite_identities(const ModelConfig& cfg, std::size_t instances,
                     std::uint64_t seed, std::ostream& out, std::ostream& err) {
  Report r(out, cfg.scenario, "discrete");
  if (cfg.is_discrete() && cfg.discrete_history) {
    const DiscreteModel model = cfg.discrete_model();
    const DiscreteHistory& h = *cfg.discrete_history;
    for (std::size_t l = 1; l <= h.count(); ++l) {
      if (shift_operator(h, l) == h) continue;
      const ShiftIdentityReport s = verify_shift_identities(model, h, l);
      const std::string p = "shift" + std::to_string(l) + "_";
      r.row(p + "alpha_expected", s.expected.alpha, "info");
      if (!std::isnan(s.measured.alpha)) r.row(p + "alpha_measured", s.measured.alpha, "info");
      r.row(p + "gamma_expected", s.expected.gamma, "info");
      r.row(p + "gamma_measured", s.measured.gamma, "info");
      r.row(p + "delta_expected", s.expected.delta, "info");
      r.row(p + "delta_measured", s.measured.delta, "info");
      r.row(p + "max_rel_error", s.max_rel_error, s.holds);
    }
  }
  const IdentitySweepReport id = shift_identity_sweep(instances, seed);
  r.row("random_shifts", static_cast<double>(id.shifts), "info");
  r.row("shift_failures", static_cast<double>(id.failures), id.failures == 0);
  r.row("shift_max_rel_error", id.max_rel_error, "info");
  const Remark5SweepReport r5 = remark5_sweep(1000000, seed);
  r.row("remark5_draws", static_cast<double>(r5.draws), "info");
  r.row("remark5_failures", static_cast<double>(r5.failures), r5.failures == 0);
  r.row("remark5_min_gap", r5.min_gap, "info");
  if (!r.ok()) err << "shift identity or ratio inequality failures\n";
  return r.ok() ? kExitOk : kExitSuiteFailure;
}

std::vector<long> m_list_or_default(const std::vector<long>& ms) {
  return ms.empty() ? std::vector<long>{64, 128, 256, 512} : ms;
}

int suite_convergence(const ModelConfig& cfg, const std::vector<long>& ms_flag,
                      std::ostream& out, std::ostream& err) {
  if (!cfg.history) throw PreconditionError("config has no [history] section");
  const auto ms = m_list_or_default(ms_flag);
  const auto rows = convergence_study(cfg.continuous_model(), *cfg.history, ms);
  Report r(out, cfg.scenario, "discrete-vs-continuous");
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& row : rows) {
    const std::string q = "error_m" + std::to_string(row.m);
    if (!row.admissible) {
      r.row(q, std::nan(""), "skipped");
      continue;
    }
    r.row(q, row.error, row.error <= prev + 1e-15);
    prev = row.error;
  }
  if (!r.ok()) err << "discretization error did not decrease with m\n";
  return r.ok() ? kExitOk : kExitSuiteFailure;
}

int suite_timescale(const ModelConfig& cfg, const std::vector<double>& gammas_flag,
                    std::size_t instances, std::uint64_t seed, std::ostream& out,
                    std::ostream& err) {
  const ContinuousModel model = cfg.continuous_model();
  const ConditionReport cond = validate_rates(model.rates());
  const TimeScale scale = !gammas_flag.empty() ? TimeScale(gammas_flag)
                          : cond.assu_strict   ? regularizing_gammas(model.rates())
                                               : TimeScale({1.0});
  double horizon = 5.0;
  if (cfg.sim_horizon) horizon = *cfg.sim_horizon;
  else if (cfg.history) horizon = cfg.history->horizon();

  Report r(out, cfg.scenario, "continuous");
  double worst = 0.0;
  bool counts_ok = true;
  for (std::size_t i = 0; i < instances; ++i) {
    const PathSample p = sample_path(model, {horizon}, mix_seed(seed, i));
    const PathSample q = transform_path(scale, p);
    double prev = 0.0, qprev = 0.0;
    for (std::size_t k = 0; k < p.arrival_times.size(); ++k) {
      const double expect = scale.gamma(k) * (p.arrival_times[k] - prev);
      worst = std::max(worst, std::abs((q.arrival_times[k] - qprev) - expect) /
                                  std::max(1.0, q.horizon));
      prev = p.arrival_times[k];
      qprev = q.arrival_times[k];
    }
    // The transformed window holds the same arrivals.
    counts_ok = counts_ok && q.arrival_times.size() == p.arrival_times.size() &&
                (q.arrival_times.empty() || q.arrival_times.back() <= q.horizon);
  }
  r.row("paths", static_cast<double>(instances), "info");
  r.row("interarrival_scaling_error", worst, worst <= 1e-14);
  r.row("count_closure", counts_ok ? 1.0 : 0.0, counts_ok);
  if (cfg.history) {
    const double g = scale.gamma(0);
    const double a = posterior_survival(model, *cfg.history);
    const double b =
        posterior_survival(transform_model_constant(g, model),
                           transform_history(TimeScale({g}), *cfg.history));
    r.row("constant_scale_posterior_gap", std::abs(a - b), std::abs(a - b) <= 1e-10);
  }
  if (cond.assu_strict) {
    const TimeScale reg = regularizing_gammas(model.rates());
    const bool cat = validate_rates(transform_rates(reg, model.rates())).catania;
    r.row("regularized_catania", cat ? 1.0 : 0.0, cat);
  }
  if (!r.ok()) err << "time-scale checks failed\n";
  return r.ok() ? kExitOk : kExitSuiteFailure;
}

int cmd_transform(const ModelConfig& cfg, const std::vector<double>& gammas_flag,
                  bool regularize, const std::string& out_path, std::ostream& out) {
  if (regularize == !gammas_flag.empty())
    throw ParseError("give exactly one of --gammas and --regularize");
  if (cfg.is_discrete())
    throw PreconditionError("time-scale transforms apply to continuous configs");
  if (!cfg.rates) throw PreconditionError("config has no [rates] section");
  const TimeScale scale =
      regularize ? regularizing_gammas(*cfg.rates) : TimeScale(gammas_flag);

  ModelConfig next = cfg;
  next.rates = transform_rates(scale, *cfg.rates);
  // Only a constant scale has a fixed law for the new change point.
  if (cfg.law && scale.is_constant()) next.law = cfg.law->scaled(scale.gamma(0));
  else next.law.reset();
  if (cfg.history) next.history = transform_history(scale, *cfg.history);
  next.sim_horizon.reset();

  std::ostringstream mapping;
  mapping << "index,gamma,arrival_time,mapped_time\n";
  const std::size_t arrivals = cfg.history ? cfg.history->count() : 0;
  const std::size_t rows = std::max({scale.size(), next.rates->size(), arrivals + 1});
  for (std::size_t k = 0; k < rows; ++k) {
    mapping << k << ',' << format_number(scale.gamma(k)) << ',';
    if (k >= 1 && k <= arrivals)
      mapping << format_number(cfg.history->arrival(k - 1)) << ','
              << format_number(next.history->arrival(k - 1));
    else mapping << ',';
    mapping << '\n';
  }
  if (cfg.history)
    mapping << "horizon,," << format_number(cfg.history->horizon()) << ','
            << format_number(next.history->horizon()) << '\n';

  if (!out_path.empty()) {
    Sink sink(out_path, out);
    sink.get() << format_config(next);
    sink.close();
  }
  out << mapping.str();
  return kExitOk;
}

int cmd_converge(const ModelConfig& cfg, const std::vector<long>& ms_flag,
                 std::ostream& out) {
  if (!cfg.history) throw PreconditionError("config has no [history] section");
  const auto ms = m_list_or_default(ms_flag);
  out << "m,admissible,discrete_posterior,continuous_posterior,error\n";
  for (const auto& row :
       convergence_study(cfg.continuous_model(), *cfg.history, ms)) {
    out << row.m << ',' << (row.admissible ? 1 : 0) << ',';
    if (row.admissible)
      out << format_number(row.discrete_posterior) << ','
          << format_number(row.continuous_posterior) << ','
          << format_number(row.error);
    else
      out << ',' << format_number(row.continuous_posterior) << ',';
    out << '\n';
  }
  return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Posterior, simulation and property checks for change-point "
               "pure birth processes"};
  app.name("cpb");
  app.require_subcommand(1);

  std::string config_path, engine, out_path, suite, rate_class = "assu_broad",
                                                      gammas_text, mlist_text;
  std::optional<long> m;
  std::size_t paths = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> instances;
  std::optional<double> M;
  bool regularize = false;

  auto* posterior = app.add_subcommand("posterior", "posterior and intensity");
  posterior->add_option("config", config_path)->required();
  posterior->add_option("--engine", engine, "continuous|discrete|oracle");
  posterior->add_option("--m", m, "discretization level");

  auto* simulate = app.add_subcommand("simulate", "sample paths as CSV");
  simulate->add_option("config", config_path)->required();
  simulate->add_option("--paths", paths);
  simulate->add_option("--seed", seed);
  simulate->add_option("--out", out_path);

  auto* verify = app.add_subcommand("verify", "run a property suite");
  verify->add_option("config", config_path)->required();
  verify->add_option("--suite", suite)
      ->required()
      ->check(CLI::IsMember(
          {"theorem1", "counterexample", "identities", "convergence", "timescale"}));
  verify->add_option("--engine", engine);
  verify->add_option("--rate-class", rate_class, "assu_broad|catania");
  verify->add_option("--instances", instances);
  verify->add_option("--seed", seed);
  verify->add_option("--M", M);
  verify->add_option("--m-list", mlist_text);
  verify->add_option("--gammas", gammas_text);

  auto* transform = app.add_subcommand("transform", "apply a time scale");
  transform->add_option("config", config_path)->required();
  transform->add_option("--gammas", gammas_text);
  transform->add_flag("--regularize", regularize);
  transform->add_option("--out", out_path);

  auto* converge = app.add_subcommand("converge", "discretization study");
  converge->add_option("config", config_path)->required();
  converge->add_option("--m-list", mlist_text);

  std::vector<std::string> argv_store{"cpb"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParse;
  }

  try {
    const ModelConfig cfg = load_config(config_path);
    std::vector<double> gammas;
    if (!gammas_text.empty()) gammas = parse_number_list(gammas_text);
    std::vector<long> ms;
    if (!mlist_text.empty())
      for (double x : parse_number_list(mlist_text)) {
        if (x != std::floor(x) || x < 1) throw ParseError("--m-list needs positive integers");
        ms.push_back(static_cast<long>(x));
      }
    if (m && *m < 1) throw ParseError("--m must be >= 1");

    if (*posterior) return cmd_posterior(cfg, engine, m, out);
    if (*simulate) return cmd_simulate(cfg, paths, seed, out_path, out);
    if (*transform) return cmd_transform(cfg, gammas, regularize, out_path, out);
    if (*converge) return cmd_converge(cfg, ms, out);

    const std::uint64_t s = seed.value_or(cfg.seed);
    const std::size_t n = instances.value_or(cfg.instances);
    if (suite == "theorem1")
      return suite_theorem1(cfg, engine, rate_class, n, s, out, err);
    if (suite == "counterexample") return suite_counterexample(cfg, M, out, err);
    if (suite == "identities") return suite_identities(cfg, n, s, out, err);
    if (suite == "convergence") return suite_convergence(cfg, ms, out, err);
    return suite_timescale(cfg, gammas, n, s, out, err);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const SearchFailure&) {
    return kExitSuiteFailure;
  } catch (const CapacityError& e) {
    err << "capacity: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const Error& e) {
    err << "precondition: " << e.what() << "\n";
    return kExitPrecondition;
  }
}

} // namespace cpb
