#include "cpb/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <variant>
#include <sstream>

namespace cpb {

namespace {

struct Entry {
  std::string value;
  std::size_t line;
};

using Section = std::map<std::string, Entry>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& text, std::size_t line,
                 const std::string& key) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ParseError("'" + key + "': not a number: '" + text + "'", line);
  return v;
}

long to_long(const std::string& text, std::size_t line, const std::string& key) {
  long v = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError("'" + key + "': not an integer: '" + text + "'", line);
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

class Reader {
public:
  explicit Reader(std::map<std::string, Section> sections)
      : sections_(std::move(sections)) {}

  bool has_section(const std::string& s) const {
    return sections_.count(s) > 0;
  }

  const Entry* find(const std::string& sec, const std::string& key) {
    auto it = sections_.find(sec);
    if (it == sections_.end()) return nullptr;
    auto jt = it->second.find(key);
    if (jt == it->second.end()) return nullptr;
    used_.insert(sec + "." + key);
    return &jt->second;
  }

  const Entry& need(const std::string& sec, const std::string& key) {
    const Entry* e = find(sec, key);
    if (!e) {
      const auto it = sections_.find(sec);
      const std::size_t line =
          it == sections_.end() || it->second.empty()
              ? 0
              : it->second.begin()->second.line;
      throw ParseError("[" + sec + "] needs '" + key + "'", line);
    }
    return *e;
  }

  double number(const std::string& sec, const std::string& key) {
    const Entry& e = need(sec, key);
    return to_double(e.value, e.line, key);
  }

  std::vector<double> list(const std::string& sec, const std::string& key) {
    const Entry& e = need(sec, key);
    std::vector<double> out;
    for (const auto& t : split_list(e.value)) out.push_back(to_double(t, e.line, key));
    return out;
  }

  std::vector<long> long_list(const std::string& sec, const std::string& key) {
    const Entry& e = need(sec, key);
    std::vector<long> out;
    for (const auto& t : split_list(e.value)) out.push_back(to_long(t, e.line, key));
    return out;
  }

  // Reports keys nobody asked for.
  void reject_unused() const {
    for (const auto& [sec, entries] : sections_)
      for (const auto& [key, e] : entries)
        if (!used_.count(sec + "." + key))
          throw ParseError("unknown key '" + key + "' in [" + sec + "]", e.line);
  }

private:
  std::map<std::string, Section> sections_;
  std::set<std::string> used_;
};

// Runs fn, re-throwing library validation errors at the given line.
template <class Fn>
auto at_line(std::size_t line, Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), line);
  }
}

} // namespace

ContinuousModel ModelConfig::continuous_model() const {
  if (!rates) throw PreconditionError("config has no [rates] section");
  if (!law)
    throw PreconditionError("config needs a continuous [changepoint] family");
  return ContinuousModel(*rates, *law);
}

DiscreteModel ModelConfig::discrete_model() const {
  if (!rates) throw PreconditionError("config has no [rates] section");
  if (!hazard)
    throw PreconditionError("config needs family = discrete in [changepoint]");
  return DiscreteModel(*rates, *hazard);
}

ModelConfig parse_config(std::istream& in) {
  std::map<std::string, Section> sections;
  std::string current;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto cut = raw.find_first_of("#;");
    std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", lineno);
      current = trim(line.substr(1, line.size() - 2));
      static const std::set<std::string> known{"rates", "changepoint",
                                               "history", "run"};
      if (!known.count(current))
        throw ParseError("unknown section [" + current + "]", lineno);
      if (sections.count(current))
        throw ParseError("duplicate section [" + current + "]", lineno);
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    if (current.empty()) throw ParseError("key outside any section", lineno);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", lineno);
    auto& sec = sections[current];
    if (sec.count(key)) throw ParseError("duplicate key '" + key + "'", lineno);
    sec[key] = {trim(line.substr(eq + 1)), lineno};
  }

  Reader r(std::move(sections));
  ModelConfig cfg;

  bool discrete = false;
  if (r.has_section("changepoint")) {
    const Entry& fam = r.need("changepoint", "family");
    const std::string f = fam.value;
    if (f == "exponential") {
      const double rate = r.number("changepoint", "rate");
      cfg.law = at_line(fam.line, [&] { return ContinuousLaw(Exponential{rate}); });
    } else if (f == "weibull") {
      const double shape = r.number("changepoint", "shape");
      const double scale = r.number("changepoint", "scale");
      cfg.law = at_line(fam.line,
                        [&] { return ContinuousLaw(Weibull{shape, scale}); });
    } else if (f == "point") {
      const double at = r.number("changepoint", "at");
      cfg.law = at_line(fam.line, [&] { return ContinuousLaw(PointMass{at}); });
    } else if (f == "table") {
      const auto s = r.list("changepoint", "s");
      const auto g = r.list("changepoint", "cdf");
      if (s.size() != g.size())
        throw ParseError("'s' and 'cdf' differ in length", fam.line);
      TableCdf t;
      for (std::size_t i = 0; i < s.size(); ++i) t.knots.emplace_back(s[i], g[i]);
      cfg.law = at_line(fam.line, [&] { return ContinuousLaw(t); });
    } else if (f == "discrete") {
      discrete = true;
      const auto nu = r.list("changepoint", "hazard");
      const Entry* tail = r.find("changepoint", "tail");
      cfg.hazard = at_line(fam.line, [&] {
        if (nu.empty()) throw InvalidLaw("hazard list is empty");
        return tail ? DiscreteHazard(nu, to_double(tail->value, tail->line, "tail"))
                    : DiscreteHazard(nu);
      });
    } else {
      throw ParseError("unknown family '" + f + "'", fam.line);
    }
  }

  if (r.has_section("rates")) {
    const auto pre = r.list("rates", "pre");
    const auto post = r.list("rates", "post");
    TailMode tail = TailMode::repeat_last;
    if (const Entry* t = r.find("rates", "tail")) {
      if (t->value == "zero") tail = TailMode::zero_after_k;
      else if (t->value != "repeat")
        throw ParseError("tail must be 'repeat' or 'zero'", t->line);
    }
    const std::size_t line = r.need("rates", "pre").line;
    cfg.rates = at_line(line, [&] {
      return RateSchedule(pre, post, tail,
                          discrete ? RateUnits::per_slot : RateUnits::per_time);
    });
  }

  if (r.has_section("history")) {
    if (discrete) {
      const Entry& n = r.need("history", "n");
      const long slots_n = to_long(n.value, n.line, "n");
      std::vector<long> slots;
      if (r.find("history", "slots")) slots = r.long_list("history", "slots");
      cfg.discrete_history =
          at_line(n.line, [&] { return DiscreteHistory(slots_n, slots); });
    } else {
      const Entry& h = r.need("history", "horizon");
      const double horizon = to_double(h.value, h.line, "horizon");
      std::vector<double> arrivals;
      if (r.find("history", "arrivals")) arrivals = r.list("history", "arrivals");
      cfg.history = at_line(h.line, [&] { return History(horizon, arrivals); });
    }
  }

  if (const Entry* e = r.find("run", "seed")) {
    const long v = to_long(e->value, e->line, "seed");
    if (v < 0) throw ParseError("seed must be >= 0", e->line);
    cfg.seed = static_cast<std::uint64_t>(v);
  }
  if (const Entry* e = r.find("run", "tolerance")) {
    cfg.tolerance = to_double(e->value, e->line, "tolerance");
    if (!(*cfg.tolerance > 0.0)) throw ParseError("tolerance must be > 0", e->line);
  }
  if (const Entry* e = r.find("run", "instances")) {
    const long v = to_long(e->value, e->line, "instances");
    if (v < 1) throw ParseError("instances must be >= 1", e->line);
    cfg.instances = static_cast<std::size_t>(v);
  }
  if (const Entry* e = r.find("run", "M")) cfg.M = to_double(e->value, e->line, "M");
  if (const Entry* e = r.find("run", "scenario")) {
    if (e->value.find_first_of(",\"\n") != std::string::npos)
      throw ParseError("scenario may not contain commas or quotes", e->line);
    cfg.scenario = e->value;
  }
  if (const Entry* e = r.find("run", "horizon")) {
    cfg.sim_horizon = to_double(e->value, e->line, "horizon");
    if (!(*cfg.sim_horizon > 0.0)) throw ParseError("horizon must be > 0", e->line);
  }
  if (const Entry* e = r.find("run", "max_arrivals")) {
    const long v = to_long(e->value, e->line, "max_arrivals");
    if (v < 0) throw ParseError("max_arrivals must be >= 0", e->line);
    cfg.max_arrivals = static_cast<std::size_t>(v);
  }

  r.reject_unused();
  return cfg;
}

ModelConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  return parse_config(in);
}

std::string format_number(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

std::string format_list(std::span<const double> xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    s += format_number(xs[i]);
  }
  return s;
}

std::string format_config(const ModelConfig& cfg) {
  std::ostringstream out;
  if (cfg.rates) {
    out << "[rates]\n"
        << "pre = " << format_list(cfg.rates->pre_prefix()) << "\n"
        << "post = " << format_list(cfg.rates->post_prefix()) << "\n"
        << "tail = "
        << (cfg.rates->tail() == TailMode::zero_after_k ? "zero" : "repeat")
        << "\n\n";
  }
  if (cfg.hazard) {
    out << "[changepoint]\nfamily = discrete\n"
        << "hazard = " << format_list(cfg.hazard->values()) << "\n"
        << "tail = " << format_number(cfg.hazard->tail()) << "\n\n";
  } else if (cfg.law) {
    out << "[changepoint]\n";
    std::visit(
        [&](const auto& f) {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, Exponential>) {
            out << "family = exponential\nrate = " << format_number(f.rate) << "\n";
          } else if constexpr (std::is_same_v<F, Weibull>) {
            out << "family = weibull\nshape = " << format_number(f.shape)
                << "\nscale = " << format_number(f.scale) << "\n";
          } else if constexpr (std::is_same_v<F, PointMass>) {
            out << "family = point\nat = " << format_number(f.at) << "\n";
          } else {
            std::vector<double> s, g;
            for (const auto& [a, b] : f.knots) {
              if (a == 0.0) continue; // implicit origin knot
              s.push_back(a);
              g.push_back(b);
            }
            out << "family = table\ns = " << format_list(s)
                << "\ncdf = " << format_list(g) << "\n";
          }
        },
        cfg.law->family());
    out << "\n";
  }
  if (cfg.history) {
    out << "[history]\narrivals = " << format_list(cfg.history->arrivals())
        << "\nhorizon = " << format_number(cfg.history->horizon()) << "\n\n";
  } else if (cfg.discrete_history) {
    out << "[history]\nslots =";
    for (long s : cfg.discrete_history->arrivals()) out << " " << s;
    out << "\nn = " << cfg.discrete_history->horizon() << "\n\n";
  }
  out << "[run]\nseed = " << cfg.seed;
  if (cfg.tolerance) out << "\ntolerance = " << format_number(*cfg.tolerance);
  out << "\ninstances = " << cfg.instances << "\nM = " << format_number(cfg.M)
      << "\nscenario = " << cfg.scenario << "\n";
  if (cfg.sim_horizon) out << "horizon = " << format_number(*cfg.sim_horizon) << "\n";
  if (cfg.max_arrivals) out << "max_arrivals = " << *cfg.max_arrivals << "\n";
  return out.str();
}

} // namespace cpb
