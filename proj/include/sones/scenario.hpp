#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "sones/csv.hpp"
#include "sones/dynamics.hpp"
#include "sones/error.hpp"
#include "sones/levelset.hpp"
#include "sones/polynomial.hpp"
#include "sones/probing.hpp"
#include "sones/rational.hpp"
#include "sones/toml_lite.hpp"

namespace sones {

enum class LoopKind { newton, gradient };

inline std::string_view to_string(LoopKind k) { return k == LoopKind::newton ? "newton" : "gradient"; }

/// Either a builtin map selected by name, or explicit polynomial terms.
struct MapSpec {
  std::string builtin;             // "paper_example" or empty
  std::vector<double> theta_star;  // builtin parameter
  std::size_t dimension = 0;
  std::vector<Term> terms;

  PolynomialMap build() const {
    if (builtin == "paper_example") return paper_example_map(theta_star);
    if (!builtin.empty()) throw ValidationError("unknown builtin map '" + builtin + "'");
    return PolynomialMap(dimension, terms);
  }
};

struct LevelSetSpec {
  std::string file = "levelset.csv";
  int order = 1;
  std::size_t axis = 0;  // 0-based
  Box2 box;
  std::size_t resolution = 101;
};

struct OutputSpec {
  std::string trajectory = "trajectory.csv";  // empty: not written
  std::string summary = "summary.json";
  std::string averaged_trajectory = "averaged.csv";
  bool averaged = false;
  bool hurwitz = false;
  std::optional<LevelSetSpec> levelset;
};

struct Scenario {
  std::string name = "scenario";
  MapSpec map;
  ProbingConfig probing{{1.0}, {Rational(1)}, 0};
  GainConfig gains;
  LoopKind loop = LoopKind::newton;

  Eigen::VectorXd theta0;
  std::optional<Eigen::VectorXd> h_hat0;
  std::optional<Eigen::MatrixXd> t_hat0;
  std::optional<Eigen::MatrixXd> lambda0;
  std::optional<double> eta0;

  double duration = 300.0;
  std::optional<double> dt;
  std::optional<std::size_t> record_every;
  std::optional<double> averaged_dt;

  std::optional<Eigen::VectorXd> theta_star;  // analysis reference, enables error reports
  std::vector<double> bands{0.05};
  OutputSpec outputs;

  bool resolved() const {
    return dt && record_every && averaged_dt && h_hat0 && eta0 && (loop == LoopKind::gradient || (t_hat0 && lambda0));
  }

  ValidationLevel validation_level() const {
    return loop == LoopKind::newton ? ValidationLevel::full : ValidationLevel::hessian_only;
  }
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void invalid(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

inline void allow_keys(const json& table, const std::string& where, std::initializer_list<std::string_view> keys) {
  if (!table.is_object()) invalid(where, "expected a table");
  for (auto it = table.begin(); it != table.end(); ++it) {
    bool known = false;
    for (auto k : keys) known = known || it.key() == k;
    if (!known) invalid(where, "unknown key '" + it.key() + "'");
  }
}

inline double get_double(const json& v, const std::string& where) {
  if (!v.is_number()) invalid(where, "expected a number");
  return v.get<double>();
}

inline std::int64_t get_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) invalid(where, "expected an integer");
  return v.get<std::int64_t>();
}

inline std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) invalid(where, "expected a string");
  return v.get<std::string>();
}

inline bool get_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) invalid(where, "expected true or false");
  return v.get<bool>();
}

inline std::vector<double> get_doubles(const json& v, const std::string& where) {
  if (!v.is_array()) invalid(where, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(get_double(x, where));
  return out;
}

inline Eigen::VectorXd get_vector(const json& v, const std::string& where, std::size_t n) {
  const std::vector<double> xs = get_doubles(v, where);
  if (xs.size() != n) invalid(where, "expected " + std::to_string(n) + " entries");
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(n));
}

inline Eigen::MatrixXd get_matrix(const json& v, const std::string& where, std::size_t n) {
  if (!v.is_array() || v.size() != n) invalid(where, "expected " + std::to_string(n) + " rows");
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.row(static_cast<Eigen::Index>(i)) = get_vector(v[i], where, n).transpose();
  return m;
}

inline Rational get_rational(const json& v, const std::string& where) {
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (v.is_string()) {
    try {
      return Rational::parse(v.get<std::string>());
    } catch (const InvalidArgument& e) {
      invalid(where, e.what());
    }
  }
  invalid(where, "frequencies must be integers or \"n/d\" strings");
}

inline std::string toml_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

template <class Range>
std::string toml_floats(const Range& xs) {
  std::string s = "[";
  bool first = true;
  for (double x : xs) {
    if (!first) s += ", ";
    first = false;
    s += format_float_literal(x);
  }
  return s + "]";
}

inline std::string toml_vector(const Eigen::VectorXd& v) {
  return toml_floats(std::vector<double>(v.data(), v.data() + v.size()));
}

inline std::string toml_matrix(const Eigen::MatrixXd& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s += ", ";
    s += toml_vector(m.row(i).transpose());
  }
  return s + "]";
}

}  // namespace detail

/// Parses scenario text and validates it eagerly, including the probing frequencies at the
/// level required by the loop type. Throws ParseError (with line) or ValidationError.
inline Scenario parse_scenario(std::string_view text) {
  using detail::json;
  const json doc = toml::parse(text);
  detail::allow_keys(doc, "scenario",
                     {"name", "map", "probing", "gains", "initial", "simulation", "analysis", "outputs"});
  Scenario s;
  if (doc.contains("name")) s.name = detail::get_string(doc["name"], "name");

  if (!doc.contains("map")) detail::invalid("scenario", "missing [map]");
  const json& m = doc["map"];
  detail::allow_keys(m, "map", {"builtin", "theta_star", "dimension", "terms"});
  if (m.contains("builtin")) {
    s.map.builtin = detail::get_string(m["builtin"], "map.builtin");
    if (s.map.builtin != "paper_example") detail::invalid("map.builtin", "unknown builtin '" + s.map.builtin + "'");
    if (m.contains("terms") || m.contains("dimension")) detail::invalid("map", "builtin maps take no terms");
    s.map.theta_star = m.contains("theta_star") ? detail::get_doubles(m["theta_star"], "map.theta_star")
                                                : std::vector<double>{1.0, 2.0};
    if (s.map.theta_star.size() != 2) detail::invalid("map.theta_star", "expected 2 entries");
    s.map.dimension = 2;
  } else {
    if (!m.contains("dimension") || !m.contains("terms")) detail::invalid("map", "needs builtin, or dimension and terms");
    const std::int64_t d = detail::get_int(m["dimension"], "map.dimension");
    if (d < 1) detail::invalid("map.dimension", "must be positive");
    s.map.dimension = static_cast<std::size_t>(d);
    if (!m["terms"].is_array()) detail::invalid("map.terms", "expected an array of {exponents, coeff}");
    for (const json& t : m["terms"]) {
      detail::allow_keys(t, "map.terms", {"exponents", "coeff"});
      if (!t.contains("exponents") || !t.contains("coeff")) detail::invalid("map.terms", "needs exponents and coeff");
      Term term;
      if (!t["exponents"].is_array() || t["exponents"].size() != s.map.dimension)
        detail::invalid("map.terms", "exponents must have one entry per dimension");
      for (const json& e : t["exponents"]) {
        const std::int64_t k = detail::get_int(e, "map.terms.exponents");
        if (k < 0) detail::invalid("map.terms.exponents", "must be non-negative");
        term.exponents.push_back(static_cast<int>(k));
      }
      term.coeff = detail::get_double(t["coeff"], "map.terms.coeff");
      s.map.terms.push_back(std::move(term));
    }
  }
  const std::size_t p = s.map.dimension;

  if (!doc.contains("probing")) detail::invalid("scenario", "missing [probing]");
  const json& pr = doc["probing"];
  detail::allow_keys(pr, "probing", {"amplitudes", "frequencies", "axis"});
  if (!pr.contains("amplitudes") || !pr.contains("frequencies"))
    detail::invalid("probing", "needs amplitudes and frequencies");
  std::vector<double> amps = detail::get_doubles(pr["amplitudes"], "probing.amplitudes");
  if (!pr["frequencies"].is_array()) detail::invalid("probing.frequencies", "expected an array");
  std::vector<Rational> freqs;
  for (const json& w : pr["frequencies"]) freqs.push_back(detail::get_rational(w, "probing.frequencies"));
  const std::int64_t axis = pr.contains("axis") ? detail::get_int(pr["axis"], "probing.axis") : 1;
  if (amps.size() != p || freqs.size() != p) detail::invalid("probing", "needs one amplitude and frequency per dimension");
  if (axis < 1 || static_cast<std::size_t>(axis) > p) detail::invalid("probing.axis", "out of range (1-based)");
  try {
    s.probing = ProbingConfig(std::move(amps), std::move(freqs), static_cast<std::size_t>(axis - 1));
  } catch (const InvalidArgument& e) {
    detail::invalid("probing", e.what());
  }

  s.gains.k = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(p), 0.02);
  if (doc.contains("gains")) {
    const json& g = doc["gains"];
    detail::allow_keys(g, "gains", {"k", "low_pass", "high_pass", "riccati", "delta"});
    if (g.contains("k")) s.gains.k = detail::get_vector(g["k"], "gains.k", p);
    if (g.contains("low_pass")) s.gains.filters.low_pass = detail::get_double(g["low_pass"], "gains.low_pass");
    if (g.contains("high_pass")) s.gains.filters.high_pass = detail::get_double(g["high_pass"], "gains.high_pass");
    if (g.contains("riccati")) s.gains.filters.riccati = detail::get_double(g["riccati"], "gains.riccati");
    if (g.contains("delta")) s.gains.delta = detail::get_double(g["delta"], "gains.delta");
  }
  try {
    s.gains.validate(p);
  } catch (const InvalidArgument& e) {
    detail::invalid("gains", e.what());
  }

  if (doc.contains("simulation")) {
    const json& sim = doc["simulation"];
    detail::allow_keys(sim, "simulation", {"loop", "duration", "dt", "record_every", "averaged_dt"});
    if (sim.contains("loop")) {
      const std::string kind = detail::get_string(sim["loop"], "simulation.loop");
      if (kind == "newton")
        s.loop = LoopKind::newton;
      else if (kind == "gradient")
        s.loop = LoopKind::gradient;
      else
        detail::invalid("simulation.loop", "expected \"newton\" or \"gradient\"");
    }
    if (sim.contains("duration")) s.duration = detail::get_double(sim["duration"], "simulation.duration");
    if (sim.contains("dt")) s.dt = detail::get_double(sim["dt"], "simulation.dt");
    if (sim.contains("averaged_dt")) s.averaged_dt = detail::get_double(sim["averaged_dt"], "simulation.averaged_dt");
    if (sim.contains("record_every")) {
      const std::int64_t r = detail::get_int(sim["record_every"], "simulation.record_every");
      if (r < 1) detail::invalid("simulation.record_every", "must be positive");
      s.record_every = static_cast<std::size_t>(r);
    }
  }
  if (!(s.duration > 0.0)) detail::invalid("simulation.duration", "must be positive");
  if (s.dt && !(*s.dt > 0.0)) detail::invalid("simulation.dt", "must be positive");
  if (s.averaged_dt && !(*s.averaged_dt > 0.0)) detail::invalid("simulation.averaged_dt", "must be positive");

  const auto violations = validate_frequencies(s.probing.frequencies(), s.validation_level());
  if (!violations.empty()) {
    std::string msg = "probing.frequencies: " + std::to_string(violations.size()) + " violation(s) at level " +
                      (s.loop == LoopKind::newton ? "full" : "hessian");
    for (const auto& v : violations) msg += "\n  " + v.describe();
    throw ValidationError(msg);
  }
  if (s.dt && *s.dt > max_step(s.probing) * (1.0 + 1e-12))
    detail::invalid("simulation.dt", "exceeds the largest admissible step " + format_double(max_step(s.probing)));

  s.theta0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  if (doc.contains("initial")) {
    const json& in = doc["initial"];
    detail::allow_keys(in, "initial", {"theta_hat", "h_hat", "t_hat", "lambda", "eta"});
    if (in.contains("theta_hat")) s.theta0 = detail::get_vector(in["theta_hat"], "initial.theta_hat", p);
    if (in.contains("h_hat")) s.h_hat0 = detail::get_vector(in["h_hat"], "initial.h_hat", p);
    if (in.contains("t_hat")) s.t_hat0 = detail::get_matrix(in["t_hat"], "initial.t_hat", p);
    if (in.contains("lambda")) s.lambda0 = detail::get_matrix(in["lambda"], "initial.lambda", p);
    if (in.contains("eta")) s.eta0 = detail::get_double(in["eta"], "initial.eta");
    if (s.loop == LoopKind::gradient && (s.t_hat0 || s.lambda0))
      detail::invalid("initial", "the gradient loop has no t_hat or lambda state");
  }

  if (!s.map.builtin.empty()) s.theta_star = Eigen::Map<const Eigen::VectorXd>(s.map.theta_star.data(), 2);
  if (doc.contains("analysis")) {
    const json& an = doc["analysis"];
    detail::allow_keys(an, "analysis", {"theta_star", "bands"});
    if (an.contains("theta_star")) s.theta_star = detail::get_vector(an["theta_star"], "analysis.theta_star", p);
    if (an.contains("bands")) {
      s.bands = detail::get_doubles(an["bands"], "analysis.bands");
      for (double b : s.bands)
        if (!(b > 0.0)) detail::invalid("analysis.bands", "bands must be positive");
    }
  }

  if (doc.contains("outputs")) {
    const json& o = doc["outputs"];
    detail::allow_keys(o, "outputs", {"trajectory", "summary", "averaged_trajectory", "averaged", "hurwitz", "levelset"});
    if (o.contains("trajectory")) s.outputs.trajectory = detail::get_string(o["trajectory"], "outputs.trajectory");
    if (o.contains("summary")) s.outputs.summary = detail::get_string(o["summary"], "outputs.summary");
    if (o.contains("averaged_trajectory"))
      s.outputs.averaged_trajectory = detail::get_string(o["averaged_trajectory"], "outputs.averaged_trajectory");
    if (o.contains("averaged")) s.outputs.averaged = detail::get_bool(o["averaged"], "outputs.averaged");
    if (o.contains("hurwitz")) s.outputs.hurwitz = detail::get_bool(o["hurwitz"], "outputs.hurwitz");
    if (o.contains("levelset")) {
      const json& l = o["levelset"];
      detail::allow_keys(l, "outputs.levelset", {"file", "order", "axis", "box", "resolution"});
      LevelSetSpec ls;
      if (l.contains("file")) ls.file = detail::get_string(l["file"], "outputs.levelset.file");
      if (l.contains("order")) ls.order = static_cast<int>(detail::get_int(l["order"], "outputs.levelset.order"));
      if (l.contains("axis")) {
        const std::int64_t a = detail::get_int(l["axis"], "outputs.levelset.axis");
        if (a < 1 || a > 2) detail::invalid("outputs.levelset.axis", "must be 1 or 2");
        ls.axis = static_cast<std::size_t>(a - 1);
      }
      if (l.contains("box")) {
        const std::vector<double> b = detail::get_doubles(l["box"], "outputs.levelset.box");
        if (b.size() != 4) detail::invalid("outputs.levelset.box", "expected [x_lo, x_hi, y_lo, y_hi]");
        ls.box = {b[0], b[1], b[2], b[3]};
      }
      if (l.contains("resolution")) {
        const std::int64_t r = detail::get_int(l["resolution"], "outputs.levelset.resolution");
        if (r < 2) detail::invalid("outputs.levelset.resolution", "must be at least 2");
        ls.resolution = static_cast<std::size_t>(r);
      }
      if (ls.order != 0 && ls.order != 1) detail::invalid("outputs.levelset.order", "must be 0 or 1");
      if (p != 2) detail::invalid("outputs.levelset", "level sets need a 2-D map");
      s.outputs.levelset = ls;
    }
  }
  if ((s.outputs.averaged || s.outputs.hurwitz) && !s.theta_star)
    detail::invalid("outputs", "averaged and hurwitz reports need analysis.theta_star");
  if ((s.outputs.averaged || s.outputs.hurwitz) && s.loop != LoopKind::newton)
    detail::invalid("outputs", "averaged and hurwitz reports are defined for the newton loop");

  try {
    (void)s.map.build();
  } catch (const InvalidArgument& e) {
    detail::invalid("map", e.what());
  }
  return s;
}

namespace detail {

/// Largest step <= rule that divides the duration into whole steps.
inline double fit_step(double duration, double rule) {
  if (!(duration > 0.0)) return rule;
  const double ratio = duration / rule;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) <= 1e-9 * std::max(1.0, n)) return rule;
  return duration / std::ceil(ratio);
}

}  // namespace detail

/// Fills every default: dt by the default-step rule (shrunk to divide the duration),
/// record_every for samples at most 0.01 s apart, T^(0) = -50 I, Lambda(0) = T^(0)^-1, H^(0) = 0, eta(0) = h(theta^(0)).
inline Scenario resolve(Scenario s) {
  const auto p = static_cast<Eigen::Index>(s.probing.dim());
  if (!s.dt) s.dt = detail::fit_step(s.duration, default_step(s.probing));
  if (!s.record_every) {
    const auto steps = static_cast<std::size_t>(std::llround(s.duration / *s.dt));
    std::size_t r = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.01 / *s.dt)));
    while (steps > 0 && steps % r != 0) --r;
    s.record_every = r;
  }
  if (!s.averaged_dt) {
    const FilterGains& f = s.gains.filters;
    s.averaged_dt = detail::fit_step(
        s.duration, std::min(0.05, 0.05 / std::max({f.low_pass, f.high_pass, f.riccati, s.gains.k.maxCoeff()})));
  }
  const PolynomialMap map = s.map.build();
  if (!s.h_hat0) s.h_hat0 = Eigen::VectorXd::Zero(p);
  if (!s.eta0) s.eta0 = map(std::span<const double>(s.theta0.data(), static_cast<std::size_t>(p)));
  if (s.loop == LoopKind::newton) {
    if (!s.t_hat0) s.t_hat0 = Eigen::MatrixXd(-50.0 * Eigen::MatrixXd::Identity(p, p));
    if (!s.lambda0) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(*s.t_hat0);
      if (!lu.isInvertible()) throw ValidationError("initial.t_hat is singular; give initial.lambda explicitly");
      s.lambda0 = Eigen::MatrixXd(lu.inverse());
    }
  }
  std::size_t steps = 0;
  try {
    steps = step_count(0.0, s.duration, *s.dt);
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("simulation: ") + e.what());
  }
  if (steps % *s.record_every != 0)
    throw ValidationError("simulation: step count " + std::to_string(steps) + " is not a multiple of record_every");
  try {
    (void)step_count(0.0, s.duration, *s.averaged_dt);
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("simulation.averaged_dt: ") + e.what());
  }
  return s;
}

inline Scenario parse_and_resolve(std::string_view text) { return resolve(parse_scenario(text)); }

/// Scenario text that parses back to the same scenario. Defaults already filled stay explicit.
inline std::string serialize_scenario(const Scenario& s) {
  using detail::toml_floats;
  using detail::toml_matrix;
  using detail::toml_string;
  using detail::toml_vector;
  std::ostringstream os;
  os << "name = " << toml_string(s.name) << "\n\n[map]\n";
  if (!s.map.builtin.empty()) {
    os << "builtin = " << toml_string(s.map.builtin) << "\n";
    os << "theta_star = " << toml_floats(s.map.theta_star) << "\n";
  } else {
    os << "dimension = " << s.map.dimension << "\n";
    os << "terms = [\n";
    for (const Term& t : PolynomialMap(s.map.dimension, s.map.terms).terms()) {
      os << "  {exponents = [";
      for (std::size_t i = 0; i < t.exponents.size(); ++i) os << (i ? ", " : "") << t.exponents[i];
      os << "], coeff = " << format_float_literal(t.coeff) << "},\n";
    }
    os << "]\n";
  }

  os << "\n[probing]\namplitudes = " << toml_floats(s.probing.amplitudes()) << "\nfrequencies = [";
  for (std::size_t i = 0; i < s.probing.dim(); ++i) {
    const Rational& w = s.probing.frequencies()[i];
    os << (i ? ", " : "") << (w.is_integer() ? w.str() : toml_string(w.str()));
  }
  os << "]\naxis = " << s.probing.axis() + 1 << "\n";

  os << "\n[gains]\nk = " << toml_vector(s.gains.k) << "\n";
  os << "low_pass = " << format_float_literal(s.gains.filters.low_pass) << "\n";
  os << "high_pass = " << format_float_literal(s.gains.filters.high_pass) << "\n";
  os << "riccati = " << format_float_literal(s.gains.filters.riccati) << "\n";
  os << "delta = " << format_float_literal(s.gains.delta) << "\n";

  os << "\n[initial]\ntheta_hat = " << toml_vector(s.theta0) << "\n";
  if (s.h_hat0) os << "h_hat = " << toml_vector(*s.h_hat0) << "\n";
  if (s.t_hat0) os << "t_hat = " << toml_matrix(*s.t_hat0) << "\n";
  if (s.lambda0) os << "lambda = " << toml_matrix(*s.lambda0) << "\n";
  if (s.eta0) os << "eta = " << format_float_literal(*s.eta0) << "\n";

  os << "\n[simulation]\nloop = " << toml_string(to_string(s.loop)) << "\n";
  os << "duration = " << format_float_literal(s.duration) << "\n";
  if (s.dt) os << "dt = " << format_float_literal(*s.dt) << "\n";
  if (s.record_every) os << "record_every = " << *s.record_every << "\n";
  if (s.averaged_dt) os << "averaged_dt = " << format_float_literal(*s.averaged_dt) << "\n";

  os << "\n[analysis]\n";
  if (s.theta_star) os << "theta_star = " << toml_vector(*s.theta_star) << "\n";
  os << "bands = " << toml_floats(s.bands) << "\n";

  os << "\n[outputs]\ntrajectory = " << toml_string(s.outputs.trajectory) << "\n";
  os << "summary = " << toml_string(s.outputs.summary) << "\n";
  os << "averaged_trajectory = " << toml_string(s.outputs.averaged_trajectory) << "\n";
  os << "averaged = " << (s.outputs.averaged ? "true" : "false") << "\n";
  os << "hurwitz = " << (s.outputs.hurwitz ? "true" : "false") << "\n";
  if (s.outputs.levelset) {
    const LevelSetSpec& l = *s.outputs.levelset;
    os << "\n[outputs.levelset]\nfile = " << toml_string(l.file) << "\norder = " << l.order
       << "\naxis = " << l.axis + 1 << "\nbox = "
       << toml_floats(std::vector<double>{l.box.x_lo, l.box.x_hi, l.box.y_lo, l.box.y_hi})
       << "\nresolution = " << l.resolution << "\n";
  }
  return os.str();
}

/// Initial Newton-loop state of a resolved scenario.
inline SonesState initial_state(const Scenario& s) {
  if (!s.resolved()) throw PreconditionError("scenario is not resolved");
  if (s.loop != LoopKind::newton) throw PreconditionError("initial_state is for the newton loop");
  return {s.theta0, *s.h_hat0, *s.lambda0, *s.t_hat0, *s.eta0};
}

inline Grad2State initial_gradient_state(const Scenario& s) {
  if (!s.resolved()) throw PreconditionError("scenario is not resolved");
  return {s.theta0, *s.h_hat0, *s.eta0};
}

}  // namespace sones
