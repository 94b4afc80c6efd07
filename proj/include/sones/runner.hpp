#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "sones/csv.hpp"
#include "sones/dynamics.hpp"
#include "sones/levelset.hpp"
#include "sones/scenario.hpp"

namespace sones {

/// Newton-loop CSV header: t, theta_hat_i, Hhat_i, Lambda_ij, That_ij, eta, y.
inline std::vector<std::string> newton_csv_header(std::size_t p) {
  std::vector<std::string> h{"t"};
  for (std::size_t i = 1; i <= p; ++i) h.push_back("theta_hat_" + std::to_string(i));
  for (std::size_t i = 1; i <= p; ++i) h.push_back("Hhat_" + std::to_string(i));
  for (std::size_t i = 1; i <= p; ++i)
    for (std::size_t j = 1; j <= p; ++j) h.push_back("Lambda_" + std::to_string(i) + std::to_string(j));
  for (std::size_t i = 1; i <= p; ++i)
    for (std::size_t j = 1; j <= p; ++j) h.push_back("That_" + std::to_string(i) + std::to_string(j));
  h.push_back("eta");
  h.push_back("y");
  return h;
}

inline std::vector<std::string> gradient_csv_header(std::size_t p) {
  std::vector<std::string> h{"t"};
  for (std::size_t i = 1; i <= p; ++i) h.push_back("theta_hat_" + std::to_string(i));
  for (std::size_t i = 1; i <= p; ++i) h.push_back("Hhat_" + std::to_string(i));
  h.push_back("eta");
  h.push_back("y");
  return h;
}

/// Rows are [t, flat state..., y]; the flat layouts already match the headers above.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& header) {
  CsvWriter w(os);
  w.header(header);
  std::vector<double> row;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    row.clear();
    row.push_back(traj.time(k));
    row.insert(row.end(), traj.states[k].data(), traj.states[k].data() + traj.states[k].size());
    row.push_back(k < traj.outputs.size() ? traj.outputs[k] : std::nan(""));
    w.row(row);
  }
}

/// First sample time after which err stays <= band for the rest of the record; empty if never.
inline std::optional<double> settle_time(const Trajectory& traj, const std::vector<double>& err, double band) {
  std::optional<double> t;
  for (std::size_t k = err.size(); k-- > 0;) {
    if (!(err[k] <= band)) break;
    t = traj.time(k);
  }
  return t;
}

struct RunResult {
  nlohmann::json summary;
  Trajectory trajectory;
  std::optional<Trajectory> averaged;  // absolute coordinates, Newton layout
};

namespace detail {

inline nlohmann::json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline nlohmann::json to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return rows;
}

inline nlohmann::json to_json(const HurwitzReport& h) {
  nlohmann::json spec = nlohmann::json::array();
  for (const auto& z : h.spectrum) spec.push_back({z.real(), z.imag()});
  return {{"hurwitz", h.hurwitz}, {"max_real", h.max_real}, {"spectrum", spec}};
}

inline nlohmann::json optional_time(const std::optional<double>& t) { return t ? nlohmann::json(*t) : nlohmann::json(); }

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace detail

/// Averaged closed loop from the scenario's initial state, in absolute coordinates. y holds
/// h(theta*) plus the period average of nu at each sample.
inline Trajectory averaged_trajectory(const AveragedSones& sys, const SonesState& initial, double duration,
                                      double dt) {
  const InflectionReference& ref = sys.reference();
  Trajectory err = integrate(sys, to_error_coordinates(initial, ref).flatten(), 0.0, duration, dt);
  Trajectory out{err.t0, err.step, {}, {}};
  const std::size_t p = sys.probing().dim();
  for (const Eigen::VectorXd& x : err.states) {
    const SonesState e = SonesState::unflatten(x, p);
    out.states.push_back(from_error_coordinates(e, ref).flatten());
    out.outputs.push_back(ref.h_star + sys.averages(e.theta_hat).y);
  }
  return out;
}

/// Equilibrium report of the averaged system: offsets, predicted bias, product identity and,
/// when asked, the Jacobian spectrum.
inline nlohmann::json equilibrium_report(const AveragedSones& sys, const PolynomialMap& map,
                                         const Eigen::VectorXd& theta_star, bool with_hurwitz) {
  const Equilibrium eq = averaged_equilibrium(sys);
  const InflectionReference& ref = sys.reference();
  const SonesState abs = from_error_coordinates(eq.state, ref);
  const TheoremBias bias =
      theorem_bias(map, std::span<const double>(theta_star.data(), static_cast<std::size_t>(theta_star.size())),
                   sys.probing());
  const auto p = static_cast<Eigen::Index>(sys.probing().dim());
  nlohmann::json r = {
      {"theta_tilde", detail::to_json(eq.state.theta_hat)},
      {"h_hat", detail::to_json(eq.state.h_hat)},
      {"lambda", detail::to_json(abs.lambda)},
      {"t_hat", detail::to_json(abs.t_hat)},
      {"eta_tilde", eq.state.eta},
      {"residual", eq.residual},
      {"settle_time", eq.time},
      {"product_identity_error", (abs.t_hat * abs.lambda - Eigen::MatrixXd::Identity(p, p)).norm()},
      {"predicted_theta_tilde", detail::to_json(bias.theta)},
      {"predicted_eta_tilde", bias.eta},
  };
  if (with_hurwitz) r["stability"] = detail::to_json(averaged_stability(sys, eq.state).hurwitz);
  return r;
}

/// Runs a resolved scenario and writes the requested files under out_dir. Deterministic.
inline RunResult run_scenario(const Scenario& s, const std::filesystem::path& out_dir, bool force_averaged = false) {
  if (!s.resolved()) throw PreconditionError("run_scenario needs a resolved scenario");
  std::filesystem::create_directories(out_dir);
  const PolynomialMap map = s.map.build();
  const std::size_t p = s.probing.dim();
  RunResult res;
  nlohmann::json& sum = res.summary;
  sum["name"] = s.name;
  sum["loop"] = std::string(to_string(s.loop));
  sum["dt"] = *s.dt;
  sum["record_every"] = *s.record_every;
  sum["duration"] = s.duration;

  std::vector<std::string> header;
  if (s.loop == LoopKind::newton) {
    const SonesLoop<const PolynomialMap&> loop(map, s.probing, s.gains);
    res.trajectory = simulate(loop, initial_state(s).flatten(), s.duration, *s.dt, *s.record_every);
    header = newton_csv_header(p);
  } else {
    const Grad2Loop<const PolynomialMap&> loop(map, s.probing, s.gains);
    res.trajectory = simulate(loop, initial_gradient_state(s).flatten(), s.duration, *s.dt, *s.record_every);
    header = gradient_csv_header(p);
  }
  const Trajectory& traj = res.trajectory;
  sum["samples"] = traj.size();
  const auto n = static_cast<Eigen::Index>(p);
  const Eigen::VectorXd& last = traj.states.back();
  sum["final_theta_hat"] = detail::to_json(Eigen::VectorXd(last.head(n)));

  if (s.theta_star) {
    std::vector<double> theta_err;
    for (const auto& x : traj.states) theta_err.push_back((x.head(n) - *s.theta_star).cwiseAbs().maxCoeff());
    sum["final_theta_error_inf"] = theta_err.back();
    nlohmann::json bands = nlohmann::json::array();
    std::vector<double> lambda_err;
    std::optional<InflectionReference> ref;
    if (s.loop == LoopKind::newton) {
      ref = make_reference(map, std::span<const double>(s.theta_star->data(), p), s.probing.axis());
      for (const auto& x : traj.states) {
        const SonesState st = SonesState::unflatten(x, p);
        lambda_err.push_back((st.lambda - ref->t_m_inv).cwiseAbs().maxCoeff());
      }
      sum["final_lambda_error_max"] = lambda_err.back();
      sum["t_m_inverse"] = detail::to_json(ref->t_m_inv);
    }
    for (double b : s.bands) {
      nlohmann::json entry = {{"band", b}, {"theta", detail::optional_time(settle_time(traj, theta_err, b))}};
      if (!lambda_err.empty()) entry["lambda"] = detail::optional_time(settle_time(traj, lambda_err, b));
      bands.push_back(entry);
    }
    sum["convergence_times"] = bands;
  }

  if (!s.outputs.trajectory.empty()) {
    std::ofstream f(out_dir / s.outputs.trajectory, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out_dir / s.outputs.trajectory).string());
    write_trajectory_csv(f, traj, header);
  }

  const bool averaged = s.outputs.averaged || force_averaged;
  if (averaged || s.outputs.hurwitz) {
    if (!s.theta_star) throw ValidationError("averaged and hurwitz reports need analysis.theta_star");
    if (s.loop != LoopKind::newton) throw ValidationError("averaged reports are defined for the newton loop");
    const std::span<const double> ts(s.theta_star->data(), p);
    const AveragedSones sys(map, ts, s.probing, s.gains);
    if (averaged) {
      res.averaged = averaged_trajectory(sys, initial_state(s), s.duration, *s.averaged_dt);
      const Trajectory& avg = *res.averaged;
      double sup = 0.0;
      for (std::size_t k = 0; k < avg.size(); ++k) {
        const double idx = avg.time(k) / traj.step;
        const auto j = static_cast<std::size_t>(std::llround(idx));
        if (std::abs(idx - static_cast<double>(j)) > 1e-6 || j >= traj.size()) continue;
        sup = std::max(sup, (traj.states[j].head(n) - avg.states[k].head(n)).cwiseAbs().maxCoeff());
      }
      sum["averaged"] = {{"dt", *s.averaged_dt}, {"samples", avg.size()}, {"sup_theta_distance", sup}};
      if (!s.outputs.averaged_trajectory.empty()) {
        std::ofstream f(out_dir / s.outputs.averaged_trajectory, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (out_dir / s.outputs.averaged_trajectory).string());
        write_trajectory_csv(f, avg, newton_csv_header(p));
      }
    }
    sum["equilibrium"] = equilibrium_report(sys, map, *s.theta_star, s.outputs.hurwitz);
  }

  if (s.outputs.levelset) {
    const LevelSetSpec& l = *s.outputs.levelset;
    std::ofstream f(out_dir / l.file, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out_dir / l.file).string());
    write_level_set_csv(f, level_set_grid(map, l.order, l.axis, l.box, l.resolution));
  }

  if (!s.outputs.summary.empty()) detail::write_file(out_dir / s.outputs.summary, sum.dump(2) + "\n");
  return res;
}

}  // namespace sones
