#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sones/sones.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNumeric = 3 };

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw sones::ValidationError("cannot read scenario file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

sones::Scenario load(const fs::path& path) { return sones::parse_and_resolve(read_text(path)); }

std::vector<sones::Rational> parse_omegas(const std::vector<std::string>& items) {
  std::vector<sones::Rational> w;
  for (const auto& s : items) w.push_back(sones::Rational::parse(s));
  return w;
}

sones::ValidationLevel parse_level(const std::string& s) {
  if (s == "full") return sones::ValidationLevel::full;
  if (s == "hessian") return sones::ValidationLevel::hessian_only;
  throw sones::ValidationError("level must be 'full' or 'hessian'");
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const sones::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kConfig;
  } catch (const sones::ValidationError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return kConfig;
  } catch (const sones::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kConfig;
  } catch (const sones::PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return kConfig;
  } catch (const sones::SearchExhausted& e) {
    std::cerr << "search exhausted: " << e.what() << "\n";
    return kConfig;
  } catch (const sones::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}

int cmd_run(const std::vector<std::string>& files, const std::string& out_dir, bool averaged, int jobs) {
  struct Outcome {
    int code = kOk;
    json summary;
  };
  std::vector<Outcome> outcomes(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      const fs::path dir = files.size() == 1 ? fs::path(out_dir) : fs::path(out_dir) / fs::path(files[i]).stem();
      outcomes[i].code = guarded([&] {
        outcomes[i].summary = sones::run_scenario(load(files[i]), dir, averaged).summary;
        return int{kOk};
      });
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(files.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kOk;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (outcomes[i].code != kOk) {
      code = std::max(code, outcomes[i].code);
      continue;
    }
    if (files.size() == 1)
      std::cout << outcomes[i].summary.dump(2) << "\n";
    else
      std::cout << files[i] << ": " << outcomes[i].summary.dump() << "\n";
  }
  return code;
}

int cmd_estimate(const std::string& file, const std::vector<double>& theta) {
  const sones::Scenario s = load(file);
  const sones::PolynomialMap map = s.map.build();
  const std::size_t p = s.probing.dim();
  Eigen::VectorXd at = s.theta_star ? *s.theta_star : s.theta0;
  if (!theta.empty()) {
    if (theta.size() != p) throw sones::ValidationError("--theta needs " + std::to_string(p) + " entries");
    at = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(p));
  }
  const std::span<const double> th(at.data(), p);
  const sones::DerivativeBundle exact = sones::derivative_bundle(map, th);
  const std::size_t m = s.probing.axis();
  json out;
  out["theta_hat"] = sones::detail::to_json(at);
  out["hessian"] = {{"estimate", sones::detail::to_json(sones::estimate_hessian(map, th, s.probing))},
                    {"exact", sones::detail::to_json(exact.hessian)}};
  out["hessian_column"] = {{"estimate", sones::detail::to_json(sones::estimate_hessian_column(map, th, s.probing))},
                           {"exact", sones::detail::to_json(Eigen::VectorXd(exact.hessian.col(m)))}};
  if (sones::frequencies_valid(s.probing.frequencies(), sones::ValidationLevel::full))
    out["third_slice"] = {{"estimate", sones::detail::to_json(sones::estimate_third_slice(map, th, s.probing))},
                          {"exact", sones::detail::to_json(exact.third.slice(m))}};
  else
    out["third_slice"] = nullptr;
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int cmd_check(const std::vector<std::string>& omegas, const std::string& level_name) {
  const auto w = parse_omegas(omegas);
  std::vector<sones::ValidationLevel> levels;
  if (level_name == "both")
    levels = {sones::ValidationLevel::hessian_only, sones::ValidationLevel::full};
  else
    levels = {parse_level(level_name)};
  bool any = false;
  for (auto level : levels) {
    const auto v = sones::validate_frequencies(w, level);
    const char* name = level == sones::ValidationLevel::full ? "full" : "hessian";
    if (v.empty()) {
      std::cout << name << ": ok\n";
      continue;
    }
    any = true;
    std::cout << name << ": " << v.size() << " violation(s)\n";
    for (const auto& x : v) std::cout << "  " << x.describe() << "\n";
  }
  return any ? kConfig : kOk;
}

int cmd_search(std::size_t p, std::int64_t lo, std::int64_t hi, const std::string& level) {
  const auto w = sones::search_frequencies(p, lo, hi, parse_level(level));
  std::vector<std::string> out;
  for (const auto& x : w) out.push_back(x.str());
  std::cout << json(out).dump() << "\n";
  return kOk;
}

int cmd_levelset(const std::string& file, int order, int axis, const std::vector<double>& box, std::size_t resolution,
                 const std::string& out_file) {
  const sones::Scenario s = load(file);
  if (box.size() != 4) throw sones::ValidationError("--box needs x_lo,x_hi,y_lo,y_hi");
  if (axis < 1 || axis > 2) throw sones::ValidationError("--axis must be 1 or 2");
  const auto grid = sones::level_set_grid(s.map.build(), order, static_cast<std::size_t>(axis - 1),
                                          {box[0], box[1], box[2], box[3]}, resolution);
  if (out_file.empty() || out_file == "-") {
    sones::write_level_set_csv(std::cout, grid);
  } else {
    std::ofstream f(out_file, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out_file);
    sones::write_level_set_csv(f, grid);
  }
  return kOk;
}

int cmd_hurwitz(const std::string& file) {
  const sones::Scenario s = load(file);
  if (!s.theta_star) throw sones::ValidationError("hurwitz needs analysis.theta_star");
  if (s.loop != sones::LoopKind::newton) throw sones::ValidationError("hurwitz is defined for the newton loop");
  const sones::PolynomialMap map = s.map.build();
  const sones::AveragedSones sys(map, std::span<const double>(s.theta_star->data(), s.probing.dim()), s.probing,
                                 s.gains);
  const json rep = sones::equilibrium_report(sys, map, *s.theta_star, true);
  std::cout << rep.dump(2) << "\n";
  return rep["stability"]["hurwitz"].get<bool>() ? kOk : kNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Newton-based extremum seeking toward directional inflection points"};
  app.require_subcommand(1);

  std::vector<std::string> run_files;
  std::string out_dir = "out";
  bool averaged = false;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "simulate scenarios and export CSV/JSON");
  run->add_option("scenarios", run_files, "scenario files")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out-dir", out_dir, "output directory");
  run->add_flag("--averaged", averaged, "also integrate the averaged system and report its equilibrium");
  run->add_option("-j,--jobs", jobs, "scenarios run concurrently")->check(CLI::PositiveNumber);

  std::string est_file;
  std::vector<double> est_theta;
  auto* est = app.add_subcommand("estimate", "open-loop derivative estimates next to exact values");
  est->add_option("scenario", est_file, "scenario file")->required()->check(CLI::ExistingFile);
  est->add_option("--theta", est_theta, "evaluation point (default analysis.theta_star)")->delimiter(',');

  std::vector<std::string> omegas;
  std::string level = "both";
  auto* chk = app.add_subcommand("check-frequencies", "list probing-frequency violations");
  chk->add_option("omegas", omegas, "frequencies, integers or n/d")->required()->delimiter(',');
  chk->add_option("--level", level, "hessian, full or both")->check(CLI::IsMember({"hessian", "full", "both"}));

  std::size_t search_p = 2;
  std::int64_t lo = 1, hi = 1000;
  std::string search_level = "full";
  auto* srch = app.add_subcommand("search-frequencies", "smallest valid integer frequency tuple");
  srch->add_option("-p,--dim", search_p, "number of frequencies")->required();
  srch->add_option("--lo", lo, "lower bound");
  srch->add_option("--hi", hi, "upper bound");
  srch->add_option("--level", search_level, "hessian or full")->check(CLI::IsMember({"hessian", "full"}));

  std::string ls_file, ls_out;
  int ls_order = 1, ls_axis = 1;
  std::vector<double> ls_box{-1.0, 3.0, 0.0, 4.0};
  std::size_t ls_res = 101;
  auto* ls = app.add_subcommand("levelset", "grid of h or G_m for plotting");
  ls->add_option("scenario", ls_file, "scenario file")->required()->check(CLI::ExistingFile);
  ls->add_option("--order", ls_order, "0: h, 1: G_m")->check(CLI::Range(0, 1));
  ls->add_option("--axis", ls_axis, "m (1-based)");
  ls->add_option("--box", ls_box, "x_lo,x_hi,y_lo,y_hi")->delimiter(',');
  ls->add_option("--resolution", ls_res, "nodes per side");
  ls->add_option("-o,--out", ls_out, "CSV file, '-' for stdout");

  std::string hw_file;
  auto* hw = app.add_subcommand("hurwitz", "averaged equilibrium and Jacobian spectrum");
  hw->add_option("scenario", hw_file, "scenario file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*run) return cmd_run(run_files, out_dir, averaged, jobs);
  if (*est) return guarded([&] { return cmd_estimate(est_file, est_theta); });
  if (*chk) return guarded([&] { return cmd_check(omegas, level); });
  if (*srch) return guarded([&] { return cmd_search(search_p, lo, hi, search_level); });
  if (*ls) return guarded([&] { return cmd_levelset(ls_file, ls_order, ls_axis, ls_box, ls_res, ls_out); });
  if (*hw) return guarded([&] { return cmd_hurwitz(hw_file); });
  return kConfig;
}
