// darkmode: command-line front end for sweeps and single-point queries.
//
// Exit codes: 0 ok, 1 invalid input, 2 numeric failure, 3 sweep finished
// with some (at most half) failed points.

#include "darkmode/darkmode.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace dm = darkmode;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitPartial = 3;

dm::Scenario resolve_scenario(const std::string& ref) {
  for (const auto& s : dm::builtin_scenarios())
    if (s.name == ref) return s;
  if (!std::filesystem::exists(ref))
    throw dm::ValidationError("'" + ref + "' is neither a built-in scenario (A1, A2, B) nor a config file");
  return dm::load_config(ref);
}

struct PointArgs {
  std::string scenario;
  std::optional<double> at_hz;
};

void add_point_args(CLI::App* cmd, PointArgs& a) {
  cmd->add_option("scenario", a.scenario, "built-in scenario name or config file")->required();
  cmd->add_option("--at", a.at_hz, "control value in Hz (Gamma1 or Gamma12, per the scenario axis)");
}

dm::SystemParams point_params(const PointArgs& a, dm::Scenario* out = nullptr) {
  const dm::Scenario s = resolve_scenario(a.scenario);
  if (out) *out = s;
  if (s.axis == dm::ControlAxis::none) {
    if (a.at_hz) throw dm::ValidationError("--at given but scenario '" + s.name + "' has no sweep axis");
    return s.at(0.0);
  }
  if (!a.at_hz)
    throw dm::ValidationError("--at <hz> is required for scenario '" + s.name + "' (axis " +
                              std::string(dm::to_string(s.axis)) + ")");
  if (!(*a.at_hz >= 0.0)) throw dm::ValidationError("--at must be >= 0");
  return s.at(dm::hz(*a.at_hz));
}

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

void print(const dm::Json& j) { std::cout << j.dump(2) << "\n"; }

dm::Json mode_json(const dm::Eigenmode& m) {
  return {{"omega_hz", dm::to_hz(m.omega)},
          {"gamma_hz", dm::to_hz(m.gamma)},
          {"classification", std::string(dm::to_string(m.classification))}};
}

dm::Json report_json(const dm::EigenmodeReport& r) {
  return {{"regime", std::string(dm::to_string(r.regime))}, {"plus", mode_json(r.plus())},
          {"minus", mode_json(r.minus())}};
}

dm::Json phonons_json(const dm::PhononReport& r, double n_th) {
  return {{"n1", r.n1}, {"n2", r.n2}, {"n_total", r.n_total}, {"n_total_over_nth", r.n_total / n_th}};
}

// Subcommands ----------------------------------------------------------------

int cmd_list() {
  for (const auto& s : dm::builtin_scenarios()) {
    const auto grid = s.control_values();
    std::printf("%-3s  %-7s %3zu points  %s\n", s.name.c_str(), std::string(dm::to_string(s.axis)).c_str(),
                grid.size(), s.description.c_str());
  }
  return 0;
}

struct RunArgs {
  std::string scenario;
  std::string out = "out";
  std::string format = "csv";
  unsigned jobs = 1;
  bool full = false, spectra = false, trajectory = false, timestamp = false;
  std::uint64_t seed = 1;
  std::size_t trajectory_steps = 200000;
};

int cmd_run(const RunArgs& a) {
  const dm::Scenario s = resolve_scenario(a.scenario);
  dm::SweepOptions opt;
  opt.with_full_model = a.full;
  opt.with_spectra = a.spectra;
  opt.with_trajectory_check = a.trajectory;
  opt.parallelism = a.jobs;
  opt.seed = a.seed;
  opt.trajectory_steps = a.trajectory_steps;
  const dm::SweepResult r = dm::run_sweep(s, opt);

  std::set<std::string> seen;
  for (const auto& row : r.rows)
    for (const auto& w : row.warnings)
      if (seen.insert(w.substr(0, w.find(' ', 20))).second) std::cerr << "warning: " << w << "\n";

  dm::EmitOptions eo;
  eo.format = a.format == "json" ? dm::OutputFormat::json : dm::OutputFormat::csv;
  eo.timestamp = a.timestamp;
  for (const auto& p : dm::emit(r, a.out, eo)) std::cout << p.string() << "\n";

  if (r.failures() > 0) {
    for (const auto& row : r.rows)
      if (!row.ok) std::cerr << "point " << dm::to_hz(row.control) << " Hz: " << row.status << "\n";
    return kExitPartial;
  }
  return 0;
}

int cmd_eigen(const PointArgs& a) {
  const dm::SystemParams p = point_params(a);
  const dm::EffectiveModel e = dm::effective_model(p);
  warn(e.warnings);
  dm::Json j;
  j["Gamma1_hz"] = dm::to_hz(e.Gamma1);
  j["Gamma2_hz"] = dm::to_hz(e.Gamma2);
  j["adiabaticity"] = e.adiabaticity;
  j["numeric"] = report_json(dm::eigenmodes_numeric(e));
  try {
    j["closed_form"] = report_json(dm::eigenmodes_closed_form(e));
  } catch (const dm::ClosedFormInapplicable& err) {
    j["closed_form"] = nullptr;
    j["closed_form_reason"] = err.what();
  }
  if (dm::is_single_cavity(e) && p.coupling.G.col(1).isZero(0.0)) {
    j["ep_Gamma1_hz"] = 0.5 * std::abs(dm::to_hz(p.delta_omega()));
    j["dark_mode_condition"] = dm::dark_mode_condition(p);
  }
  print(j);
  return 0;
}

int cmd_cool(const PointArgs& a, bool full) {
  dm::Scenario s;
  const dm::SystemParams p = point_params(a, &s);
  const dm::EffectiveModel e = dm::effective_model(p);
  warn(e.warnings);
  const double n_th = s.mean_n_th();
  dm::Json j;
  j["n_th"] = n_th;
  j["reduced"] = phonons_json(dm::phonon_report(dm::reduced_lyapunov(e, {p.mech[0].n_th, p.mech[1].n_th})), n_th);
  if (full) j["full"] = phonons_json(dm::phonon_report(dm::solve_lyapunov(dm::build_dynamics(p))), n_th);
  if (p.delta_omega() != 0.0) {
    const auto lim = dm::dark_mode_limit(0.5 * (p.mech[0].gamma + p.mech[1].gamma), p.delta_omega(), n_th);
    j["dark_limit_over_nth"] = {{"exact", lim.exact / n_th}, {"approx", lim.approx / n_th}};
  }
  print(j);
  return 0;
}

struct PsdArgs {
  PointArgs point;
  std::vector<double> weights;
  std::size_t points = 2001;
  int fit = 0;
  std::string out;
};

int cmd_psd(const PsdArgs& a) {
  dm::SystemParams p = point_params(a.point);
  if (!a.weights.empty()) p.probe_weights = {a.weights[0], a.weights[1]};
  const dm::EffectiveModel e = dm::effective_model(p);
  warn(e.warnings);
  const dm::Spectrum s = dm::probe_psd(dm::build_dynamics(p), p.probe_weights, dm::default_grid(e, a.points));
  if (!a.out.empty()) {
    dm::write_spectrum_csv(s, a.out);
    std::cerr << "wrote " << a.out << "\n";
  }
  dm::Json j;
  j["points"] = s.size();
  j["probe_weights"] = {p.probe_weights[0], p.probe_weights[1]};
  if (a.fit > 0) {
    const dm::LorentzianFit fit = dm::fit_lorentzians(s, a.fit);
    const auto occ = dm::spectral_thermometry(fit, p.probe_weights);
    dm::Json peaks = dm::Json::array();
    for (std::size_t k = 0; k < fit.peaks.size(); ++k)
      peaks.push_back({{"center_hz", dm::to_hz(fit.peaks[k].center)},
                       {"half_width_hz", dm::to_hz(fit.peaks[k].half_width)},
                       {"occupation", occ.per_peak[k]}});
    j["fit"] = {{"peaks", peaks}, {"offset", fit.offset}, {"residual_norm", fit.residual_norm}};
  }
  if (a.out.empty() && a.fit == 0) {
    std::printf("freq_hz,psd\n");
    for (std::size_t k = 0; k < s.size(); ++k) std::printf("%.17g,%.17g\n", dm::to_hz(s.freq[k]), s.values[k]);
    return 0;
  }
  print(j);
  return 0;
}

struct LimitArgs {
  std::optional<std::string> scenario;
  std::optional<double> gamma_hz, delta_omega_hz;
  double n_th = 1.0;
};

int cmd_limit(const LimitArgs& a) {
  double gamma = 0.0, dw = 0.0, n_th = a.n_th;
  if (a.scenario) {
    const dm::Scenario s = resolve_scenario(*a.scenario);
    gamma = 0.5 * (s.base.mech[0].gamma + s.base.mech[1].gamma);
    dw = s.base.delta_omega();
    n_th = 1.0;
  }
  if (a.gamma_hz) gamma = dm::hz(*a.gamma_hz);
  if (a.delta_omega_hz) dw = dm::hz(*a.delta_omega_hz);
  if (!(gamma > 0.0)) throw dm::ValidationError("limit needs a scenario or --gamma-hz > 0");
  const auto lim = dm::dark_mode_limit(gamma, dw, n_th);
  print({{"gamma_hz", dm::to_hz(gamma)},
         {"delta_omega_hz", dm::to_hz(dw)},
         {"n_th", n_th},
         {"ep_Gamma1_hz", 0.5 * std::abs(dm::to_hz(dw))},
         {"exact", lim.exact},
         {"approx", lim.approx}});
  return 0;
}

struct TrajArgs {
  PointArgs point;
  dm::TrajectoryConfig cfg;
  std::optional<double> dt;
  bool full = false;
  std::string out;
};

int cmd_trajectory(TrajArgs a) {
  dm::Scenario s;
  const dm::SystemParams p = point_params(a.point, &s);
  const dm::EffectiveModel e = dm::effective_model(p);
  warn(e.warnings);
  const std::array<double, 2> n_th{p.mech[0].n_th, p.mech[1].n_th};
  if (a.dt) {
    a.cfg.dt = *a.dt;
  } else {
    const auto modes = dm::eigenmodes_numeric(e);
    a.cfg.dt = 0.25 / std::min(modes.plus().gamma, modes.minus().gamma);
  }
  dm::Trajectory tr;
  dm::PhononReport lyap;
  if (a.full) {
    const dm::DynamicsModel model = dm::build_dynamics(p);
    tr = dm::simulate(model, a.cfg);
    lyap = dm::phonon_report(dm::solve_lyapunov(model));
  } else {
    tr = dm::simulate(e, n_th, a.cfg);
    lyap = dm::phonon_report(dm::reduced_lyapunov(e, n_th));
  }

  if (!a.out.empty()) {
    std::ofstream csv(a.out, std::ios::binary);
    if (!csv) throw dm::Error("cannot open " + a.out + " for writing");
    csv << "time_s";
    static const char* names[] = {"b1", "b2", "a1", "a2"};
    for (Eigen::Index m = 0; m < tr.states.rows(); ++m) csv << ",re_" << names[m] << ",im_" << names[m];
    csv << "\n";
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      csv << dm::csv::number(tr.times[k]);
      for (Eigen::Index m = 0; m < tr.states.rows(); ++m) {
        const auto v = tr.states(m, static_cast<Eigen::Index>(k));
        csv << ',' << dm::csv::number(v.real()) << ',' << dm::csv::number(v.imag());
      }
      csv << "\n";
    }
    dm::Json meta;
    meta["tool"] = std::string(dm::kToolName);
    meta["version"] = std::string(dm::kToolVersion);
    meta["seed"] = a.cfg.seed;
    meta["rng"] = std::string(dm::NormalStream::kIdentity);
    meta["model"] = a.full ? "full" : "reduced";
    meta["frame_hz"] = dm::to_hz(tr.carrier);
    meta["trajectory"] = {{"dt_s", a.cfg.dt},
                          {"n_steps", a.cfg.n_steps},
                          {"n_burn_in", a.cfg.n_burn_in},
                          {"record_stride", a.cfg.record_stride}};
    meta["config"] = dm::to_json(s);
    std::ofstream(a.out + ".meta.json", std::ios::binary) << meta.dump(2) << "\n";
    std::cerr << "wrote " << a.out << "\n";
  }

  const auto est = dm::estimate_occupations(tr);
  auto series = [](const dm::SeriesEstimate& x, double lyapunov) {
    return dm::Json{{"mean", x.mean},
                    {"std_error", x.std_error},
                    {"autocorr_samples", x.autocorr_time},
                    {"lyapunov", lyapunov},
                    {"z_score", x.std_error > 0.0 ? (x.mean - lyapunov) / x.std_error : 0.0}};
  };
  print({{"dt_s", a.cfg.dt},
         {"samples", est.samples},
         {"batches", est.n_batches},
         {"n1", series(est.n1, lyap.n1)},
         {"n2", series(est.n2, lyap.n2)},
         {"n_total", series(est.n_total, lyap.n_total)}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-mode dark-mode optomechanical cooling: sweeps, eigenmodes, spectra"};
  app.set_version_flag("--version", std::string(dm::kToolVersion));
  app.require_subcommand(1);

  auto* scenario = app.add_subcommand("scenario", "built-in scenarios and sweeps");
  scenario->require_subcommand(1);
  auto* list = scenario->add_subcommand("list", "list built-in scenarios");
  RunArgs run;
  auto* run_cmd = scenario->add_subcommand("run", "run a sweep and write CSV/JSON plus metadata");
  run_cmd->add_option("scenario", run.scenario, "built-in scenario name or config file")->required();
  run_cmd->add_option("-o,--out", run.out, "output directory")->capture_default_str();
  run_cmd->add_option("-f,--format", run.format, "table format")->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  run_cmd->add_option("-j,--jobs", run.jobs, "worker threads (DARKMODE_THREADS overrides)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_flag("--full", run.full, "also solve the four-mode model");
  run_cmd->add_flag("--spectra", run.spectra, "write a probe spectrum per point");
  run_cmd->add_flag("--trajectory-check", run.trajectory, "cross-check with a stochastic run per point");
  run_cmd->add_option("--trajectory-steps", run.trajectory_steps, "steps per trajectory check")
      ->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "base seed; point k uses seed ^ k")->capture_default_str();
  run_cmd->add_flag("--timestamp", run.timestamp, "record the creation time in the metadata");

  PointArgs eigen;
  auto* eigen_cmd = app.add_subcommand("eigen", "eigenmodes of the effective Hamiltonian at one point");
  add_point_args(eigen_cmd, eigen);

  PointArgs cool;
  bool cool_full = false;
  auto* cool_cmd = app.add_subcommand("cool", "steady-state phonon numbers at one point");
  add_point_args(cool_cmd, cool);
  cool_cmd->add_flag("--full", cool_full, "also solve the four-mode model");

  PsdArgs psd;
  auto* psd_cmd = app.add_subcommand("psd", "probe power spectral density at one point");
  add_point_args(psd_cmd, psd.point);
  psd_cmd->add_option("--weights", psd.weights, "probe weights c1 c2")->expected(2);
  psd_cmd->add_option("--points", psd.points, "grid points")->check(CLI::Range(16, 10000000))
      ->capture_default_str();
  psd_cmd->add_option("--fit", psd.fit, "fit 1 or 2 Lorentzians")->check(CLI::IsMember({1, 2}));
  psd_cmd->add_option("-o,--out", psd.out, "spectrum CSV path (stdout if omitted and no fit)");

  LimitArgs limit;
  auto* limit_cmd = app.add_subcommand("limit", "dark-mode cooling limit n/n_th at the EP");
  limit_cmd->add_option("scenario", limit.scenario, "take gamma and the splitting from a scenario");
  limit_cmd->add_option("--gamma-hz", limit.gamma_hz, "mechanical damping");
  limit_cmd->add_option("--delta-omega-hz", limit.delta_omega_hz, "mechanical splitting");
  limit_cmd->add_option("--n-th", limit.n_th, "thermal occupation")->capture_default_str();

  TrajArgs traj;
  traj.cfg.n_steps = 200000;
  traj.cfg.n_burn_in = 0;
  auto* traj_cmd = app.add_subcommand("trajectory", "stochastic run and occupation estimate at one point");
  add_point_args(traj_cmd, traj.point);
  traj_cmd->add_option("--dt", traj.dt, "step in s (default: a quarter of the slowest decay time)");
  traj_cmd->add_option("--steps", traj.cfg.n_steps, "total steps")->capture_default_str();
  traj_cmd->add_option("--burn-in", traj.cfg.n_burn_in, "discarded leading steps")->capture_default_str();
  traj_cmd->add_option("--stride", traj.cfg.record_stride, "record every k-th step")->capture_default_str();
  traj_cmd->add_option("--seed", traj.cfg.seed, "seed")->capture_default_str();
  traj_cmd->add_flag("--full", traj.full, "simulate the four-mode model instead of the reduced one");
  traj_cmd->add_option("-o,--out", traj.out, "trajectory CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*list) return cmd_list();
    if (*run_cmd) return cmd_run(run);
    if (*eigen_cmd) return cmd_eigen(eigen);
    if (*cool_cmd) return cmd_cool(cool, cool_full);
    if (*psd_cmd) return cmd_psd(psd);
    if (*limit_cmd) return cmd_limit(limit);
    if (*traj_cmd) return cmd_trajectory(traj);
  } catch (const dm::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
