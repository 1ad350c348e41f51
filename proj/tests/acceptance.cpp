// Acceptance checks. One PASS/FAIL line per criterion with the measured
// figure and wall time; exits nonzero if any criterion fails.

#include "darkmode/darkmode.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <unistd.h>

using namespace darkmode;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::array<double, 2> baths(const SystemParams& p) { return {p.mech[0].n_th, p.mech[1].n_th}; }

// 1 -------------------------------------------------------------------------

Outcome ep_location() {
  const Scenario a1 = builtin_scenario("A1");
  const std::vector<double> grid = a1.control_values();
  const bool on_grid = std::any_of(grid.begin(), grid.end(), [](double g) { return to_hz(g) == 40.0; });
  const EpLocation loc = locate_ep(a1.base, grid);
  const std::size_t k = loc.grid_index;
  const double step = std::max(k + 1 < grid.size() ? grid[k + 1] - grid[k] : 0.0, k > 0 ? grid[k] - grid[k - 1] : 0.0);
  const double analytic_err = rel(to_hz(loc.analytic), 40.0);
  const double gap_offset = std::abs(loc.grid_minimum - hz(40.0));
  return {on_grid && analytic_err < 1e-10 && gap_offset <= step,
          fmt("analytic %.12g Hz, gap minimum %.12g Hz (offset %.3g steps), 40 Hz on grid: %s", to_hz(loc.analytic),
              to_hz(loc.grid_minimum), gap_offset / step, on_grid ? "yes" : "no")};
}

// 2 -------------------------------------------------------------------------

Outcome eigenmode_formulas() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) { return lo * std::pow(hi / lo, u(rng)); };
  double worst_omega = 0.0, worst_gamma = 0.0;
  int regime_mismatch = 0;
  for (int t = 0; t < 1000; ++t) {
    SystemParams p = default_params(log_uniform(1.0, 1000.0));
    const double mean = hz(log_uniform(1e5, 1e7));
    const double dw = p.delta_omega();
    p.mech[0].omega = mean + 0.5 * dw;
    p.mech[1].omega = mean - 0.5 * dw;
    p.mech[0].gamma = p.mech[1].gamma = hz(log_uniform(0.01, 10.0));
    p.cav[0].kappa = hz(log_uniform(1e4, 1e6));
    p.cav[0].detuning = -mean;
    p = with_cavity1_coupling(p, hz(log_uniform(0.01, 1e4)));
    const EffectiveModel e = effective_model(p);
    const auto cf = eigenmodes_closed_form(e);
    const auto nu = eigenmodes_numeric(e);
    regime_mismatch += cf.regime != nu.regime;
    for (int k = 0; k < 2; ++k) {
      worst_omega = std::max(worst_omega, rel(nu.modes[k].omega, cf.modes[k].omega));
      worst_gamma = std::max(worst_gamma, rel(nu.modes[k].gamma, cf.modes[k].gamma));
    }
  }
  return {worst_omega <= 1e-10 && worst_gamma <= 1e-10 && regime_mismatch == 0,
          fmt("1000 sets: max rel err omega %.2e, gamma %.2e, regime mismatches %d", worst_omega, worst_gamma,
              regime_mismatch)};
}

// 3 -------------------------------------------------------------------------

Outcome closed_form_equivalence() {
  SystemParams base = default_params(80.0);
  const double gamma = hz(0.635);
  base.mech[0].gamma = base.mech[1].gamma = gamma;
  const double n_th = base.mech[0].n_th;
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double g1 = hz(0.1 * std::pow(1e4, k / 199.0));
    const SystemParams p = with_cavity1_coupling(base, g1);
    const double got = phonon_report(reduced_lyapunov(effective_model(p), baths(p))).n_total;
    worst = std::max(worst, rel(got, phonon_closed_form(gamma, g1, p.delta_omega(), n_th)));
  }
  return {worst <= 1e-8, fmt("200 points 0.1..1000 Hz: max rel err %.2e", worst)};
}

// 4 -------------------------------------------------------------------------

Outcome cooling_floor() {
  const SweepResult r = run_sweep(builtin_scenario("A1"));
  if (r.failures() || !r.dark_limit) return {false, "sweep incomplete"};
  std::size_t best = 0;
  for (std::size_t k = 0; k < r.rows.size(); ++k)
    if (r.rows[k].reduced->n_total < r.rows[best].reduced->n_total) best = k;
  if (best == 0 || best + 1 >= r.rows.size()) return {false, "minimum at the grid edge"};
  const double err = rel(r.rows[best].reduced->n_total, r.dark_limit->exact);
  const double step = std::max(r.rows[best + 1].control - r.rows[best].control,
                               r.rows[best].control - r.rows[best - 1].control);
  const bool near_ep = std::abs(r.rows[best].control - hz(40.0)) <= step;
  bool rising = true;
  for (std::size_t k = best + 1; k < r.rows.size(); ++k)
    rising = rising && r.rows[k].reduced->n_total > r.rows[k - 1].reduced->n_total;
  return {err <= 0.01 && near_ep && rising,
          fmt("minimum n/n_th %.5g at %.4g Hz, limit %.5g (rel %.2e), rising afterward: %s",
              r.rows[best].reduced->n_total / r.n_th_ref, to_hz(r.rows[best].control), r.dark_limit->exact / r.n_th_ref,
              err, rising ? "yes" : "no")};
}

// 5 -------------------------------------------------------------------------

Outcome dark_mode_breaking() {
  const SweepResult r = run_sweep(builtin_scenario("A2"));
  if (r.failures() || !r.dark_limit) return {false, "sweep incomplete"};
  bool monotone = true;
  for (std::size_t k = 1; k < r.rows.size(); ++k)
    monotone = monotone && r.rows[k].reduced->n_total <= r.rows[k - 1].reduced->n_total;
  const double ratio = r.rows.back().reduced->n_total / r.dark_limit->exact;
  return {ratio <= 0.1 && monotone,
          fmt("endpoint / limit = %.4f, monotone non-increasing: %s", ratio, monotone ? "yes" : "no")};
}

// 6 -------------------------------------------------------------------------

Outcome orthogonal_coupling() {
  const SweepResult r = run_sweep(builtin_scenario("B"));
  if (r.failures() || !r.dark_limit) return {false, "sweep incomplete"};
  const EigenmodeReport& first = *r.rows.front().eigen();
  double drift = 0.0;
  bool widths_up = true, monotone = true;
  for (std::size_t k = 1; k < r.rows.size(); ++k) {
    const EigenmodeReport& e = *r.rows[k].eigen();
    const EigenmodeReport& prev = *r.rows[k - 1].eigen();
    for (int m = 0; m < 2; ++m) {
      drift = std::max(drift, rel(e.modes[m].omega, first.modes[m].omega));
      widths_up = widths_up && e.modes[m].gamma > prev.modes[m].gamma;
    }
    monotone = monotone && r.rows[k].reduced->n_total <= r.rows[k - 1].reduced->n_total;
  }
  const double end_ratio = r.rows.back().reduced->n_total / r.dark_limit->exact;
  return {drift <= 1e-9 && widths_up && monotone && end_ratio < 1.0,
          fmt("frequency drift %.2e, linewidths increasing: %s, n monotone: %s, endpoint / limit = %.4f", drift,
              widths_up ? "yes" : "no", monotone ? "yes" : "no", end_ratio)};
}

// 7 -------------------------------------------------------------------------

Outcome full_vs_reduced() {
  double worst = 0.0, worst_adiabatic = 0.0;
  std::size_t points = 0;
  for (const char* name : {"A1", "B"}) {
    const Scenario sc = builtin_scenario(name);
    for (double c : sc.control_values()) {
      const SystemParams p = sc.at(c);
      worst_adiabatic = std::max(worst_adiabatic, adiabaticity_ratio(p));
      const double full = phonon_report(solve_lyapunov(build_dynamics(p))).n_total;
      const double red = phonon_report(reduced_lyapunov(effective_model(p), baths(p))).n_total;
      worst = std::max(worst, rel(full, red));
      ++points;
    }
  }
  return {worst <= 0.02 && worst_adiabatic <= 0.09,
          fmt("%zu points: max rel diff %.3e, max adiabaticity %.3f", points, worst, worst_adiabatic)};
}

// 8 -------------------------------------------------------------------------

Outcome wiener_khinchin() {
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int accepted = 0;
  while (accepted < 20) {
    SystemParams p = default_params(20.0 + 180.0 * u(rng));
    p.mech[0].n_th = 10.0 + 1e3 * u(rng);
    p.mech[1].n_th = 10.0 + 1e3 * u(rng);
    p.cav[0].n_opt = 0.1 * u(rng);
    p.cav[1].n_opt = 0.1 * u(rng);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) p.coupling.G(i, j) = hz(8e3) * (u(rng) - 0.5);
    const std::array<double, 2> w{u(rng) - 0.5, u(rng) - 0.5};
    const DynamicsModel model = build_dynamics(p);
    if (!stability_check(model).stable) continue;
    ++accepted;
    const double target = solve_lyapunov(model).quadratic_form(detail::embed_weights(w, 4));
    const double got = integrate(probe_psd(model, w, integration_grid(effective_model(p))));
    worst = std::max(worst, rel(got, target));
  }
  return {worst <= 0.005, fmt("20 configurations: max rel err %.3e", worst)};
}

// 9 -------------------------------------------------------------------------

Outcome spectral_extraction() {
  auto point = [](double gamma1_hz) {
    SystemParams p = builtin_scenario("A1").at(hz(gamma1_hz));
    p.mech[0].gamma = p.mech[1].gamma = hz(0.635);
    return p;
  };
  const std::array<double, 2> symmetric{M_SQRT1_2, M_SQRT1_2};
  double pre_worst = 0.0, post_worst = 0.0;
  for (double g1 : {10.0, 20.0, 30.0}) {
    const SystemParams p = point(g1);
    const EffectiveModel e = effective_model(p);
    const auto cf = eigenmodes_closed_form(e);
    const LorentzianFit fit = fit_lorentzians(probe_psd(build_dynamics(p), symmetric, default_grid(e)), 2);
    const double lw = cf.plus().gamma;
    // peaks come back in ascending frequency; minus is the lower branch
    pre_worst = std::max({pre_worst, std::abs(fit.peaks[0].center - cf.minus().omega) / lw,
                          std::abs(fit.peaks[1].center - cf.plus().omega) / lw,
                          rel(fit.peaks[1].center - fit.peaks[0].center, cf.plus().omega - cf.minus().omega),
                          rel(fit.peaks[0].half_width, lw), rel(fit.peaks[1].half_width, lw)});
  }
  for (double g1 : {60.0, 100.0, 300.0, 1000.0}) {
    const SystemParams p = point(g1);
    const EffectiveModel e = effective_model(p);
    const auto cf = eigenmodes_closed_form(e);
    // the narrow peak needs the center-dense grid
    const LorentzianFit fit = fit_lorentzians(probe_psd(build_dynamics(p), symmetric, integration_grid(e)), 2);
    auto widths = std::array{fit.peaks[0].half_width, fit.peaks[1].half_width};
    std::sort(widths.begin(), widths.end());
    post_worst = std::max({post_worst, rel(widths[0], cf.plus().gamma), rel(widths[1], cf.minus().gamma)});
  }
  return {pre_worst <= 0.02 && post_worst <= 0.05,
          fmt("pre-EP max rel err %.3e (limit 2%%), post-EP width max rel err %.3e (limit 5%%)", pre_worst,
              post_worst)};
}

// 10 ------------------------------------------------------------------------

Outcome trajectory_oracle() {
  struct Check {
    const char* label;
    double mean, se, expect;
  };
  std::vector<Check> checks;
  auto run = [](const EffectiveModel& e, const std::array<double, 2>& n_th, double dt, std::size_t steps,
                std::uint64_t seed) {
    TrajectoryConfig cfg;
    cfg.dt = dt;
    cfg.n_steps = steps;
    cfg.n_burn_in = 0;
    cfg.seed = seed;
    return estimate_occupations(simulate(e, n_th, cfg));
  };

  {
    SystemParams p = default_params(80.0);
    p.mech[0].n_th = 300.0;
    p.mech[1].n_th = 800.0;
    const auto est = run(effective_model(p), baths(p), 0.05, 200000, 11);
    checks.push_back({"thermal n1", est.n1.mean, est.n1.std_error, 300.0});
    checks.push_back({"thermal n2", est.n2.mean, est.n2.std_error, 800.0});
  }
  {
    const SystemParams p = builtin_scenario("A1").at(hz(20.0));
    const EffectiveModel e = effective_model(p);
    const auto lyap = phonon_report(reduced_lyapunov(e, baths(p)));
    const auto est = run(e, baths(p), 0.25 / eigenmodes_numeric(e).plus().gamma, 200000, 12);
    checks.push_back({"pre-EP n1", est.n1.mean, est.n1.std_error, lyap.n1});
    checks.push_back({"pre-EP n2", est.n2.mean, est.n2.std_error, lyap.n2});
    checks.push_back({"pre-EP n_total", est.n_total.mean, est.n_total.std_error, lyap.n_total});
  }
  {
    SystemParams p = builtin_scenario("A1").at(hz(1000.0));
    p.mech[0].gamma = p.mech[1].gamma = hz(0.635);
    const EffectiveModel e = effective_model(p);
    const auto lyap = phonon_report(reduced_lyapunov(e, baths(p)));
    const auto est = run(e, baths(p), 0.25 / eigenmodes_numeric(e).plus().gamma, 300000, 13);
    checks.push_back({"dark n1", est.n1.mean, est.n1.std_error, lyap.n1});
    checks.push_back({"dark n2", est.n2.mean, est.n2.std_error, lyap.n2});
    checks.push_back({"dark n_total", est.n_total.mean, est.n_total.std_error,
                      phonon_closed_form(hz(0.635), e.Gamma1, p.delta_omega(), p.mech[0].n_th)});
  }

  double worst_z = 0.0;
  std::string worst_label;
  for (const auto& c : checks) {
    const double z = std::abs(c.mean - c.expect) / c.se;
    if (z > worst_z) {
      worst_z = z;
      worst_label = c.label;
    }
  }

  double worst_fp = 0.0;
  for (const Scenario& sc : builtin_scenarios()) {
    const auto grid = sc.control_values();
    for (std::size_t k : {std::size_t{0}, grid.size() / 2, grid.size() - 1}) {
      const SystemParams p = sc.at(grid[k]);
      const EffectiveModel e = effective_model(p);
      const MatXc Ar = e.rotating_drift();
      const Eigen::MatrixXd Dr = reduced_diffusion(e, baths(p));
      const MatXc Cr = covariance_from_moments(solve_lyapunov(Ar, Dr));
      for (double dt : {1e-8, 1e-6, 1e-4, 1e-3}) {
        const Propagators prop = exact_propagators(Ar, Dr, dt);
        worst_fp = std::max(worst_fp, (prop.phi * Cr * prop.phi.adjoint() + prop.Q - Cr).norm() / Cr.norm());
      }
    }
  }
  return {worst_z <= 3.0 && worst_fp <= 1e-10,
          fmt("%zu occupation checks, worst |z| = %.2f (%s); fixed point max rel residual %.2e", checks.size(),
              worst_z, worst_label.c_str(), worst_fp)};
}

// 11 ------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("darkmode_acceptance_" + std::to_string(::getpid()));
  std::size_t compared = 0, differing = 0;
  for (const Scenario& sc : builtin_scenarios()) {
    SweepOptions opt;
    opt.seed = 7;
    opt.with_full_model = true;
    if (sc.name == "B") {
      opt.with_trajectory_check = true;
      opt.trajectory_steps = 20000;
    }
    for (OutputFormat f : {OutputFormat::csv, OutputFormat::json}) {
      std::vector<fs::path> first, second;
      for (int run = 0; run < 2; ++run) {
        const SweepResult r = run_sweep(sc, opt);
        (run ? second : first) = emit(r, root / std::to_string(run), {f, false});
      }
      for (std::size_t k = 0; k < first.size(); ++k) {
        ++compared;
        differing += slurp(first[k]) != slurp(second[k]);
      }
    }
  }
  fs::remove_all(root);
  return {compared == 12 && differing == 0, fmt("%zu file pairs compared, %zu differ", compared, differing)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"EP location", 1.0, ep_location},
      {"eigenmode formulas", 1.0, eigenmode_formulas},
      {"closed-form phonon number", 1.0, closed_form_equivalence},
      {"dark-mode cooling floor", 1.0, cooling_floor},
      {"dark-mode breaking", 5.0, dark_mode_breaking},
      {"orthogonal-coupling cooling", 5.0, orthogonal_coupling},
      {"full vs reduced model", 10.0, full_vs_reduced},
      {"Wiener-Khinchin", 10.0, wiener_khinchin},
      {"spectral extraction", 10.0, spectral_extraction},
      {"trajectory oracle", 60.0, trajectory_oracle},
      {"determinism", 10.0, determinism},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.ok && in_time;
    failed += !pass;
    std::printf("%s %2zu %s: %s [%.3f s of %.0f s%s]\n", pass ? "PASS" : "FAIL", i + 1, c.name, o.detail.c_str(), secs,
                c.limit_s, in_time ? "" : ", too slow");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
