#pragma once

// Parameter sweeps over a Scenario's control grid. Grid points are
// independent; results land in a pre-sized vector so the output does not
// depend on scheduling.

#include "darkmode/scenario.hpp"
#include "darkmode/spectra.hpp"
#include "darkmode/trajectory.hpp"

#include <atomic>
#include <cstdlib>
#include <optional>
#include <thread>

namespace darkmode {

struct SweepOptions {
  bool with_full_model = false;
  bool with_spectra = false;
  bool with_trajectory_check = false;
  unsigned parallelism = 1;
  std::uint64_t seed = 1;
  std::size_t trajectory_steps = 200000;
};

/// Thread count: DARKMODE_THREADS overrides the requested value.
inline unsigned resolve_parallelism(unsigned requested) {
  if (const char* env = std::getenv("DARKMODE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, requested);
}

struct SweepRow {
  double control = 0.0;  ///< rad/s
  bool ok = false;
  std::string status;    ///< "ok" or the failure reason
  std::optional<EigenmodeReport> closed_form;
  std::optional<EigenmodeReport> numeric;
  std::optional<PhononReport> reduced;
  std::optional<PhononReport> full;
  std::optional<OccupationEstimate> trajectory;
  std::optional<Spectrum> spectrum;
  double adiabaticity = 0.0;
  std::vector<std::string> warnings;

  /// Closed form when it applies, numeric otherwise.
  const EigenmodeReport* eigen() const {
    if (closed_form) return &*closed_form;
    return numeric ? &*numeric : nullptr;
  }
};

struct SweepResult {
  Scenario scenario;
  SweepOptions options;
  double n_th_ref = 0.0;                   ///< mean thermal occupation
  std::optional<DarkModeLimit> dark_limit; ///< absent for degenerate modes
  std::vector<SweepRow> rows;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.ok; }));
  }
};

/// Evaluate one grid point. Throws on any numeric or validation failure.
inline SweepRow evaluate_point(const Scenario& sc, double control, const SweepOptions& opt, std::size_t index) {
  SweepRow row;
  row.control = control;
  const SystemParams p = sc.at(control);
  const EffectiveModel eff = effective_model(p);
  row.adiabaticity = eff.adiabaticity;
  row.warnings = eff.warnings;

  row.numeric = eigenmodes_numeric(eff);
  try {
    row.closed_form = eigenmodes_closed_form(eff);
  } catch (const ClosedFormInapplicable&) {
  }

  const std::array<double, 2> n_th{p.mech[0].n_th, p.mech[1].n_th};
  const MomentMatrix reduced = reduced_lyapunov(eff, n_th);
  row.reduced = phonon_report(reduced, sc.mean_n_th());

  if (opt.with_full_model || opt.with_spectra) {
    const DynamicsModel model = build_dynamics(p);
    if (opt.with_full_model) row.full = phonon_report(solve_lyapunov(model), sc.mean_n_th());
    if (opt.with_spectra) row.spectrum = probe_psd(model, p.probe_weights, default_grid(eff));
  }

  if (opt.with_trajectory_check) {
    // Exact propagators make dt a sampling choice: a quarter of the slowest
    // decay time keeps the autocorrelation a few samples long.
    const Mat2c shifted = eff.H - eff.mean_omega() * Mat2c::Identity();
    const auto ev = Eigen::ComplexEigenSolver<Mat2c>(shifted, false).eigenvalues();
    const double slowest = std::min(-ev(0).imag(), -ev(1).imag());
    TrajectoryConfig cfg;
    cfg.dt = 0.25 / slowest;
    cfg.n_steps = opt.trajectory_steps;
    cfg.n_burn_in = 0;
    cfg.seed = opt.seed ^ static_cast<std::uint64_t>(index);
    row.trajectory = estimate_occupations(simulate(eff, n_th, cfg));
  }

  row.ok = true;
  row.status = "ok";
  return row;
}

inline SweepResult run_sweep(const Scenario& sc, const SweepOptions& opt = {}) {
  sc.validate();
  SweepResult res;
  res.scenario = sc;
  res.options = opt;
  res.n_th_ref = sc.mean_n_th();
  if (sc.base.delta_omega() != 0.0)
    res.dark_limit = dark_mode_limit(0.5 * (sc.base.mech[0].gamma + sc.base.mech[1].gamma),
                                     sc.base.delta_omega(), res.n_th_ref);

  const std::vector<double> grid = sc.control_values();
  res.rows.resize(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < grid.size(); k = next++) {
      try {
        res.rows[k] = evaluate_point(sc, grid[k], opt, k);
      } catch (const std::exception& e) {
        SweepRow failed;
        failed.control = grid[k];
        failed.status = std::string("failed: ") + e.what();
        res.rows[k] = std::move(failed);
      }
    }
  };
  const unsigned threads = std::min<unsigned>(resolve_parallelism(opt.parallelism),
                                              static_cast<unsigned>(grid.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  if (2 * res.failures() > res.rows.size())
    throw NumericError("sweep '" + sc.name + "': " + std::to_string(res.failures()) + " of " +
                       std::to_string(res.rows.size()) + " points failed");
  return res;
}

}  // namespace darkmode
