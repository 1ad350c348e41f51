#pragma once

// Sweep scenarios: a base parameter set, a control axis, and a rule that
// derives all four couplings from the control value at each grid point.

#include "darkmode/effective.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace darkmode {

enum class ControlAxis { none, gamma1, gamma12 };
enum class GridSpacing { linear, log };

/// How couplings follow the control value.
///  - fixed: use base.coupling unchanged (single point).
///  - dark_mode_breaking: g11 = g21, g22 = 0. Cavity 1 gives
///    Gamma11 = Gamma21 = Gamma1, cavity 2 acts on mode 1 only (Gamma12).
///  - balanced: g11 = g21, g12 = -g22, powers set so Gamma2 = -Gamma1; the
///    cavity-mediated coupling cancels and each mode sees 2 Gamma1 damping.
enum class CouplingRule { fixed, dark_mode_breaking, balanced };

constexpr std::string_view to_string(ControlAxis a) {
  switch (a) {
    case ControlAxis::none: return "none";
    case ControlAxis::gamma1: return "Gamma1";
    case ControlAxis::gamma12: return "Gamma12";
  }
  return "?";
}
constexpr std::string_view to_string(GridSpacing s) { return s == GridSpacing::log ? "log" : "linear"; }
constexpr std::string_view to_string(CouplingRule r) {
  switch (r) {
    case CouplingRule::fixed: return "fixed";
    case CouplingRule::dark_mode_breaking: return "dark_mode_breaking";
    case CouplingRule::balanced: return "balanced";
  }
  return "?";
}

struct GridSpec {
  GridSpacing spacing = GridSpacing::linear;
  double start = 0.0;  ///< rad/s
  double stop = 0.0;   ///< rad/s
  std::size_t points = 1;
  std::vector<double> include;  ///< extra exact grid points, rad/s
};

struct Scenario {
  std::string name;
  std::string description;
  SystemParams base;
  ControlAxis axis = ControlAxis::none;
  GridSpec grid;
  CouplingRule rule = CouplingRule::fixed;
  double fixed_gamma1 = 0.0;   ///< Gamma1 held when sweeping Gamma12
  double fixed_gamma12 = 0.0;  ///< Gamma12 held when sweeping Gamma1

  void validate() const;
  std::vector<double> control_values() const;
  SystemParams at(double control) const;
  double mean_n_th() const { return 0.5 * (base.mech[0].n_th + base.mech[1].n_th); }
};

inline void Scenario::validate() const {
  base.validate();
  using detail::require;
  require(!name.empty(), "scenario.name must not be empty");
  if (axis == ControlAxis::none) {
    require(rule == CouplingRule::fixed, "sweep.rule requires sweep.axis (axis 'none' only allows rule 'fixed')");
    return;
  }
  require(rule != CouplingRule::fixed, "sweep.axis requires a coupling rule other than 'fixed'");
  require(grid.points >= 1, "sweep.points must be >= 1");
  require(std::isfinite(grid.start) && std::isfinite(grid.stop), "sweep grid bounds must be finite");
  require(grid.start >= 0.0 && grid.stop >= grid.start, "sweep grid must satisfy 0 <= start_hz <= stop_hz");
  if (grid.spacing == GridSpacing::log)
    require(grid.start > 0.0, "sweep.start_hz must be > 0 for log spacing");
  if (grid.points > 1) require(grid.stop > grid.start, "sweep.stop_hz must exceed start_hz");
  for (double v : grid.include) require(std::isfinite(v) && v >= 0.0, "sweep.include_hz entries must be >= 0");
  require(fixed_gamma1 >= 0.0 && fixed_gamma12 >= 0.0, "sweep fixed rates must be >= 0");
  if (rule == CouplingRule::balanced) {
    require(axis == ControlAxis::gamma1, "sweep.rule 'balanced' conflicts with sweep.axis: balanced sweeps Gamma1");
    require(fixed_gamma12 == 0.0, "sweep.rule 'balanced' conflicts with sweep.fixed_Gamma12_hz: Gamma12 is derived");
    require(fixed_gamma1 == 0.0, "sweep.rule 'balanced' conflicts with sweep.fixed_Gamma1_hz: Gamma1 is the control");
  }
  if (axis == ControlAxis::gamma1)
    require(fixed_gamma1 == 0.0, "sweep.axis 'Gamma1' conflicts with sweep.fixed_Gamma1_hz");
  if (axis == ControlAxis::gamma12)
    require(fixed_gamma12 == 0.0, "sweep.axis 'Gamma12' conflicts with sweep.fixed_Gamma12_hz");
}

/// Sorted, de-duplicated control values in rad/s.
inline std::vector<double> Scenario::control_values() const {
  if (axis == ControlAxis::none) return {0.0};
  std::vector<double> v;
  const std::size_t n = grid.points;
  if (n == 1) {
    v.push_back(grid.start);
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(n - 1);
      if (k == n - 1)
        v.push_back(grid.stop);
      else if (grid.spacing == GridSpacing::log)
        v.push_back(grid.start * std::pow(grid.stop / grid.start, t));
      else
        v.push_back(grid.start + (grid.stop - grid.start) * t);
    }
  }
  v.insert(v.end(), grid.include.begin(), grid.include.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline SystemParams Scenario::at(double control) const {
  SystemParams p = base;
  if (rule == CouplingRule::fixed) return p;
  const double gamma1 = axis == ControlAxis::gamma1 ? control : fixed_gamma1;
  const double gamma12 = axis == ControlAxis::gamma12 ? control : fixed_gamma12;
  const double k1 = p.cav[0].kappa, k2 = p.cav[1].kappa;
  const double g_cav1 = std::sqrt(gamma1 * k1);
  p.coupling.G.setZero();
  p.coupling.G(0, 0) = g_cav1;
  p.coupling.G(1, 0) = g_cav1;
  if (rule == CouplingRule::dark_mode_breaking) {
    p.coupling.G(0, 1) = std::sqrt(gamma12 * k2);
  } else {
    const double g_cav2 = std::sqrt(gamma1 * k2);
    p.coupling.G(0, 1) = g_cav2;
    p.coupling.G(1, 1) = -g_cav2;
  }
  return p;
}

// Default operating point ----------------------------------------------------

inline constexpr double kMeanFrequencyHz = 1.2e6;
inline constexpr double kGamma1Hz = 0.65;
inline constexpr double kGamma2Hz = 0.62;
inline constexpr double kLinewidth1Hz = 270e3;  // full energy linewidths
inline constexpr double kLinewidth2Hz = 290e3;
inline constexpr double kRoomTemperature = 300.0;

/// Two mechanical modes split by delta_omega around 1.2 MHz, both cavities
/// red-detuned by the mean mechanical frequency, no coupling.
inline SystemParams default_params(double delta_omega_hz) {
  SystemParams p;
  const double mean = hz(kMeanFrequencyHz);
  const double n_th = thermal_occupation(kRoomTemperature, mean);
  p.mech[0] = {mean + 0.5 * hz(delta_omega_hz), hz(kGamma1Hz), n_th};
  p.mech[1] = {mean - 0.5 * hz(delta_omega_hz), hz(kGamma2Hz), n_th};
  p.cav[0] = {CavityMode::kappa_from_linewidth_hz(kLinewidth1Hz), -mean, 0.0};
  p.cav[1] = {CavityMode::kappa_from_linewidth_hz(kLinewidth2Hz), -mean, 0.0};
  return p;
}

/// A1: dark-mode generation, sweep Gamma1 through the EP (dw = 80 Hz).
/// A2: dark-mode breaking, Gamma1 = 1 kHz held, sweep Gamma12.
/// B: orthogonal coupling vectors with Gamma1 + Gamma2 = 0 (dw = 60 Hz).
inline std::vector<Scenario> builtin_scenarios() {
  std::vector<Scenario> out;

  Scenario a1;
  a1.name = "A1";
  a1.description = "dark-mode generation: single cavity, sweep Gamma1 through the exceptional point";
  a1.base = default_params(80.0);
  a1.axis = ControlAxis::gamma1;
  a1.rule = CouplingRule::dark_mode_breaking;
  a1.grid = {GridSpacing::log, hz(0.5), hz(1000.0), 101, {hz(40.0)}};
  out.push_back(a1);

  Scenario a2;
  a2.name = "A2";
  a2.description = "dark-mode breaking: Gamma1 held at 1 kHz, sweep Gamma12 of the second cavity";
  a2.base = default_params(80.0);
  a2.axis = ControlAxis::gamma12;
  a2.rule = CouplingRule::dark_mode_breaking;
  a2.grid = {GridSpacing::linear, 0.0, hz(500.0), 41, {}};
  a2.fixed_gamma1 = hz(1000.0);
  out.push_back(a2);

  Scenario b;
  b.name = "B";
  b.description = "orthogonal coupling vectors: Gamma1 + Gamma2 = 0, sweep Gamma1";
  b.base = default_params(60.0);
  b.axis = ControlAxis::gamma1;
  b.rule = CouplingRule::balanced;
  b.grid = {GridSpacing::log, hz(0.5), hz(500.0), 41, {}};
  out.push_back(b);

  return out;
}

inline Scenario builtin_scenario(std::string_view name) {
  for (auto& s : builtin_scenarios())
    if (s.name == name) return s;
  throw ValidationError("unknown built-in scenario '" + std::string(name) + "'");
}

}  // namespace darkmode
