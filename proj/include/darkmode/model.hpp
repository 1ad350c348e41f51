#pragma once

// Physical parameters of the two-membrane, two-cavity-mode system and the
// linearized (rotating-wave) Langevin drift/diffusion built from them.
//
// Mode ordering everywhere: v = (b1, b2, a1, a2).

#include "darkmode/common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <limits>

namespace darkmode {

inline constexpr double kBoltzmann = 1.380649e-23;       // J/K
inline constexpr double kHbar = 1.054571817e-34;         // J s
inline constexpr double kAdiabaticityWarning = 0.1;

/// Thermal occupation k_B T / (hbar omega), high-temperature limit.
inline double thermal_occupation(double temperature_k, double omega) {
  return kBoltzmann * temperature_k / (kHbar * omega);
}

struct MechanicalMode {
  double omega = 0.0;  ///< rad/s
  double gamma = 0.0;  ///< amplitude decay rate, rad/s
  double n_th = 0.0;

  void validate(const char* name) const {
    using namespace std::string_literals;
    detail::require(std::isfinite(omega) && std::isfinite(gamma) && std::isfinite(n_th),
                    name + " has non-finite fields"s);
    detail::require(omega > 0.0, name + ".omega must be > 0"s);
    detail::require(gamma > 0.0, name + ".gamma must be > 0"s);
    detail::require(n_th >= 0.0, name + ".n_th must be >= 0"s);
  }
};

struct CavityMode {
  double kappa = 0.0;     ///< amplitude decay rate, rad/s
  double detuning = 0.0;  ///< drive minus cavity frequency, rad/s (< 0 red)
  double n_opt = 0.0;

  /// kappa from a full-width energy linewidth quoted in Hz.
  static double kappa_from_linewidth_hz(double linewidth_hz) { return hz(linewidth_hz / 2.0); }

  void validate(const char* name) const {
    using namespace std::string_literals;
    detail::require(std::isfinite(kappa) && std::isfinite(detuning) && std::isfinite(n_opt),
                    name + " has non-finite fields"s);
    detail::require(kappa > 0.0, name + ".kappa must be > 0"s);
    detail::require(n_opt >= 0.0, name + ".n_opt must be >= 0"s);
  }
};

/// Multiphoton couplings G(i, j) between mechanical mode i and cavity j.
struct CouplingMatrix {
  Eigen::Matrix2d G = Eigen::Matrix2d::Zero();

  /// G_ij = g_ij * alpha_j with alpha_j = sqrt(photon number), taken real.
  static CouplingMatrix from_single_photon(const Eigen::Matrix2d& g,
                                           const std::array<double, 2>& photons) {
    detail::require(photons[0] >= 0.0 && photons[1] >= 0.0, "photon numbers must be >= 0");
    CouplingMatrix c;
    for (int j = 0; j < 2; ++j) c.G.col(j) = g.col(j) * std::sqrt(photons[j]);
    return c;
  }

  double operator()(int i, int j) const { return G(i, j); }
};

struct SystemParams {
  std::array<MechanicalMode, 2> mech{};
  std::array<CavityMode, 2> cav{};
  CouplingMatrix coupling{};
  std::array<double, 2> probe_weights{1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2};

  double mean_omega() const { return 0.5 * (mech[0].omega + mech[1].omega); }
  double delta_omega() const { return mech[0].omega - mech[1].omega; }

  void validate() const {
    mech[0].validate("mech[0]");
    mech[1].validate("mech[1]");
    cav[0].validate("cav[0]");
    cav[1].validate("cav[1]");
    detail::require(coupling.G.allFinite(), "coupling matrix has non-finite entries");
    detail::require(std::isfinite(probe_weights[0]) && std::isfinite(probe_weights[1]),
                    "probe weights must be finite");
    detail::require(probe_weights[0] != 0.0 || probe_weights[1] != 0.0,
                    "probe weights must not both be zero");
  }
};

/// Drift A and diagonal diffusion D of dv/dt = A v + noise,
/// <noise_p^*(t) noise_q(t')> = D_pq delta(t - t').
struct DynamicsModel {
  Mat4c A = Mat4c::Zero();
  Eigen::Matrix4d D = Eigen::Matrix4d::Zero();
  /// Common carrier frequency. A + i*carrier*I has the same second moments
  /// and is far better conditioned; solvers work in that frame.
  double carrier = 0.0;

  Mat4c rotating_drift() const { return A + kI * carrier * Mat4c::Identity(); }
};

namespace index {
inline constexpr int b1 = 0, b2 = 1, a1 = 2, a2 = 3;
constexpr int mech(int i) { return i; }
constexpr int cav(int j) { return 2 + j; }
}  // namespace index

inline DynamicsModel build_dynamics(const SystemParams& p) {
  p.validate();
  DynamicsModel m;
  for (int i = 0; i < 2; ++i) {
    m.A(index::mech(i), index::mech(i)) = -(kI * p.mech[i].omega + p.mech[i].gamma);
    m.D(index::mech(i), index::mech(i)) = 2.0 * p.mech[i].gamma * p.mech[i].n_th;
  }
  for (int j = 0; j < 2; ++j) {
    m.A(index::cav(j), index::cav(j)) = kI * p.cav[j].detuning - p.cav[j].kappa;
    m.D(index::cav(j), index::cav(j)) = 2.0 * p.cav[j].kappa * p.cav[j].n_opt;
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const Complex c = kI * p.coupling(i, j);
      m.A(index::mech(i), index::cav(j)) = c;
      m.A(index::cav(j), index::mech(i)) = c;
    }
  m.carrier = p.mean_omega();
  return m;
}

struct StabilityReport {
  bool stable = false;
  double abscissa = 0.0;  ///< max Re(eigenvalue of A)
};

template <typename Derived>
StabilityReport stability_of(const Eigen::MatrixBase<Derived>& drift) {
  Eigen::ComplexEigenSolver<MatXc> es(drift.derived().template cast<Complex>(), false);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed in stability check");
  const double abscissa = es.eigenvalues().real().maxCoeff();
  return {abscissa < 0.0, abscissa};
}

inline StabilityReport stability_check(const DynamicsModel& model) {
  // Shifting by i*carrier changes only imaginary parts of the spectrum.
  return stability_of(model.rotating_drift());
}

/// max_ij |G_ij| / kappa_j; the adiabatic elimination degrades above ~0.1.
inline double adiabaticity_ratio(const SystemParams& p) {
  double r = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r = std::max(r, std::abs(p.coupling(i, j)) / p.cav[j].kappa);
  return r;
}

}  // namespace darkmode
