#pragma once

// Cavity-eliminated two-mode dynamics: the non-Hermitian effective
// Hamiltonian, its eigenmodes (closed form and numeric), the exceptional
// point, and the dark/bright decomposition of the mechanical modes.

#include "darkmode/model.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace darkmode {

/// a + b, rounded to exactly zero when the two cancel to within a few ulps.
inline double cancelled_sum(double a, double b) {
  const double s = a + b;
  return std::abs(s) <= 8.0 * std::numeric_limits<double>::epsilon() * (std::abs(a) + std::abs(b)) ? 0.0 : s;
}

struct EffectiveModel {
  Mat2c H = Mat2c::Zero();  ///< rad/s
  double Gamma11 = 0.0, Gamma12 = 0.0, Gamma21 = 0.0, Gamma22 = 0.0;
  double Gamma1 = 0.0, Gamma2 = 0.0;  ///< cavity-mediated couplings (signed)
  std::array<double, 2> omega{};      ///< bare mechanical frequencies
  std::array<double, 2> gamma{};      ///< intrinsic decay rates
  Eigen::Matrix2d G = Eigen::Matrix2d::Zero();  ///< couplings it was built from
  double adiabaticity = 0.0;
  std::vector<std::string> warnings;

  double mean_omega() const { return 0.5 * (omega[0] + omega[1]); }
  double delta_omega() const { return omega[0] - omega[1]; }
  /// Off-diagonal coupling Gamma1 + Gamma2; a balanced pair counts as zero.
  double coupling() const { return cancelled_sum(Gamma1, Gamma2); }
  /// Drift of the mechanical amplitudes, d b/dt = -i H b, in the frame
  /// rotating at the mean mechanical frequency.
  Mat2c rotating_drift() const { return -kI * (H - mean_omega() * Mat2c::Identity()); }
};

/// Resonant adiabatic elimination: Gamma_ij = G_ij^2 / kappa_j,
/// Gamma_j = G_1j G_2j / kappa_j.
inline EffectiveModel effective_model(const SystemParams& p) {
  p.validate();
  const auto& G = p.coupling.G;
  const double k1 = p.cav[0].kappa, k2 = p.cav[1].kappa;
  EffectiveModel e;
  e.Gamma11 = G(0, 0) * G(0, 0) / k1;
  e.Gamma21 = G(1, 0) * G(1, 0) / k1;
  e.Gamma12 = G(0, 1) * G(0, 1) / k2;
  e.Gamma22 = G(1, 1) * G(1, 1) / k2;
  e.Gamma1 = G(0, 0) * G(1, 0) / k1;
  e.Gamma2 = G(0, 1) * G(1, 1) / k2;
  for (int i = 0; i < 2; ++i) {
    e.omega[i] = p.mech[i].omega;
    e.gamma[i] = p.mech[i].gamma;
  }
  e.G = G;
  e.H(0, 0) = Complex(e.omega[0], -(e.gamma[0] + e.Gamma11 + e.Gamma12));
  e.H(1, 1) = Complex(e.omega[1], -(e.gamma[1] + e.Gamma21 + e.Gamma22));
  e.H(0, 1) = e.H(1, 0) = Complex(0.0, -e.coupling());
  e.adiabaticity = adiabaticity_ratio(p);
  if (e.adiabaticity > kAdiabaticityWarning)
    e.warnings.push_back("adiabaticity ratio " + std::to_string(e.adiabaticity) +
                         " exceeds " + std::to_string(kAdiabaticityWarning) +
                         "; effective model may be inaccurate");
  return e;
}

enum class ModeClass { dark, bright, hybrid };
enum class Regime { pre_ep, at_ep, post_ep, not_applicable };

constexpr std::string_view to_string(ModeClass c) {
  switch (c) {
    case ModeClass::dark: return "dark";
    case ModeClass::bright: return "bright";
    case ModeClass::hybrid: return "hybrid";
  }
  return "?";
}

constexpr std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::pre_ep: return "pre-EP";
    case Regime::at_ep: return "at-EP";
    case Regime::post_ep: return "post-EP";
    case Regime::not_applicable: return "not-applicable";
  }
  return "?";
}

struct Eigenmode {
  double omega = 0.0;  ///< rad/s
  double gamma = 0.0;  ///< amplitude decay rate, rad/s
  ModeClass classification = ModeClass::hybrid;
  Vec2c vector = Vec2c::Zero();  ///< unit-norm right eigenvector (numeric only)
};

/// modes[0] is the "+" branch, modes[1] the "-" branch. Before the EP "+"
/// is the upper frequency; past it "+" is the narrow (dark) branch,
/// matching gamma_pm = gamma + Gamma1 -/+ sqrt(Gamma1^2 - (dw/2)^2).
struct EigenmodeReport {
  std::array<Eigenmode, 2> modes{};
  Regime regime = Regime::not_applicable;

  const Eigenmode& plus() const { return modes[0]; }
  const Eigenmode& minus() const { return modes[1]; }
};

struct DarkBrightBasis {
  Eigen::Vector2d bright = Eigen::Vector2d::Zero();
  Eigen::Vector2d dark = Eigen::Vector2d::Zero();
};

/// Bright mode along the coupling vector (G_1j, G_2j) of cavity j
/// (0-based), dark mode orthogonal to it.
inline DarkBrightBasis dark_bright_basis(const CouplingMatrix& c, int cavity) {
  detail::require(cavity == 0 || cavity == 1, "cavity index must be 0 or 1");
  const double g1 = c(0, cavity), g2 = c(1, cavity);
  const double norm = std::hypot(g1, g2);
  if (!(norm > 0.0)) throw ValidationError("dark/bright basis undefined for zero coupling vector");
  return {Eigen::Vector2d(g1, g2) / norm, Eigen::Vector2d(g2, -g1) / norm};
}

inline constexpr double kClassOverlap = 0.9;
inline constexpr double kEqualGammaTolerance = 0.05;
inline constexpr double kDarkModeRatio = 5.0;

inline ModeClass classify(const Vec2c& v, const DarkBrightBasis& basis) {
  const double n = v.squaredNorm();
  const double dark = std::norm(basis.dark.cast<Complex>().dot(v)) / n;
  const double bright = std::norm(basis.bright.cast<Complex>().dot(v)) / n;
  if (dark > kClassOverlap) return ModeClass::dark;
  if (bright > kClassOverlap) return ModeClass::bright;
  return ModeClass::hybrid;
}

/// Discriminant (H00 - H11)^2 + 4 H01 H10 of the characteristic polynomial.
inline Complex ep_discriminant(const Mat2c& H) {
  const Complex d = H(0, 0) - H(1, 1);
  return d * d + 4.0 * H(0, 1) * H(1, 0);
}

inline Regime regime_from_discriminant(double disc, double scale) {
  if (std::abs(disc) < 1e-9 * scale * scale) return Regime::at_ep;
  return disc > 0.0 ? Regime::pre_ep : Regime::post_ep;
}

/// True when only cavity 1 acts on the mechanics.
inline bool is_single_cavity(const EffectiveModel& e) {
  return e.Gamma2 == 0.0 && e.Gamma12 == 0.0 && e.Gamma22 == 0.0;
}

/// Thrown when eigenmodes_closed_form is asked about a model outside the
/// single-cavity, near-equal-damping class it covers.
class ClosedFormInapplicable : public Error {
 public:
  using Error::Error;
};

inline EigenmodeReport eigenmodes_closed_form(const EffectiveModel& e) {
  if (!is_single_cavity(e))
    throw ClosedFormInapplicable("closed form inapplicable: second cavity mode is active");
  auto near_equal = [](double a, double b) {
    return std::abs(a - b) <= kEqualGammaTolerance * 0.5 * (a + b);
  };
  if (!near_equal(e.gamma[0], e.gamma[1]))
    throw ClosedFormInapplicable("closed form inapplicable: gamma1 and gamma2 differ by more than 5%");
  if (!near_equal(e.Gamma11, e.Gamma21))
    throw ClosedFormInapplicable("closed form inapplicable: unequal backaction Gamma11 != Gamma21");

  const double gamma = 0.5 * (e.gamma[0] + e.gamma[1]);
  const double damping = gamma + 0.5 * (e.Gamma11 + e.Gamma21);
  const double coupling = std::abs(e.Gamma1);
  const double half_split = 0.5 * std::abs(e.delta_omega());
  const double center = e.mean_omega();

  EigenmodeReport r;
  const double disc = half_split * half_split - coupling * coupling;
  const double scale = std::max(2.0 * half_split, coupling);
  r.regime = coupling == 0.0 ? Regime::not_applicable
                             : regime_from_discriminant(4.0 * disc, scale);
  if (r.regime == Regime::at_ep) {
    r.modes[0] = {center, damping, ModeClass::hybrid, {}};
    r.modes[1] = r.modes[0];
  } else if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    r.modes[0] = {center + s, damping, ModeClass::hybrid, {}};
    r.modes[1] = {center - s, damping, ModeClass::hybrid, {}};
  } else {
    const double s = std::sqrt(-disc);
    r.modes[0] = {center, damping - s, ModeClass::dark, {}};
    r.modes[1] = {center, damping + s, ModeClass::bright, {}};
  }
  return r;
}

inline EigenmodeReport eigenmodes_numeric(const EffectiveModel& e) {
  // Diagonalize relative to the mean frequency so eigenvalue errors scale
  // with the splittings and rates rather than with omega itself.
  const double center = e.mean_omega();
  const Mat2c shifted = e.H - center * Mat2c::Identity();
  Eigen::ComplexEigenSolver<Mat2c> es(shifted);
  if (es.info() != Eigen::Success) throw NumericError("eigensolver failed on effective Hamiltonian");

  EigenmodeReport r;
  const double coupling = e.coupling();
  if (coupling == 0.0) {
    r.regime = Regime::not_applicable;
  } else {
    const double scale = std::max(std::abs(e.delta_omega()), std::abs(coupling));
    r.regime = regime_from_discriminant(ep_discriminant(shifted).real(), scale);
  }

  // Classification is relative to the first cavity that couples at all.
  std::optional<DarkBrightBasis> basis;
  for (int j = 0; j < 2 && !basis; ++j)
    if (!e.G.col(j).isZero(0.0)) basis = dark_bright_basis(CouplingMatrix{e.G}, j);

  for (int k = 0; k < 2; ++k) {
    const Complex lambda = es.eigenvalues()(k);
    Eigenmode& m = r.modes[k];
    m.omega = center + lambda.real();
    m.gamma = -lambda.imag();
    m.vector = es.eigenvectors().col(k).normalized();
    m.classification = basis ? classify(m.vector, *basis) : ModeClass::hybrid;
  }
  const bool swap = r.regime == Regime::post_ep ? r.modes[0].gamma > r.modes[1].gamma
                                                : r.modes[0].omega < r.modes[1].omega;
  if (swap) std::swap(r.modes[0], r.modes[1]);
  return r;
}

struct EpLocation {
  double analytic = 0.0;  ///< |dw|/2, rad/s
  double grid_minimum = 0.0;  ///< control value minimizing |lambda+ - lambda-|
  std::size_t grid_index = 0;
};

/// Rescale cavity-1 couplings so that G11 G21 / kappa1 = gamma1_target,
/// keeping their ratio (equal couplings when the column is zero).
inline SystemParams with_cavity1_coupling(SystemParams p, double gamma1_target) {
  Eigen::Vector2d dir = p.coupling.G.col(0);
  if (dir.squaredNorm() == 0.0) dir = Eigen::Vector2d(1.0, 1.0);
  const double prod = dir(0) * dir(1);
  detail::require(prod != 0.0, "cavity-1 coupling must reach both mechanical modes");
  const double s = std::sqrt(std::abs(gamma1_target) * p.cav[0].kappa / std::abs(prod));
  p.coupling.G.col(0) = s * dir;
  return p;
}

inline EpLocation locate_ep(const SystemParams& p, std::span<const double> gamma1_grid) {
  detail::require(p.coupling.G.col(1).isZero(0.0), "locate_ep requires a single active cavity");
  detail::require(!gamma1_grid.empty(), "locate_ep requires a nonempty grid");
  EpLocation loc;
  loc.analytic = 0.5 * std::abs(p.delta_omega());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < gamma1_grid.size(); ++k) {
    const EffectiveModel e = effective_model(with_cavity1_coupling(p, gamma1_grid[k]));
    const Mat2c shifted = e.H - e.mean_omega() * Mat2c::Identity();
    const auto ev = Eigen::ComplexEigenSolver<Mat2c>(shifted, false).eigenvalues();
    const double gap = std::abs(ev(0) - ev(1));
    if (gap < best) {
      best = gap;
      loc.grid_minimum = gamma1_grid[k];
      loc.grid_index = k;
    }
  }
  return loc;
}

/// |G11 G21| / kappa1 >= ratio * |dw| / 2, ties counted as true.
inline bool dark_mode_condition(const SystemParams& p, double ratio = kDarkModeRatio) {
  detail::require(p.coupling.G.col(1).isZero(0.0), "dark_mode_condition requires a single active cavity");
  const double lhs = std::abs(p.coupling(0, 0) * p.coupling(1, 0)) / p.cav[0].kappa;
  const double rhs = ratio * 0.5 * std::abs(p.delta_omega());
  return lhs >= rhs * (1.0 - 1e-12);
}

}  // namespace darkmode
