#pragma once

// Stationary second moments of the linear Langevin system and the phonon
// numbers derived from them.
//
// M(p, q) = <v_p^* v_q> solves conj(A) M + M A^T + D = 0.

#include "darkmode/effective.hpp"

#include <Eigen/LU>

#include <optional>

namespace darkmode {

struct MomentMatrix {
  MatXc M;

  Eigen::Index size() const { return M.rows(); }
  /// <y^* y> for the observable y = sum_p w_p v_p.
  double quadratic_form(const VecXc& w) const { return (w.adjoint() * M * w)(0, 0).real(); }
};

/// ||conj(A) M + M A^T + D||_F / ||D||_F (absolute norm when D = 0).
inline double lyapunov_residual(const MatXc& A, const Eigen::MatrixXd& D, const MatXc& M) {
  const MatXc r = A.conjugate() * M + M * A.transpose() + D.cast<Complex>();
  const double dn = D.norm();
  return dn > 0.0 ? r.norm() / dn : r.norm();
}

/// Dense solve of the vectorized equation (I (x) conj(A) + A (x) I) vec(M) = -vec(D).
inline MomentMatrix solve_lyapunov(const MatXc& A, const Eigen::MatrixXd& D) {
  detail::require(A.rows() == A.cols() && D.rows() == A.rows() && D.cols() == A.cols(),
                  "solve_lyapunov: A and D must be square and of equal size");
  detail::require(A.allFinite() && D.allFinite(), "solve_lyapunov: non-finite input");
  const auto stab = stability_of(A);
  if (!stab.stable)
    throw NumericError("solve_lyapunov: drift is unstable (spectral abscissa " +
                       std::to_string(stab.abscissa) + ")");

  const Eigen::Index n = A.rows();
  const MatXc Ac = A.conjugate();
  MatXc L = MatXc::Zero(n * n, n * n);
  // Column-major vec: index(p, q) = p + n q.
  for (Eigen::Index q = 0; q < n; ++q)
    for (Eigen::Index p = 0; p < n; ++p) {
      const Eigen::Index row = p + n * q;
      for (Eigen::Index r = 0; r < n; ++r) {
        L(row, r + n * q) += Ac(p, r);  // conj(A) M
        L(row, p + n * r) += A(q, r);   // M A^T
      }
    }
  VecXc rhs(n * n);
  for (Eigen::Index q = 0; q < n; ++q)
    for (Eigen::Index p = 0; p < n; ++p) rhs(p + n * q) = -D(p, q);

  Eigen::FullPivLU<MatXc> lu(L);
  if (!lu.isInvertible()) throw NumericError("solve_lyapunov: singular Lyapunov operator");
  const VecXc x = lu.solve(rhs);
  if (!x.allFinite()) throw NumericError("solve_lyapunov: non-finite solution");

  MatXc M = Eigen::Map<const MatXc>(x.data(), n, n);
  M = 0.5 * (M + M.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<MatXc> es(M);
  const double floor = -1e-12 * std::max(M.norm(), std::numeric_limits<double>::min());
  const auto& lam = es.eigenvalues();
  if (lam.minCoeff() < floor)
    throw NumericError("solve_lyapunov: moment matrix not positive semidefinite (min eigenvalue " +
                       std::to_string(lam.minCoeff()) + ")");
  if (lam.minCoeff() < 0.0) {
    const Eigen::VectorXd clipped = lam.cwiseMax(0.0);
    M = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
    M = 0.5 * (M + M.adjoint()).eval();
  }
  return {M};
}

/// Full four-mode steady state, solved in the carrier-rotating frame.
inline MomentMatrix solve_lyapunov(const DynamicsModel& model) {
  return solve_lyapunov(model.rotating_drift(), model.D);
}

/// Two-mode steady state of the effective model. Thermal noise enters only
/// through the intrinsic channels: D = diag(2 gamma_i n_th_i).
inline MomentMatrix reduced_lyapunov(const EffectiveModel& e, const std::array<double, 2>& n_th) {
  Eigen::Matrix2d D = Eigen::Matrix2d::Zero();
  for (int i = 0; i < 2; ++i) {
    detail::require(n_th[i] >= 0.0, "reduced_lyapunov: n_th must be >= 0");
    D(i, i) = 2.0 * e.gamma[i] * n_th[i];
  }
  return solve_lyapunov(e.rotating_drift(), D);
}

inline Eigen::Matrix2d reduced_diffusion(const EffectiveModel& e, const std::array<double, 2>& n_th) {
  return Eigen::Vector2d(2.0 * e.gamma[0] * n_th[0], 2.0 * e.gamma[1] * n_th[1]).asDiagonal();
}

/// Total phonon number with a single cavity mode (equal gamma, equal n_th):
///   n = 2 n_th gamma [4(gamma+G1)^2 + dw^2] / {(gamma+G1) [4(gamma+G1)^2 + dw^2 - 4 G1^2]}
inline double phonon_closed_form(double gamma, double Gamma1, double delta_omega, double n_th) {
  detail::require(gamma > 0.0, "phonon_closed_form: gamma must be > 0");
  detail::require(Gamma1 >= 0.0, "phonon_closed_form: Gamma1 must be >= 0");
  const double g = gamma + Gamma1;
  const double num = 4.0 * g * g + delta_omega * delta_omega;
  return 2.0 * n_th * gamma * num / (g * (num - 4.0 * Gamma1 * Gamma1));
}

/// Large-coupling form 2 n_th gamma (4 G1^2 + dw^2) / (G1 dw^2).
inline double phonon_approx(double gamma, double Gamma1, double delta_omega, double n_th) {
  return 2.0 * n_th * gamma * (4.0 * Gamma1 * Gamma1 + delta_omega * delta_omega) /
         (Gamma1 * delta_omega * delta_omega);
}

struct DarkModeLimit {
  double exact = 0.0;   ///< closed form evaluated at the EP
  double approx = 0.0;  ///< 8 n_th gamma / |dw|
};

inline DarkModeLimit dark_mode_limit(double gamma, double delta_omega, double n_th) {
  if (delta_omega == 0.0)
    throw ValidationError("no finite dark-mode limit: degenerate modes keep a dark mode at every coupling");
  const double ep = 0.5 * std::abs(delta_omega);
  return {phonon_closed_form(gamma, ep, delta_omega, n_th), 8.0 * n_th * gamma / std::abs(delta_omega)};
}

struct PhononReport {
  double n1 = 0.0, n2 = 0.0, n_total = 0.0;
  std::optional<double> normalized;  ///< n_total / n_th for a common n_th
};

inline PhononReport phonon_report(const MomentMatrix& m, std::optional<double> n_th = std::nullopt) {
  detail::require(m.size() >= 2, "phonon_report: moment matrix too small");
  const double n1 = m.M(index::b1, index::b1).real();
  const double n2 = m.M(index::b2, index::b2).real();
  const double tol = -1e-12 * std::max(1.0, m.M.cwiseAbs().maxCoeff());
  if (n1 < tol || n2 < tol) throw NumericError("phonon_report: negative occupation");
  PhononReport r{std::max(n1, 0.0), std::max(n2, 0.0), 0.0, std::nullopt};
  r.n_total = r.n1 + r.n2;
  if (n_th && *n_th > 0.0) r.normalized = r.n_total / *n_th;
  return r;
}

}  // namespace darkmode
