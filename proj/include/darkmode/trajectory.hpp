#pragma once

// Exact-discretization stochastic simulator of the linear Langevin system.
// Used as an independent check on the Lyapunov moments and spectra.

#include "darkmode/steady_state.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cstdint>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace darkmode {

/// Seeded generator of complex standard normals z with E[|z|^2] = 1.
/// mt19937_64 output is fixed by the C++ standard; the normal transform is
/// done here so the stream does not depend on the standard library.
class NormalStream {
 public:
  static constexpr std::string_view kIdentity = "mt19937_64/box-muller-v1";

  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  Complex next() {
    // Box-Muller on (0, 1] x [0, 1) uniforms; radius sqrt(-ln u) gives unit
    // variance for the complex value.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-std::log(u1));
    return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 engine_;
};

struct TrajectoryConfig {
  double dt = 1e-3;  ///< s
  std::size_t n_steps = 100000;
  std::size_t n_burn_in = 1000;
  std::uint64_t seed = 1;
  std::size_t record_stride = 1;
  bool stationary_start = true;  ///< otherwise start from `initial` (zero if empty)
  VecXc initial;

  void validate() const {
    detail::require(dt > 0.0 && std::isfinite(dt), "trajectory: dt must be > 0");
    detail::require(n_steps > n_burn_in, "trajectory: n_steps must exceed n_burn_in");
    detail::require(record_stride >= 1, "trajectory: record_stride must be >= 1");
  }
};

/// Recorded amplitudes in the frame rotating at the model carrier; |v_p|^2
/// and all equal-time moments are frame independent.
struct Trajectory {
  std::vector<double> times;  ///< s, post burn-in
  MatXc states;               ///< one column per recorded step
  double carrier = 0.0;
};

struct Propagators {
  MatXc phi;  ///< exp(A dt), v <- phi v + xi
  MatXc Q;    ///< E[xi xi^H] = int_0^dt e^{A s} D e^{A^H s} ds
};

/// Van Loan block exponential exp([[-A, D], [0, A^H]] h) = [[., F^{-1} Q], [0, F^H]]
/// on a base step h = dt / 2^k with ||A h|| <= 1/2, then exact doubling
/// (phi, Q) -> (phi^2, phi Q phi^H + Q). The block form alone overflows once
/// the fastest rate times dt reaches a few hundred. Q is linear in D, so D is
/// rescaled to the size of A; otherwise a large D forces extra squarings that
/// cost phi its accuracy.
inline Propagators exact_propagators(const MatXc& A, const Eigen::MatrixXd& D, double dt) {
  detail::require(dt > 0.0 && std::isfinite(dt), "exact_propagators: dt must be > 0");
  if (!stability_of(A).stable) throw NumericError("exact_propagators: drift is unstable");
  const Eigen::Index n = A.rows();
  const double norm = A.cwiseAbs().colwise().sum().maxCoeff() * dt;
  const int doublings = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
  const double h = std::ldexp(dt, -doublings);
  const double d_norm = D.cwiseAbs().colwise().sum().maxCoeff();
  const double d_scale = d_norm > 0.0 && norm > 0.0 ? d_norm * dt / norm : 1.0;

  MatXc block = MatXc::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -A * h;
  block.topRightCorner(n, n) = D.cast<Complex>() * (h / d_scale);
  block.bottomRightCorner(n, n) = A.adjoint() * h;
  const MatXc E = block.exp();
  Propagators out;
  out.phi = E.bottomRightCorner(n, n).adjoint();
  out.Q = d_scale * out.phi * E.topRightCorner(n, n);
  out.Q = 0.5 * (out.Q + out.Q.adjoint()).eval();
  for (int k = 0; k < doublings; ++k) {
    out.Q = (out.phi * out.Q * out.phi.adjoint() + out.Q).eval();
    out.Q = 0.5 * (out.Q + out.Q.adjoint()).eval();
    out.phi = (out.phi * out.phi).eval();
  }
  return out;
}

/// Factor S = L L^H for a Hermitian PSD matrix via its eigendecomposition,
/// flooring eigenvalues at zero.
inline MatXc hermitian_factor(const MatXc& S, const char* what) {
  Eigen::SelfAdjointEigenSolver<MatXc> es(S);
  const double tol = -1e-12 * std::max(S.norm(), std::numeric_limits<double>::min());
  if (es.eigenvalues().minCoeff() < tol)
    throw NumericError(std::string(what) + " is not positive semidefinite");
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

/// Covariance C = E[v v^H] from the moment matrix M = <v^* v^T>.
inline MatXc covariance_from_moments(const MomentMatrix& m) { return m.M.conjugate(); }

inline Trajectory simulate(const MatXc& drift, const Eigen::MatrixXd& D, double carrier,
                           const TrajectoryConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = drift.rows();
  const Propagators prop = exact_propagators(drift, D, cfg.dt);
  const MatXc noise = hermitian_factor(prop.Q, "step noise covariance");

  NormalStream rng(cfg.seed);
  auto draw = [&](const MatXc& L) {
    VecXc z(L.cols());
    for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = rng.next();
    return VecXc(L * z);
  };

  VecXc v = VecXc::Zero(n);
  if (cfg.stationary_start) {
    v = draw(hermitian_factor(covariance_from_moments(solve_lyapunov(drift, D)), "stationary covariance"));
  } else if (cfg.initial.size() > 0) {
    detail::require(cfg.initial.size() == n, "trajectory: initial state has wrong dimension");
    v = cfg.initial;
  }

  const std::size_t kept = cfg.n_steps - cfg.n_burn_in;
  const std::size_t n_rec = (kept + cfg.record_stride - 1) / cfg.record_stride;
  Trajectory tr;
  tr.carrier = carrier;
  tr.times.reserve(n_rec);
  tr.states.resize(n, static_cast<Eigen::Index>(n_rec));
  std::size_t col = 0;
  for (std::size_t step = 0; step < cfg.n_steps; ++step) {
    v = prop.phi * v + draw(noise);
    if (!v.allFinite()) throw NumericError("trajectory: non-finite state");
    if (step >= cfg.n_burn_in && (step - cfg.n_burn_in) % cfg.record_stride == 0) {
      tr.times.push_back(static_cast<double>(step + 1) * cfg.dt);
      tr.states.col(static_cast<Eigen::Index>(col++)) = v;
    }
  }
  return tr;
}

inline Trajectory simulate(const DynamicsModel& model, const TrajectoryConfig& cfg) {
  return simulate(model.rotating_drift(), model.D, model.carrier, cfg);
}

/// Two-mode effective model; the default oracle.
inline Trajectory simulate(const EffectiveModel& e, const std::array<double, 2>& n_th,
                           const TrajectoryConfig& cfg) {
  return simulate(e.rotating_drift(), reduced_diffusion(e, n_th), e.mean_omega(), cfg);
}

// Occupation estimates -------------------------------------------------------

struct SeriesEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double autocorr_time = 1.0;  ///< integrated, in samples
};

struct OccupationEstimate {
  SeriesEstimate n1, n2, n_total;
  std::size_t n_batches = 0;
  std::size_t samples = 0;
};

inline constexpr std::size_t kMinBatches = 20;
inline constexpr double kMinAutocorrTimes = 100.0;

namespace detail {

/// Integrated autocorrelation time 1 + 2 sum rho_k, summed until the first
/// non-positive rho_k. Throws if the sum has not terminated by n/100 lags.
inline double integrated_autocorr(const std::vector<double>& x, double mean) {
  const std::size_t n = x.size();
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  c0 /= static_cast<double>(n);
  if (c0 == 0.0) return 1.0;
  const std::size_t max_lag = n / static_cast<std::size_t>(kMinAutocorrTimes);
  double tau = 1.0;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) c += (x[i] - mean) * (x[i + lag] - mean);
    const double rho = c / (static_cast<double>(n) * c0);
    if (rho <= 0.0) return tau;
    tau += 2.0 * rho;
  }
  throw NumericError("estimate_occupations: autocorrelation has not decayed within n/100 lags; "
                     "need a run longer than " + std::to_string(n) + " samples");
}

inline SeriesEstimate batch_means(const std::vector<double>& x) {
  SeriesEstimate s;
  const std::size_t n = x.size();
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  s.autocorr_time = integrated_autocorr(x, s.mean);
  if (static_cast<double>(n) < kMinAutocorrTimes * s.autocorr_time)
    throw NumericError("estimate_occupations: " + std::to_string(n) + " samples cover fewer than 100 "
                       "autocorrelation times; need at least " +
                       std::to_string(static_cast<std::size_t>(std::ceil(kMinAutocorrTimes * s.autocorr_time))));
  const std::size_t len = n / kMinBatches;
  std::vector<double> means(kMinBatches, 0.0);
  for (std::size_t b = 0; b < kMinBatches; ++b) {
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) means[b] += x[i];
    means[b] /= static_cast<double>(len);
  }
  const double mu = std::accumulate(means.begin(), means.end(), 0.0) / kMinBatches;
  double var = 0.0;
  for (double m : means) var += (m - mu) * (m - mu);
  var /= static_cast<double>(kMinBatches - 1);
  s.std_error = std::sqrt(var / kMinBatches);
  return s;
}

}  // namespace detail

/// Time averages of |b_i|^2 with batch-means error bars.
inline OccupationEstimate estimate_occupations(const Trajectory& tr) {
  const auto n = static_cast<std::size_t>(tr.states.cols());
  detail::require(tr.states.rows() >= 2, "estimate_occupations: need two mechanical modes");
  detail::require(n >= kMinBatches * 5, "estimate_occupations: too few recorded samples");
  std::vector<double> x1(n), x2(n), xt(n);
  for (std::size_t k = 0; k < n; ++k) {
    x1[k] = std::norm(tr.states(index::b1, static_cast<Eigen::Index>(k)));
    x2[k] = std::norm(tr.states(index::b2, static_cast<Eigen::Index>(k)));
    xt[k] = x1[k] + x2[k];
  }
  OccupationEstimate e;
  e.n1 = detail::batch_means(x1);
  e.n2 = detail::batch_means(x2);
  e.n_total = detail::batch_means(xt);
  e.n_batches = kMinBatches;
  e.samples = n;
  return e;
}

}  // namespace darkmode
