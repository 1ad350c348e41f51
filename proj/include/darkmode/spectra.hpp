#pragma once

// Probe power spectral density of the linear system and Lorentzian
// extraction of eigenmode frequencies, linewidths and areas.
//
// Convention: for the probe y = c1 b1 + c2 b2,
//   S(w) = u^H D u,  u = chi^T c,  chi(w) = (-i w I - A)^{-1},
// so a free mode of frequency w0 and decay g gives 2 g n / ((w - w0)^2 + g^2)
// and the integral of S dw / 2pi equals <y^* y>.

#include "darkmode/steady_state.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace darkmode {

struct Spectrum {
  std::vector<double> freq;    ///< rad/s, strictly ascending
  std::vector<double> values;  ///< quanta per (rad/s) in the dw/2pi measure

  std::size_t size() const { return freq.size(); }
};

// Grids ----------------------------------------------------------------------

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  detail::require(n >= 2 && hi > lo, "uniform_grid: need n >= 2 and hi > lo");
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k)
    g[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return g;
}

/// Tan-mapped grid w = center + scale tan(theta), theta uniform, reaching
/// center +/- reach * scale. Dense near the center, sparse in the wings;
/// a Lorentzian of width `scale` is sampled at uniform arc.
inline std::vector<double> covering_grid(double center, double scale, std::size_t n,
                                         double reach = 1e4) {
  detail::require(n >= 3 && scale > 0.0 && reach > 0.0, "covering_grid: invalid arguments");
  const double tmax = std::atan(reach);
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = -tmax + 2.0 * tmax * static_cast<double>(k) / static_cast<double>(n - 1);
    g[k] = center + scale * std::tan(t);
  }
  return g;
}

/// Default display grid: 2001 points over w_mean +/- 20 max(gamma + Gamma, |dw|).
inline std::vector<double> default_grid(const EffectiveModel& e, std::size_t n = 2001) {
  const double width = std::max({e.gamma[0] + e.Gamma11 + e.Gamma12,
                                 e.gamma[1] + e.Gamma21 + e.Gamma22, std::abs(e.delta_omega())});
  return uniform_grid(e.mean_omega() - 20.0 * width, e.mean_omega() + 20.0 * width, n);
}

/// Covering grid for integrating the mechanical spectrum: the scale is the
/// largest mechanical-sector frequency offset or decay rate.
inline std::vector<double> integration_grid(const EffectiveModel& e, std::size_t n = 40001) {
  const Mat2c shifted = e.H - e.mean_omega() * Mat2c::Identity();
  const auto ev = Eigen::ComplexEigenSolver<Mat2c>(shifted, false).eigenvalues();
  double scale = 0.0;
  for (int k = 0; k < 2; ++k) scale = std::max({scale, std::abs(ev(k).real()), -ev(k).imag()});
  return covering_grid(e.mean_omega(), scale, n);
}

// Synthesis ------------------------------------------------------------------

namespace detail {

/// Generic spectrum of dv/dt = drift v + noise observed through `weights`.
/// `carrier` is the frame frequency of `drift`; grid values are lab-frame.
inline Spectrum synthesize(const MatXc& drift, const Eigen::MatrixXd& D, const VecXc& weights,
                           double carrier, std::span<const double> grid) {
  require(!grid.empty(), "probe_psd: empty grid");
  for (std::size_t k = 1; k < grid.size(); ++k)
    require(grid[k] > grid[k - 1], "probe_psd: grid must be strictly ascending");
  if (!stability_of(drift).stable) throw NumericError("probe_psd: model is unstable");

  const Eigen::Index n = drift.rows();
  Spectrum s;
  s.freq.assign(grid.begin(), grid.end());
  s.values.resize(grid.size());
  const MatXc At = drift.transpose();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double w = grid[k] - carrier;
    const MatXc lhs = -kI * w * MatXc::Identity(n, n) - At;  // (chi^T)^{-1}
    const VecXc u = lhs.partialPivLu().solve(weights);
    s.values[k] = std::max(0.0, (u.adjoint() * D.cast<Complex>() * u)(0, 0).real());
  }
  return s;
}

inline VecXc embed_weights(const std::array<double, 2>& w, Eigen::Index n) {
  require(w[0] != 0.0 || w[1] != 0.0, "probe weights must not both be zero");
  VecXc v = VecXc::Zero(n);
  v(0) = w[0];
  v(1) = w[1];
  return v;
}

}  // namespace detail

inline Spectrum probe_psd(const DynamicsModel& model, const std::array<double, 2>& weights,
                          std::span<const double> grid) {
  return detail::synthesize(model.rotating_drift(), model.D, detail::embed_weights(weights, 4),
                            model.carrier, grid);
}

/// Probe spectrum of the two-mode effective model with intrinsic baths only.
inline Spectrum probe_psd(const EffectiveModel& e, const std::array<double, 2>& n_th,
                          const std::array<double, 2>& weights, std::span<const double> grid) {
  return detail::synthesize(e.rotating_drift(), reduced_diffusion(e, n_th),
                            detail::embed_weights(weights, 2), e.mean_omega(), grid);
}

/// Trapezoid integral of S dw / 2pi on the stored grid.
inline double integrate(const Spectrum& s) {
  double acc = 0.0;
  for (std::size_t k = 1; k < s.size(); ++k)
    acc += 0.5 * (s.values[k] + s.values[k - 1]) * (s.freq[k] - s.freq[k - 1]);
  return acc / kTwoPi;
}

// Lorentzian fitting ---------------------------------------------------------

struct LorentzianPeak {
  double center = 0.0;      ///< rad/s
  double half_width = 0.0;  ///< rad/s, amplitude-decay convention
  double amplitude = 0.0;   ///< peak height above offset
  double area() const { return std::numbers::pi * amplitude * half_width; }
};

struct LorentzianFit {
  std::vector<LorentzianPeak> peaks;  ///< sorted by center, then width
  double offset = 0.0;
  double residual_norm = 0.0;  ///< ||model - data||_2 in data units
  int iterations = 0;
  bool converged = false;
};

/// Sum of `peaks` plus `offset` evaluated on `grid`.
inline Spectrum lorentzian_spectrum(const LorentzianFit& fit, std::span<const double> grid) {
  Spectrum s;
  s.freq.assign(grid.begin(), grid.end());
  s.values.assign(grid.size(), fit.offset);
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (const auto& p : fit.peaks) {
      const double x = grid[k] - p.center;
      s.values[k] += p.amplitude * p.half_width * p.half_width / (x * x + p.half_width * p.half_width);
    }
  return s;
}

class FitError : public NumericError {
 public:
  FitError(const std::string& what, LorentzianFit best) : NumericError(what), best_(std::move(best)) {}
  const LorentzianFit& best_so_far() const { return best_; }

 private:
  LorentzianFit best_;
};

struct FitOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-10;
};

namespace detail {

struct PeakGuess {
  std::size_t index;
  double half_width;
};

/// Half-width at half maximum above `baseline`, by walking outwards.
inline double half_max_width(const Spectrum& s, std::size_t i, double baseline) {
  const double half = baseline + 0.5 * (s.values[i] - baseline);
  std::size_t lo = i, hi = i;
  while (lo > 0 && s.values[lo] > half) --lo;
  while (hi + 1 < s.size() && s.values[hi] > half) ++hi;
  return 0.5 * (s.freq[hi] - s.freq[lo]);
}

inline std::vector<PeakGuess> find_peaks(const Spectrum& s, double baseline) {
  std::vector<std::size_t> maxima;
  for (std::size_t k = 1; k + 1 < s.size(); ++k)
    if (s.values[k] > s.values[k - 1] && s.values[k] >= s.values[k + 1]) maxima.push_back(k);
  std::sort(maxima.begin(), maxima.end(),
            [&](std::size_t a, std::size_t b) { return s.values[a] > s.values[b]; });
  std::vector<PeakGuess> out;
  for (std::size_t k = 0; k < maxima.size() && k < 2; ++k)
    out.push_back({maxima[k], half_max_width(s, maxima[k], baseline)});
  return out;
}

}  // namespace detail

namespace detail {

/// Sum of Lorentzians in normalized coordinates; p = [c_k, w_k, a_k]..., offset.
struct LorentzianProblem {
  Eigen::VectorXd x, y;
  int n_peaks = 1;

  int n_params() const { return 3 * n_peaks + 1; }

  void residual(const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* J) const {
    const Eigen::Index m = x.size();
    const int np = n_params();
    r = Eigen::VectorXd::Constant(m, q(np - 1)) - y;
    if (J) {
      J->resize(m, np);
      J->col(np - 1).setOnes();
    }
    for (int k = 0; k < n_peaks; ++k) {
      const double c = q(3 * k), w = q(3 * k + 1), a = q(3 * k + 2);
      for (Eigen::Index i = 0; i < m; ++i) {
        const double d = x(i) - c;
        const double den = d * d + w * w;
        const double l = w * w / den;
        r(i) += a * l;
        if (J) {
          (*J)(i, 3 * k) = a * 2.0 * d * w * w / (den * den);
          (*J)(i, 3 * k + 1) = a * 2.0 * w * d * d / (den * den);
          (*J)(i, 3 * k + 2) = l;
        }
      }
    }
  }
};

struct LmResult {
  Eigen::VectorXd p;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline LmResult levenberg_marquardt(const LorentzianProblem& prob, Eigen::VectorXd p, const FitOptions& opt) {
  Eigen::VectorXd r, r_try;
  Eigen::MatrixXd J;
  prob.residual(p, r, &J);
  double cost = 0.5 * r.squaredNorm();
  double lambda = 1e-3;
  bool converged = false;
  int it = 0;
  for (; it < opt.max_iterations && !converged; ++it) {
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd lhs = JtJ;
      lhs.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = lhs.ldlt().solve(-g);
      const Eigen::VectorXd trial = p + step;
      prob.residual(trial, r_try, nullptr);
      const double trial_cost = 0.5 * r_try.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        const bool small = step.norm() <= opt.step_tolerance * (p.norm() + opt.step_tolerance);
        p = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = true;
        converged = small;
      } else {
        lambda *= 4.0;
        if (lambda > 1e15) {
          // No descent direction left: we are at a (numerical) minimum.
          converged = true;
          break;
        }
      }
    }
    prob.residual(p, r, &J);
  }
  return {p, cost, it, converged};
}

}  // namespace detail

/// Least-squares fit of `n_peaks` Lorentzians a w^2 / ((x - c)^2 + w^2) plus
/// a constant offset (damped Gauss-Newton, Levenberg style).
///
/// With two peaks requested but one maximum found, the pair is taken as
/// co-centered and several narrow/broad splits are tried; the lowest
/// residual among fits with positive widths and areas wins.
inline LorentzianFit fit_lorentzians(const Spectrum& spec, int n_peaks, const FitOptions& opt = {}) {
  detail::require(n_peaks == 1 || n_peaks == 2, "fit_lorentzians: n_peaks must be 1 or 2");
  detail::require(spec.size() >= 8 && spec.freq.size() == spec.values.size(),
                  "fit_lorentzians: spectrum too short");

  const auto [mn, mx] = std::minmax_element(spec.values.begin(), spec.values.end());
  const double ymax = *mx, baseline = *mn;
  detail::require(ymax > 0.0, "fit_lorentzians: spectrum is identically zero");
  const auto guesses = detail::find_peaks(spec, baseline);
  detail::require(!guesses.empty(), "fit_lorentzians: no local maximum in spectrum");

  for (const auto& g : guesses) {
    const double c = spec.freq[g.index];
    const auto inside = std::count_if(spec.freq.begin(), spec.freq.end(), [&](double f) {
      return std::abs(f - c) <= g.half_width;
    });
    detail::require(inside >= 10, "fit_lorentzians: fewer than 10 samples per half-width");
  }

  // Work in x = (w - ref) / scale and y = S / ymax.
  const double ref = spec.freq[guesses[0].index];
  const double scale = std::max(guesses[0].half_width, std::numeric_limits<double>::min());
  const std::size_t m = spec.size();
  detail::LorentzianProblem prob;
  prob.n_peaks = n_peaks;
  prob.x.resize(static_cast<Eigen::Index>(m));
  prob.y.resize(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    prob.x(static_cast<Eigen::Index>(k)) = (spec.freq[k] - ref) / scale;
    prob.y(static_cast<Eigen::Index>(k)) = spec.values[k] / ymax;
  }

  const int np = prob.n_params();
  const double b0 = baseline / ymax;
  auto height = [&](std::size_t i) { return spec.values[i] / ymax - b0; };
  std::vector<Eigen::VectorXd> starts;
  if (n_peaks == 1) {
    const auto& g = guesses[0];
    starts.emplace_back(np);
    starts.back() << 0.0, g.half_width / scale, height(g.index), b0;
  } else if (guesses.size() == 1) {
    const auto& g = guesses[0];
    const double h = height(g.index), w = g.half_width / scale;
    // (broad/narrow width ratio, broad height fraction)
    for (const auto& [ratio, frac] : {std::pair{8.0, 0.4}, {50.0, 0.05}, {300.0, 5e-3}, {2000.0, 5e-4}}) {
      starts.emplace_back(np);
      const double narrow = ratio < 10.0 ? 0.5 * w : w;
      starts.back() << 0.0, narrow, (1.0 - frac) * h, 0.0, ratio * narrow, frac * h, b0;
    }
  } else {
    starts.emplace_back(np);
    for (int k = 0; k < 2; ++k) {
      const auto& g = guesses[static_cast<std::size_t>(k)];
      starts.back().segment<3>(3 * k) << prob.x(static_cast<Eigen::Index>(g.index)), g.half_width / scale,
          height(g.index);
    }
    starts.back()(np - 1) = b0;
  }

  auto to_fit = [&](const detail::LmResult& res) {
    LorentzianFit f;
    for (int k = 0; k < n_peaks; ++k)
      f.peaks.push_back({ref + scale * res.p(3 * k), scale * std::abs(res.p(3 * k + 1)), ymax * res.p(3 * k + 2)});
    std::sort(f.peaks.begin(), f.peaks.end(), [](const auto& a, const auto& b) {
      return a.center != b.center ? a.center < b.center : a.half_width < b.half_width;
    });
    f.offset = ymax * res.p(np - 1);
    f.residual_norm = ymax * std::sqrt(2.0 * res.cost);
    f.iterations = res.iterations;
    f.converged = res.converged;
    return f;
  };
  auto valid = [](const LorentzianFit& f) {
    return std::all_of(f.peaks.begin(), f.peaks.end(),
                       [](const auto& pk) { return pk.half_width > 0.0 && pk.area() > 0.0; });
  };

  std::optional<LorentzianFit> best, fallback;
  for (const auto& p0 : starts) {
    const LorentzianFit f = to_fit(detail::levenberg_marquardt(prob, p0, opt));
    if (f.converged && valid(f)) {
      if (!best || f.residual_norm < best->residual_norm) best = f;
    } else if (!fallback || f.residual_norm < fallback->residual_norm) {
      fallback = f;
    }
  }
  if (best) return *best;
  if (!fallback->converged) throw FitError("fit_lorentzians: no convergence within iteration cap", *fallback);
  throw FitError("fit_lorentzians: fitted peak has non-positive width or area", *fallback);
}

// Thermometry ----------------------------------------------------------------

/// Probe-referred occupations: area / 2pi / |c|^2 per peak. With a single
/// probe these are occupations of the observed linear combination, not of
/// the individual resonators.
struct ProbeOccupation {
  std::vector<double> per_peak;
  double total = 0.0;
};

inline ProbeOccupation spectral_thermometry(const LorentzianFit& fit, const std::array<double, 2>& weights) {
  const double norm2 = weights[0] * weights[0] + weights[1] * weights[1];
  detail::require(norm2 > 0.0, "probe weights must not both be zero");
  ProbeOccupation out;
  for (const auto& p : fit.peaks) {
    out.per_peak.push_back(p.area() / kTwoPi / norm2);
    out.total += out.per_peak.back();
  }
  return out;
}

/// Probe-referred occupation from the moments: c^T M c / |c|^2.
inline double probe_occupation(const MomentMatrix& m, const std::array<double, 2>& weights) {
  const VecXc w = detail::embed_weights(weights, m.size());
  return m.quadratic_form(w) / w.squaredNorm();
}

// Export ---------------------------------------------------------------------

/// Two-column CSV "freq_hz,psd". Since S is a density in dw/2pi, the same
/// numbers are a density per Hz.
inline void write_spectrum_csv(const Spectrum& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "freq_hz,psd\n";
  char buf[64];
  for (std::size_t k = 0; k < s.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", to_hz(s.freq[k]), s.values[k]);
    out << buf;
  }
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace darkmode
