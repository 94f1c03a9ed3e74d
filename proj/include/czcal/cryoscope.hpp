// Copyright 2026 The czcal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Cryoscope: coupler flux step response measured through the Q1 frequency
// shift, and identification of IIR + FIR corrections from it.

#ifndef CZCAL_CRYOSCOPE_HPP_
#define CZCAL_CRYOSCOPE_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "czcal/common.hpp"
#include "czcal/device_model.hpp"
#include "czcal/least_squares.hpp"
#include "czcal/propagator.hpp"
#include "czcal/signal_chain.hpp"

namespace czcal {

// Q1 transition frequency relative to idle versus coupler flux offset,
// tabulated from the adiabatically labeled spectrum.
class Q1ShiftModel {
 public:
  Q1ShiftModel(const AdiabaticTracker& tracker, double idle_flux, double lo, double hi,
               int points = 4001)
      : lo_(lo), hi_(hi) {
    if (!(hi > lo) || points < 2) throw std::invalid_argument("Q1ShiftModel: bad range");
    auto q = [&](double f) {
      const auto e = tracker.computational_energies(f);
      return e[2] - e[0];
    };
    const double q0 = q(idle_flux);
    step_ = (hi - lo) / (points - 1);
    values_.resize(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) values_[static_cast<std::size_t>(k)] = q(idle_flux + lo + k * step_) - q0;
  }

  // Tabulated directly, for tests and custom observables.
  Q1ShiftModel(double lo, double hi, std::vector<double> values)
      : lo_(lo), hi_(hi), values_(std::move(values)) {
    if (!(hi > lo) || values_.size() < 2) throw std::invalid_argument("Q1ShiftModel: bad table");
    step_ = (hi - lo) / static_cast<double>(values_.size() - 1);
  }

  double lower() const { return lo_; }
  double upper() const { return hi_; }

  // rad/s; linear inside the table and linearly extrapolated outside.
  double operator()(double offset) const {
    const double u = (offset - lo_) / step_;
    const auto last = static_cast<double>(values_.size() - 2);
    const double k = std::clamp(std::floor(u), 0.0, last);
    const auto i = static_cast<std::size_t>(k);
    const double f = u - k;
    return values_[i] + f * (values_[i + 1] - values_[i]);
  }

 private:
  double lo_, hi_, step_ = 0.0;
  std::vector<double> values_;
};

struct CryoscopeConfig {
  double amplitude = 0.03;       // nominal coupler flux step
  double t_max = 2.5e-6;         // longest pulse
  double grid = 1e-9;            // pulse-length step
  double margin = 100e-9;        // total Ramsey interval = t_max + margin
  double detuning = 0.0;         // idle frame detuning, rad/s
  int thetas = 9;                // final-rotation axes over [0, 2pi]
  double sg_window = 10e-9;
  int sg_order = 3;
  double calibration_t_min = 300e-9;
  double calibration_step = 10e-9;
  int calibration_points = 36;
  double calibration_lo = -1.0;  // calibration span in units of amplitude
  double calibration_hi = 2.5;
  int n_long = 2;
  int n_short = 2;
  double long_cut = 200e-9;  // long stages are fitted on t > long_cut
  double fit_t_min = 5e-9;   // samples inside the first half window are skipped
  double fit_rms_floor = 1e-5;      // terms are dropped while the rms stays below this
  double fit_rms_tolerance = 1e-3;  // larger residuals are reported
  int fir_taps = 72;         // 0 disables the FIR stage
  double dt = kDefaultAwgDt;

  double total_interval() const { return t_max + margin; }
};

inline std::vector<double> cryoscope_thetas(int n = 9) {
  if (n < 3) throw std::invalid_argument("cryoscope_thetas: need >= 3 angles");
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = kTwoPi * i / (n - 1);
  return t;
}

// Excited population after the final pi/2 about an equatorial axis at theta.
inline std::vector<double> ramsey_populations(double phase, std::span<const double> thetas) {
  std::vector<double> p;
  p.reserve(thetas.size());
  for (double th : thetas) p.push_back(0.5 * (1.0 + std::cos(phase - th)));
  return p;
}

// Q1 starts on the equator; the distorted pulse of nominal length t_p ends at
// the final rotation, which is a fixed total interval after the first.
inline double simulate_ramsey_phase(const Q1ShiftModel& shift, const DistortionChain& chain,
                                    double amplitude, double t_p, std::span<const double> thetas,
                                    double total_interval, double detuning = 0.0) {
  if (t_p < 0.0 || t_p > total_interval) throw std::invalid_argument("simulate_ramsey_phase: bad t_p");
  const auto n = static_cast<std::size_t>(std::lround(t_p / chain.dt));
  double phase = detuning * total_interval;
  if (n > 0 && amplitude != 0.0) {
    Waveform w;
    w.dt = chain.dt;
    w.samples.assign(n, amplitude);
    const Waveform y = apply_chain(w, chain);
    for (double v : y.samples) phase += shift(v) * chain.dt;
  }
  const auto p = ramsey_populations(phase, thetas);
  return fit_cosine(thetas, p).phase;
}

inline std::vector<double> unwrap(std::span<const double> phases) {
  std::vector<double> out(phases.begin(), phases.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    double d = out[i] - out[i - 1];
    d -= kTwoPi * std::round(d / kTwoPi);
    out[i] = out[i - 1] + d;
  }
  return out;
}

struct CryoscopeTrace {
  std::vector<double> t_p;
  std::vector<double> phases;  // unwrapped, rad
};

inline CryoscopeTrace simulate_trace(const Q1ShiftModel& shift, const DistortionChain& chain,
                                     double amplitude, const CryoscopeConfig& cfg,
                                     double t_min = 0.0, double step = 0.0,
                                     const Parallelism& par = Parallelism{}) {
  if (step <= 0.0) step = cfg.grid;
  const auto n = static_cast<std::size_t>(std::floor((cfg.t_max - t_min) / step + 1e-9)) + 1;
  CryoscopeTrace tr;
  tr.t_p.resize(n);
  std::vector<double> wrapped(n);
  const auto thetas = cryoscope_thetas(cfg.thetas);
  for (std::size_t i = 0; i < n; ++i) tr.t_p[i] = t_min + static_cast<double>(i) * step;
  par.for_each(n, [&](std::size_t i) {
    wrapped[i] = simulate_ramsey_phase(shift, chain, amplitude, tr.t_p[i], thetas,
                                       cfg.total_interval(), cfg.detuning);
  });
  tr.phases = unwrap(wrapped);
  return tr;
}

// Local least-squares polynomial of the given order over `window` samples
// (odd); edge points use the nearest full window. deriv = 0 smooths, 1 returns
// the first derivative per unit of `dx`.
inline std::vector<double> savitzky_golay(std::span<const double> y, int window, int order,
                                          int deriv = 0, double dx = 1.0) {
  if (window % 2 == 0 || window < order + 1 || order < 0 || deriv < 0 || deriv > order)
    throw std::invalid_argument("savitzky_golay: need odd window > order >= deriv");
  const auto n = static_cast<int>(y.size());
  if (n < window) throw std::invalid_argument("savitzky_golay: signal shorter than window");
  const int h = window / 2;
  MatrixXd v(window, order + 1);
  std::vector<double> out(y.size());
  for (int i = 0; i < n; ++i) {
    const int start = std::clamp(i - h, 0, n - window);
    VectorXd rhs(window);
    for (int j = 0; j < window; ++j) {
      const double x = start + j - i;
      double pw = 1.0;
      for (int k = 0; k <= order; ++k) {
        v(j, k) = pw;
        pw *= x;
      }
      rhs(j) = y[static_cast<std::size_t>(start + j)];
    }
    const VectorXd c = v.colPivHouseholderQr().solve(rhs);
    double fact = 1.0;
    for (int k = 2; k <= deriv; ++k) fact *= k;
    out[static_cast<std::size_t>(i)] = c(deriv) * fact / std::pow(dx, deriv);
  }
  return out;
}

inline std::vector<double> central_difference(std::span<const double> y, double dx) {
  if (y.size() < 2) throw std::invalid_argument("central_difference: need >= 2 samples");
  std::vector<double> d(y.size());
  const std::size_t n = y.size();
  d[0] = (y[1] - y[0]) / dx;
  d[n - 1] = (y[n - 1] - y[n - 2]) / dx;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (y[i + 1] - y[i - 1]) / (2.0 * dx);
  return d;
}

// Monotone (Fritsch-Carlson) cubic interpolant on strictly increasing x.
class MonotoneInterpolant {
 public:
  MonotoneInterpolant() = default;
  MonotoneInterpolant(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("MonotoneInterpolant: need >= 2 points");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("MonotoneInterpolant: x must increase");
    std::vector<double> s(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) s[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    m_.resize(n);
    m_[0] = s[0];
    m_[n - 1] = s[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) m_[i] = s[i - 1] * s[i] <= 0.0 ? 0.0 : 0.5 * (s[i - 1] + s[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (s[i] == 0.0) {
        m_[i] = m_[i + 1] = 0.0;
        continue;
      }
      const double a = m_[i] / s[i], b = m_[i + 1] / s[i];
      const double r = a * a + b * b;
      if (r > 9.0) {
        const double t = 3.0 / std::sqrt(r);
        m_[i] = t * a * s[i];
        m_[i + 1] = t * b * s[i];
      }
    }
  }

  double operator()(double x) const {
    const std::size_t n = x_.size();
    if (x <= x_.front()) return y_.front() + m_.front() * (x - x_.front());
    if (x >= x_.back()) return y_.back() + m_.back() * (x - x_.back());
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    (void)n;
    return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * m_[i] + (-2 * t3 + 3 * t2) * y_[i + 1] +
           (t3 - t2) * h * m_[i + 1];
  }

 private:
  std::vector<double> x_, y_, m_;
};

struct AmplitudeCalibration {
  std::vector<double> amplitudes;
  std::vector<double> shifts;  // rad/s
  MonotoneInterpolant inverse;

  double amplitude_for(double shift) const { return inverse(shift); }
};

inline double linear_slope(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Frequency shift per nominal amplitude from the phase slope of long pulses.
inline AmplitudeCalibration calibrate_amplitude(const Q1ShiftModel& shift, const DistortionChain& chain,
                                                std::span<const double> amplitudes,
                                                const CryoscopeConfig& cfg,
                                                const Parallelism& par = Parallelism{}) {
  if (amplitudes.size() < 2) throw std::invalid_argument("calibrate_amplitude: need >= 2 amplitudes");
  if (!(cfg.calibration_t_min > 0.0) || cfg.calibration_t_min >= cfg.t_max)
    throw std::invalid_argument("calibrate_amplitude: calibration window outside the trace");
  AmplitudeCalibration c;
  c.amplitudes.assign(amplitudes.begin(), amplitudes.end());
  std::sort(c.amplitudes.begin(), c.amplitudes.end());
  c.shifts.resize(c.amplitudes.size());
  for (std::size_t i = 0; i < c.amplitudes.size(); ++i) {
    const auto tr = simulate_trace(shift, chain, c.amplitudes[i], cfg, cfg.calibration_t_min,
                                   cfg.calibration_step, par);
    c.shifts[i] = linear_slope(tr.t_p, tr.phases);
  }
  std::vector<double> x = c.shifts, y = c.amplitudes;
  const bool decreasing = x.back() < x.front();
  if (decreasing) {
    std::reverse(x.begin(), x.end());
    std::reverse(y.begin(), y.end());
  }
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) throw NumericalError("calibrate_amplitude: shift is not monotone in amplitude");
  c.inverse = MonotoneInterpolant(std::move(x), std::move(y));
  return c;
}

inline std::vector<double> calibration_amplitudes(const CryoscopeConfig& cfg) {
  std::vector<double> a(static_cast<std::size_t>(cfg.calibration_points));
  for (int i = 0; i < cfg.calibration_points; ++i)
    a[static_cast<std::size_t>(i)] =
        cfg.amplitude * (cfg.calibration_lo +
                         (cfg.calibration_hi - cfg.calibration_lo) * i / (cfg.calibration_points - 1));
  if (cfg.calibration_lo < 0.0 && cfg.calibration_hi > 0.0)
    *std::min_element(a.begin(), a.end(), [](double x, double y) { return std::abs(x) < std::abs(y); }) = 0.0;
  return a;
}

struct ResponseTrace {
  std::vector<double> t;
  std::vector<double> shift;      // smoothed dphi/dt_p, rad/s
  std::vector<double> amplitude;  // calibrated flux
  std::vector<double> value;      // normalized to the long-time level
};

inline int odd_window(double window, double dx, int order) {
  int w = static_cast<int>(std::lround(window / dx));
  if (w % 2 == 0) ++w;
  return std::max(w, order % 2 == 0 ? order + 1 : order + 2);
}

inline ResponseTrace reconstruct_response(const CryoscopeTrace& trace, const AmplitudeCalibration& cal,
                                          const CryoscopeConfig& cfg) {
  const std::size_t n = trace.t_p.size();
  if (n < 3 || trace.phases.size() != n) throw std::invalid_argument("reconstruct_response: trace too short");
  const double dx = trace.t_p[1] - trace.t_p[0];
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(trace.t_p[i] - trace.t_p[i - 1] - dx) > 1e-6 * dx)
      throw std::invalid_argument("reconstruct_response: pulse lengths must be uniformly spaced");
  if (!(dx > 0.0) || dx > 2e-9 * (1 + 1e-9))
    throw std::invalid_argument("reconstruct_response: pulse-length grid coarser than 2 ns");
  ResponseTrace r;
  r.t = trace.t_p;
  const auto d = central_difference(unwrap(trace.phases), dx);
  r.shift = savitzky_golay(d, odd_window(cfg.sg_window, dx, cfg.sg_order), cfg.sg_order);
  r.amplitude.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.amplitude[i] = cal.amplitude_for(r.shift[i]);
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  double level = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) level += r.amplitude[i];
  level /= static_cast<double>(tail);
  if (!(std::abs(level) > 0.0)) throw NumericalError("reconstruct_response: zero long-time level");
  r.value.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.value[i] = r.amplitude[i] / level;
  return r;
}

// ---------------------------------------------------------------------------
// Exponential identification.

struct ExponentialTerm {
  double amplitude = 0.0;  // B in g * (1 + sum B exp(-(t - t0)/tau))
  double tau = 1e-9;
};

struct ExponentialFit {
  double gain = 1.0;
  std::vector<ExponentialTerm> terms;  // descending tau
  std::vector<IirStage> stages;        // equivalent cascade, descending tau
  double rms = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

// Linear least squares of y on [1, exp(-(t - t0)/tau_k)]; returns the
// coefficients and fills the residual.
inline VectorXd project(std::span<const double> t, std::span<const double> y, double t0,
                        std::span<const double> taus, VectorXd* residual = nullptr) {
  const auto n = static_cast<Eigen::Index>(t.size());
  MatrixXd a(n, static_cast<Eigen::Index>(taus.size()) + 1);
  VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ti = t[static_cast<std::size_t>(i)] - t0;
    a(i, 0) = 1.0;
    for (std::size_t k = 0; k < taus.size(); ++k)
      a(i, static_cast<Eigen::Index>(k) + 1) = std::exp(-ti / taus[k]);
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const VectorXd c = a.colPivHouseholderQr().solve(b);
  if (residual) *residual = a * c - b;
  return c;
}

inline double projected_cost(std::span<const double> t, std::span<const double> y, double t0,
                             std::span<const double> taus) {
  VectorXd r;
  project(t, y, t0, taus, &r);
  return r.squaredNorm();
}

// Variable projection: Levenberg-Marquardt over ln(tau) of the terms from
// index `first` on; earlier time constants stay fixed.
inline std::vector<double> refine_taus(std::span<const double> t, std::span<const double> y, double t0,
                                       std::vector<double> taus, std::size_t first, double tau_lo,
                                       double tau_hi) {
  const auto m = static_cast<Eigen::Index>(taus.size() - first);
  if (m == 0) return taus;
  VectorXd q(m);
  for (Eigen::Index k = 0; k < m; ++k) q(k) = std::log(taus[first + static_cast<std::size_t>(k)]);
  auto residual = [&](const VectorXd& p) {
    std::vector<double> trial = taus;
    for (Eigen::Index k = 0; k < m; ++k) trial[first + static_cast<std::size_t>(k)] = std::exp(p(k));
    VectorXd r;
    project(t, y, t0, trial, &r);
    return r;
  };
  LsqOptions o;
  o.lower = VectorXd::Constant(m, std::log(tau_lo));
  o.upper = VectorXd::Constant(m, std::log(tau_hi));
  o.max_iterations = 400;
  const auto res = levenberg_marquardt(residual, q, o);
  for (Eigen::Index k = 0; k < m; ++k) taus[first + static_cast<std::size_t>(k)] = std::exp(res.x(k));
  return taus;
}

// Appends `count` time constants in [tau_lo, tau_hi]: pairs are seeded from a
// logarithmic grid search, then refined together with the other new terms.
inline std::vector<double> add_terms(std::span<const double> t, std::span<const double> y, double t0,
                                     std::vector<double> taus, int count, double tau_lo, double tau_hi) {
  const std::size_t first = taus.size();
  const int grid = 40;
  std::vector<double> g(grid);
  for (int k = 0; k < grid; ++k) g[static_cast<std::size_t>(k)] = tau_lo * std::pow(tau_hi / tau_lo, k / (grid - 1.0));
  while (static_cast<int>(taus.size() - first) < count) {
    const bool pair = count - static_cast<int>(taus.size() - first) >= 2;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> pick;
    std::vector<double> trial = taus;
    if (pair) {
      trial.resize(taus.size() + 2);
      for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = 0; b < a; ++b) {
          if (g[a] < 1.15 * g[b]) continue;
          trial[taus.size()] = g[a];
          trial[taus.size() + 1] = g[b];
          const double c = projected_cost(t, y, t0, trial);
          if (c < best) {
            best = c;
            pick = {g[a], g[b]};
          }
        }
    } else {
      trial.resize(taus.size() + 1);
      for (double v : g) {
        trial.back() = v;
        const double c = projected_cost(t, y, t0, trial);
        if (c < best) {
          best = c;
          pick = {v};
        }
      }
    }
    taus.insert(taus.end(), pick.begin(), pick.end());
    taus = refine_taus(t, y, t0, taus, first, 0.5 * tau_lo, 2.0 * tau_hi);
  }
  return taus;
}

inline std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

}  // namespace detail

// Cascade of first-order stages with the same discrete step response as
// 1 + sum B_i rho_i^n. Poles and zeros are paired in sorted order, which
// yields the realization with the smallest stage amplitudes.
inline std::vector<IirStage> terms_to_stages(std::span<const ExponentialTerm> terms, double dt) {
  const std::size_t n = terms.size();
  if (n == 0) return {};
  std::vector<double> rho(n);
  for (std::size_t i = 0; i < n; ++i) rho[i] = std::exp(-dt / terms[i].tau);
  // Numerator polynomial in w = z^-1, lowest order first.
  std::vector<double> num(n + 1, 0.0);
  std::vector<double> all{1.0};
  for (std::size_t j = 0; j < n; ++j) all = detail::poly_mul(all, {1.0, -rho[j]});
  for (std::size_t k = 0; k <= n; ++k) num[k] += all[k];
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p{terms[i].amplitude, -terms[i].amplitude};
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) p = detail::poly_mul(p, {1.0, -rho[j]});
    for (std::size_t k = 0; k <= n; ++k) num[k] += p[k];
  }
  if (std::abs(num[n]) < 1e-300) throw NumericalError("terms_to_stages: degenerate numerator");
  // Companion matrix of the monic polynomial in w.
  MatrixXd comp = MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k)
    comp(0, static_cast<Eigen::Index>(k)) = -num[n - 1 - k] / num[n];
  for (std::size_t k = 1; k < n; ++k) comp(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = 1.0;
  Eigen::EigenSolver<MatrixXd> es(comp);
  std::vector<double> zeros;  // z = 1 / w
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const Complex w = es.eigenvalues()(k);
    if (std::abs(w.imag()) > 1e-6 * std::abs(w))
      throw NumericalError("terms_to_stages: complex zero, no real cascade realization");
    zeros.push_back(1.0 / w.real());
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rho[a] > rho[b]; });
  std::sort(zeros.begin(), zeros.end(), std::greater<>());
  std::vector<IirStage> stages;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = rho[order[k]], z = zeros[k];
    if (!(z < 1.0)) throw NumericalError("terms_to_stages: zero outside the unit interval");
    stages.push_back({(r - z) / (z - 1.0), terms[order[k]].tau});
  }
  return stages;
}

namespace detail {

// Direct fit of g * step response of a stage cascade; used when the
// sum-of-exponentials form has no real cascade realization.
inline std::vector<IirStage> fit_cascade(std::span<const double> t, std::span<const double> y, double t0,
                                         double& gain, std::vector<IirStage> seed, double dt, double& rms) {
  const auto n = static_cast<std::size_t>(std::ceil((t.back() - t0) / dt)) + 2;
  const auto m = static_cast<Eigen::Index>(seed.size());
  auto model = [&](const VectorXd& q) {
    DistortionChain c;
    c.dt = dt;
    for (Eigen::Index k = 0; k < m; ++k) c.stages.push_back({q(1 + 2 * k), std::exp(q(2 + 2 * k))});
    const Waveform s = apply_chain(unit_step(n, dt), c);
    VectorXd r(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double u = std::max(0.0, (t[i] - t0) / dt);
      const auto k = std::min(static_cast<std::size_t>(u), n - 2);
      const double f = u - static_cast<double>(k);
      r(static_cast<Eigen::Index>(i)) = q(0) * (s.samples[k] + f * (s.samples[k + 1] - s.samples[k])) - y[i];
    }
    return r;
  };
  VectorXd q(1 + 2 * m);
  LsqOptions o;
  o.lower = VectorXd(q.size());
  o.upper = VectorXd(q.size());
  q(0) = gain;
  (*o.lower)(0) = -1e3;
  (*o.upper)(0) = 1e3;
  for (Eigen::Index k = 0; k < m; ++k) {
    q(1 + 2 * k) = seed[static_cast<std::size_t>(k)].amplitude;
    q(2 + 2 * k) = std::log(seed[static_cast<std::size_t>(k)].tau);
    (*o.lower)(1 + 2 * k) = -0.99;
    (*o.upper)(1 + 2 * k) = 10.0;
    (*o.lower)(2 + 2 * k) = std::log(0.5 * dt);
    (*o.upper)(2 + 2 * k) = std::log(10.0 * t.back());
  }
  o.max_iterations = 400;
  const auto res = levenberg_marquardt(model, q, o);
  gain = res.x(0);
  rms = res.rms();
  std::vector<IirStage> out;
  for (Eigen::Index k = 0; k < m; ++k) out.push_back({res.x(1 + 2 * k), std::exp(res.x(2 + 2 * k))});
  std::sort(out.begin(), out.end(), [](const IirStage& a, const IirStage& b) { return a.tau > b.tau; });
  return out;
}

}  // namespace detail

// Two-pass identification of y = g (1 + sum B_k exp(-(t - t0)/tau_k)): long
// terms on t > long_cut, then short terms on all samples with the long time
// constants held, then a joint refinement of every time constant.
inline ExponentialFit fit_exponentials(std::span<const double> t, std::span<const double> y,
                                       const CryoscopeConfig& cfg) {
  if (t.size() != y.size() || t.empty()) throw std::invalid_argument("fit_exponentials: size mismatch");
  if (cfg.n_long < 0 || cfg.n_short < 0) throw std::invalid_argument("fit_exponentials: negative term count");
  const double t0 = 0.5 * cfg.dt;
  std::vector<double> tl, yl, ta, ya;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < cfg.fit_t_min) continue;
    ta.push_back(t[i]);
    ya.push_back(y[i]);
    if (t[i] > cfg.long_cut) {
      tl.push_back(t[i]);
      yl.push_back(y[i]);
    }
  }
  if (ta.size() < static_cast<std::size_t>(2 * (cfg.n_long + cfg.n_short) + 1))
    throw std::invalid_argument("fit_exponentials: not enough samples");
  if (cfg.n_long > 0 && tl.size() < static_cast<std::size_t>(2 * cfg.n_long + 1))
    throw std::invalid_argument("fit_exponentials: not enough samples beyond the long cut");
  const double span = t.back();
  std::vector<double> taus;
  if (cfg.n_long > 0) taus = detail::add_terms(tl, yl, t0, taus, cfg.n_long, 0.25 * cfg.long_cut, 2.0 * span);
  const double tau_floor = std::max(cfg.dt, 0.25 * cfg.fit_t_min);
  if (cfg.n_short > 0) taus = detail::add_terms(ta, ya, t0, taus, cfg.n_short, 2.0 * tau_floor, cfg.long_cut);
  taus = detail::refine_taus(ta, ya, t0, taus, 0, tau_floor, 4.0 * span);

  auto rms_of = [&](std::span<const double> tk) {
    return std::sqrt(detail::projected_cost(ta, ya, t0, tk) / static_cast<double>(ta.size()));
  };
  // Backward elimination of terms the data does not need.
  const double full_rms = rms_of(taus);
  const double keep_below = std::max(2.0 * full_rms, cfg.fit_rms_floor);
  while (!taus.empty()) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_taus;
    for (std::size_t k = 0; k < taus.size(); ++k) {
      std::vector<double> trial = taus;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(k));
      trial = detail::refine_taus(ta, ya, t0, trial, 0, tau_floor, 4.0 * span);
      const double r = rms_of(trial);
      if (r < best) {
        best = r;
        best_taus = trial;
      }
    }
    if (!(best <= keep_below)) break;
    taus = best_taus;
  }

  VectorXd r;
  const VectorXd c = detail::project(ta, ya, t0, taus, &r);
  ExponentialFit fit;
  fit.gain = c(0);
  if (!(std::abs(fit.gain) > 0.0)) throw NumericalError("fit_exponentials: zero gain");
  for (std::size_t k = 0; k < taus.size(); ++k)
    fit.terms.push_back({c(static_cast<Eigen::Index>(k) + 1) / fit.gain, taus[k]});
  std::sort(fit.terms.begin(), fit.terms.end(),
            [](const ExponentialTerm& a, const ExponentialTerm& b) { return a.tau > b.tau; });
  fit.rms = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
  if (fit.rms > cfg.fit_rms_tolerance)
    fit.warnings.push_back("fit residual " + std::to_string(fit.rms) + " above tolerance");
  for (std::size_t i = 1; i < fit.terms.size(); ++i)
    if (fit.terms[i - 1].tau < 1.1 * fit.terms[i].tau)
      fit.warnings.push_back("time constants " + std::to_string(fit.terms[i - 1].tau) + " and " +
                             std::to_string(fit.terms[i].tau) + " lie within 10%");
  try {
    fit.stages = terms_to_stages(fit.terms, cfg.dt);
  } catch (const NumericalError& e) {
    fit.warnings.push_back(std::string(e.what()) + "; fitted the cascade directly");
    std::vector<IirStage> seed;
    for (const auto& term : fit.terms) seed.push_back({std::clamp(term.amplitude, -0.9, 5.0), term.tau});
    double rms = 0.0;
    fit.stages = detail::fit_cascade(ta, ya, t0, fit.gain, seed, cfg.dt, rms);
    fit.rms = rms;
  }
  return fit;
}

// Correction taps h minimizing |h * r - 1| over the first 2M samples, with a
// unit-DC-gain row; r is the step response left after the IIR correction.
inline FirFilter fit_fir(std::span<const double> residual_step, int taps, double dt = kDefaultAwgDt) {
  if (taps < 1) throw std::invalid_argument("fit_fir: need at least one tap");
  const auto m = static_cast<std::size_t>(taps);
  const std::size_t rows = std::min(residual_step.size(), 2 * m);
  if (rows < m) throw std::invalid_argument("fit_fir: residual response shorter than the filter");
  MatrixXd a = MatrixXd::Zero(static_cast<Eigen::Index>(rows + 1), static_cast<Eigen::Index>(m));
  VectorXd b = VectorXd::Ones(static_cast<Eigen::Index>(rows + 1));
  for (std::size_t n = 0; n < rows; ++n)
    for (std::size_t k = 0; k <= n && k < m; ++k)
      a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) = residual_step[n - k];
  const double w = 10.0;
  a.row(static_cast<Eigen::Index>(rows)).setConstant(w);
  b(static_cast<Eigen::Index>(rows)) = w;
  const VectorXd h = a.colPivHouseholderQr().solve(b);
  FirFilter f;
  f.dt = dt;
  f.taps.assign(h.data(), h.data() + h.size());
  return f;
}

struct CryoscopeResult {
  CryoscopeTrace trace;
  AmplitudeCalibration calibration;
  ResponseTrace response;
  ExponentialFit fit;
  std::optional<FirFilter> fir;     // correction taps
  DistortionChain identified;       // fitted line model (IIR stages)
  Predistortion predistortion;      // inverse IIR stages + FIR correction
};

// Step response on the sample grid from the reconstructed trace, sample k
// taken at its hold-interval centre.
inline std::vector<double> resample_response(const ResponseTrace& r, std::size_t n, double dt) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * dt;
    const auto it = std::upper_bound(r.t.begin(), r.t.end(), t);
    if (it == r.t.begin()) {
      out[k] = r.value.front();
    } else if (it == r.t.end()) {
      out[k] = r.value.back();
    } else {
      const auto i = static_cast<std::size_t>(it - r.t.begin());
      const double f = (t - r.t[i - 1]) / (r.t[i] - r.t[i - 1]);
      out[k] = r.value[i - 1] + f * (r.value[i] - r.value[i - 1]);
    }
  }
  return out;
}

inline CryoscopeResult run_cryoscope(const Q1ShiftModel& shift, const DistortionChain& chain,
                                     const CryoscopeConfig& cfg, const Parallelism& par = Parallelism{}) {
  CryoscopeResult out;
  out.trace = simulate_trace(shift, chain, cfg.amplitude, cfg, 0.0, cfg.grid, par);
  out.calibration = calibrate_amplitude(shift, chain, calibration_amplitudes(cfg), cfg, par);
  out.response = reconstruct_response(out.trace, out.calibration, cfg);
  out.fit = fit_exponentials(out.response.t, out.response.value, cfg);
  // Normalize so the identified line has unit DC gain.
  for (auto& v : out.response.value) v /= out.fit.gain;
  out.identified.dt = cfg.dt;
  out.identified.stages = out.fit.stages;
  out.predistortion = invert_chain(out.identified);
  if (cfg.fir_taps > 0) {
    const auto n = static_cast<std::size_t>(4 * cfg.fir_taps);
    Waveform measured;
    measured.dt = cfg.dt;
    measured.samples = resample_response(out.response, n, cfg.dt);
    // Pre-distortion commutes with the line, so correcting the measured step
    // leaves the residual the FIR has to absorb.
    Predistortion iir = out.predistortion;
    const Waveform residual = apply_predistortion(measured, iir);
    out.fir = fit_fir(residual.samples, cfg.fir_taps, cfg.dt);
    out.predistortion.fir_inverse = out.fir->taps;
  }
  return out;
}

}  // namespace czcal

#endif  // CZCAL_CRYOSCOPE_HPP_
