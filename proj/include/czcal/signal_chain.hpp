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

// Flux-line distortion model: a cascade of exponential IIR stages followed by
// an FIR filter, and its predistortion inverse.
//
// Each stage is discretized step-invariantly, so its unit-step response at
// sample k is exactly 1 + A exp(-k dt / tau). That gives the first-order
// section
//
//   y[n] = rho y[n-1] + (1 + A) x[n] - (rho + A) x[n-1],   rho = exp(-dt/tau).

#ifndef CZCAL_SIGNAL_CHAIN_HPP_
#define CZCAL_SIGNAL_CHAIN_HPP_

#include <optional>
#include <span>
#include <vector>

#include "czcal/common.hpp"
#include "czcal/pulse_shapes.hpp"

namespace czcal {

struct IirStage {
  double amplitude = 0.0;  // A_i
  double tau = 1e-9;       // seconds
};

struct FirFilter {
  std::vector<double> taps = {1.0};
  double dt = kDefaultAwgDt;
};

struct DistortionChain {
  std::vector<IirStage> stages;
  std::optional<FirFilter> fir;
  double dt = kDefaultAwgDt;

  bool empty() const { return stages.empty() && !fir; }
};

// IIR stages fitted to the device's cryoscope data.
inline DistortionChain reference_chain() {
  DistortionChain c;
  c.stages = {{-0.021, 846e-9}, {-0.012, 151e-9}, {-0.393, 36.0e-9}, {0.595, 21.6e-9}};
  return c;
}

// y[n] = b0 x[n] + b1 x[n-1] + a1 y[n-1].
struct FirstOrderSection {
  double b0 = 1.0;
  double b1 = 0.0;
  double a1 = 0.0;

  double dc_gain() const { return (b0 + b1) / (1.0 - a1); }
};

inline void validate_stage(const IirStage& s) {
  if (!(1.0 + s.amplitude > 0.0))
    throw std::invalid_argument("IIR stage requires 1 + A > 0");
  if (!(s.tau > 0.0)) throw std::invalid_argument("IIR stage requires tau > 0");
}

inline FirstOrderSection discretize(const IirStage& s, double dt) {
  validate_stage(s);
  const double rho = std::exp(-dt / s.tau);
  return {1.0 + s.amplitude, -(rho + s.amplitude), rho};
}

// Algebraic inverse of the step-invariant section; itself a stage with
// A' = -A/(1+A) and rho' = (rho+A)/(1+A).
inline FirstOrderSection discretize_inverse(const IirStage& s, double dt) {
  validate_stage(s);
  const double rho = std::exp(-dt / s.tau);
  const double g = 1.0 + s.amplitude;
  const double rho_inv = (rho + s.amplitude) / g;
  if (!(std::abs(rho_inv) < 1.0))
    throw std::invalid_argument("IIR stage inverse is unstable (|rho'| >= 1)");
  return {1.0 / g, -rho / g, rho_inv};
}

inline void filter_in_place(std::vector<double>& x, const FirstOrderSection& s) {
  double x_prev = 0.0, y_prev = 0.0;
  for (double& v : x) {
    const double y = s.b0 * v + s.b1 * x_prev + s.a1 * y_prev;
    x_prev = v;
    y_prev = y;
    v = y;
  }
}

inline std::vector<double> convolve_causal(std::span<const double> x,
                                           std::span<const double> taps) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const std::size_t mmax = std::min(taps.size(), n + 1);
    double acc = 0.0;
    for (std::size_t m = 0; m < mmax; ++m) acc += taps[m] * x[n - m];
    y[n] = acc;
  }
  return y;
}

namespace detail {

inline void check_rate(const Waveform& x, double dt) {
  if (std::abs(x.dt - dt) > 1e-12 * dt)
    throw std::invalid_argument("waveform dt does not match filter sample rate");
}

}  // namespace detail

inline Waveform apply_stage(const Waveform& x, const IirStage& s) {
  Waveform y = x;
  if (s.amplitude == 0.0) {
    validate_stage(s);
    return y;
  }
  filter_in_place(y.samples, discretize(s, x.dt));
  return y;
}

inline Waveform apply_fir(const Waveform& x, const FirFilter& f) {
  detail::check_rate(x, f.dt);
  Waveform y = x;
  y.samples = convolve_causal(x.samples, f.taps);
  return y;
}

inline Waveform apply_chain(const Waveform& x, const DistortionChain& c) {
  detail::check_rate(x, c.dt);
  Waveform y = x;
  for (const auto& s : c.stages) y = apply_stage(y, s);
  if (c.fir) y = apply_fir(y, *c.fir);
  return y;
}

// ---------------------------------------------------------------------------
// Predistortion.

struct Predistortion {
  std::vector<FirstOrderSection> sections;  // inverse IIR sections
  std::vector<double> fir_inverse;          // empty when the chain has no FIR
  double dt = kDefaultAwgDt;
  double grain = kDefaultAwgDt;             // IIR correction update period
};

// Inverse of an FIR filter by recursive deconvolution: g = l^{-1} truncated to
// the shortest length >= M whose full convolution with l deviates from a
// unit impulse by less than `tolerance`.
inline std::vector<double> invert_fir(std::span<const double> taps,
                                      double tolerance = 1e-6,
                                      std::size_t max_length = 1 << 14) {
  if (taps.empty()) throw std::invalid_argument("invert_fir: empty filter");
  if (taps[0] == 0.0) throw std::invalid_argument("invert_fir: leading tap is zero");
  const std::size_t m = taps.size();
  std::vector<double> g;
  g.reserve(max_length);
  auto residual = [&] {
    double worst = 0.0;
    for (std::size_t n = g.size(); n < g.size() + m - 1; ++n) {
      double acc = 0.0;
      for (std::size_t k = n - std::min(n, m - 1); k < g.size() && k <= n; ++k)
        acc += taps[n - k] * g[k];
      worst = std::max(worst, std::abs(acc));
    }
    return worst;
  };
  std::size_t target = m;
  while (true) {
    while (g.size() < target) {
      const std::size_t n = g.size();
      double acc = n == 0 ? 1.0 : 0.0;
      for (std::size_t k = 1; k < m && k <= n; ++k) acc -= taps[k] * g[n - k];
      g.push_back(acc / taps[0]);
    }
    const double r = residual();
    if (r < tolerance) return g;
    if (target >= max_length)
      throw NumericalError("invert_fir: residual " + std::to_string(r) +
                           " above tolerance at maximum length");
    target = std::min(max_length, 2 * target);
  }
}

inline Predistortion invert_chain(const DistortionChain& c) {
  Predistortion p;
  p.dt = c.dt;
  p.grain = c.dt;
  for (auto it = c.stages.rbegin(); it != c.stages.rend(); ++it)
    p.sections.push_back(discretize_inverse(*it, c.dt));
  if (c.fir) {
    detail::check_rate(Waveform{{}, c.fir->dt}, c.dt);
    p.fir_inverse = invert_fir(c.fir->taps);
  }
  return p;
}

// Predistortion of only the stages with tau <= max_tau (plus the FIR); the
// long-time-scale part of the response is left uncorrected.
inline Predistortion invert_chain_up_to(const DistortionChain& c, double max_tau) {
  DistortionChain partial = c;
  std::erase_if(partial.stages, [&](const IirStage& s) { return s.tau > max_tau; });
  return invert_chain(partial);
}

inline Predistortion emulate_granularity(Predistortion p, double grain) {
  if (!(grain > 0.0)) throw std::invalid_argument("granularity must be positive");
  const double ratio = grain / p.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0)
    throw std::invalid_argument("granularity must be a multiple of the sample period");
  p.grain = grain;
  return p;
}

inline Waveform apply_predistortion(const Waveform& x, const Predistortion& p) {
  detail::check_rate(x, p.dt);
  Waveform y = x;
  if (!p.fir_inverse.empty()) y.samples = convolve_causal(y.samples, p.fir_inverse);
  if (p.sections.empty()) return y;
  std::vector<double> corrected = y.samples;
  for (const auto& s : p.sections) filter_in_place(corrected, s);
  const auto hold = static_cast<std::size_t>(std::llround(p.grain / p.dt));
  if (hold <= 1) {
    y.samples = std::move(corrected);
    return y;
  }
  // The IIR correction c = corrected - input only refreshes every `hold`
  // samples; the input itself passes at the full rate.
  double held = 0.0;
  for (std::size_t n = 0; n < y.samples.size(); ++n) {
    if (n % hold == 0) held = corrected[n] - y.samples[n];
    y.samples[n] += held;
  }
  return y;
}

// Unit step of n samples at rate dt.
inline Waveform unit_step(std::size_t n, double dt = kDefaultAwgDt) {
  Waveform w;
  w.dt = dt;
  w.samples.assign(n, 1.0);
  return w;
}

// Largest |y - 1| at or after `after` for a unit step sent through the
// predistortion and then the chain.
inline double corrected_step_error(const DistortionChain& chain, const Predistortion& p,
                                   std::size_t n, double after) {
  const Waveform y = apply_chain(apply_predistortion(unit_step(n, chain.dt), p), chain);
  double worst = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k)
    if (y.time(k) >= after - 1e-15) worst = std::max(worst, std::abs(y.samples[k] - 1.0));
  return worst;
}

}  // namespace czcal

#endif  // CZCAL_SIGNAL_CHAIN_HPP_
