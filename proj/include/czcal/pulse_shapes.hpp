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

// Flux-pulse parametrizations. All pulses are flux offsets (units of the flux
// quantum) relative to the idle point and are sampled pointwise at the AWG
// rate; no sampler integrates or filters.

#ifndef CZCAL_PULSE_SHAPES_HPP_
#define CZCAL_PULSE_SHAPES_HPP_

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "czcal/common.hpp"

namespace czcal {

inline constexpr double kDefaultAwgDt = 0.5e-9;  // 2 GS/s

struct Waveform {
  std::vector<double> samples;  // flux offset at t0 + k*dt
  double dt = kDefaultAwgDt;
  double t0 = 0.0;
  double buffer_after = 0.0;

  std::size_t size() const { return samples.size(); }
  double duration() const {
    return samples.empty() ? 0.0 : static_cast<double>(samples.size() - 1) * dt;
  }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }

  // Piecewise-linear value at time t (relative to t0), zero outside.
  double at(double t) const {
    const double u = (t - t0) / dt;
    if (u < 0.0 || samples.empty()) return 0.0;
    const auto last = static_cast<double>(samples.size() - 1);
    if (u >= last) return u == last ? samples.back() : 0.0;
    const auto i = static_cast<std::size_t>(u);
    const double f = u - static_cast<double>(i);
    return samples[i] + f * (samples[i + 1] - samples[i]);
  }

  void append_zeros(double seconds) {
    const auto n = static_cast<std::size_t>(std::llround(seconds / dt));
    samples.insert(samples.end(), n, 0.0);
    buffer_after += static_cast<double>(n) * dt;
  }
};

struct GaussianSquareParams {
  double amplitude = 0.12;   // Phi_f
  double width = 50e-9;      // w
  double rise_time = 2e-9;   // tau_R
  double phi1 = 0.0;
  double phi2 = 0.0;
  double buffer = 0.0;
};

struct FourierParams {
  double amplitude = 0.12;
  double width = 60e-9;
  std::vector<double> lambdas = {1.0, 0.0, 0.0, 0.0, 0.0};
  double phi1 = 0.0;
  double phi2 = 0.0;
  double buffer = 0.0;
};

struct PiCoSParams {
  std::vector<double> nodes = std::vector<double>(17, 1.0);
  double amplitude = 0.12;
  double width = 60e-9;
  double phi1 = 0.0;
  double phi2 = 0.0;
  double buffer = 0.0;
};

using PulseParams = std::variant<GaussianSquareParams, FourierParams, PiCoSParams>;

enum class PulseFamily { kGaussianSquare, kFourier, kPiCoS };

inline std::string_view family_name(PulseFamily f) {
  switch (f) {
    case PulseFamily::kGaussianSquare: return "gaussian-square";
    case PulseFamily::kFourier: return "fourier";
    case PulseFamily::kPiCoS: return "picos";
  }
  return "?";
}

inline PulseFamily parse_family(std::string_view s) {
  if (s == "gaussian-square" || s == "gs") return PulseFamily::kGaussianSquare;
  if (s == "fourier") return PulseFamily::kFourier;
  if (s == "picos") return PulseFamily::kPiCoS;
  throw std::invalid_argument("unknown pulse family '" + std::string(s) + "'");
}

inline PulseFamily family_of(const PulseParams& p) {
  return static_cast<PulseFamily>(p.index());
}

inline PulseParams default_params(PulseFamily f) {
  switch (f) {
    case PulseFamily::kGaussianSquare: return GaussianSquareParams{};
    case PulseFamily::kFourier: return FourierParams{};
    case PulseFamily::kPiCoS: return PiCoSParams{};
  }
  throw std::invalid_argument("default_params: bad family");
}

inline std::pair<double, double> virtual_z(const PulseParams& p) {
  return std::visit([](const auto& q) { return std::pair{q.phi1, q.phi2}; }, p);
}

namespace detail {

inline void check_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("pulse sampling: dt must be positive");
}

// Number of samples covering [0, w] with t_k = k dt, endpoints included.
inline std::size_t span_samples(double width, double dt) {
  return static_cast<std::size_t>(std::ceil(width / dt - 1e-9)) + 1;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gaussian-square: product of two error-function edges, sampled on a grid
// symmetric about the pulse centre that extends 4.5 tau_R past each edge.

inline constexpr double kGaussianSquareTail = 4.5;

inline double gaussian_square_value(const GaussianSquareParams& p, double t) {
  const double up = 0.5 * (1.0 + std::erf((t + 0.5 * p.width) / p.rise_time));
  const double down = 0.5 * (1.0 + std::erf((-t + 0.5 * p.width) / p.rise_time));
  return p.amplitude * up * down;
}

inline Waveform sample_gaussian_square(const GaussianSquareParams& p,
                                       double dt = kDefaultAwgDt) {
  detail::check_dt(dt);
  if (!(p.width > 0.0) || !(p.rise_time > 0.0))
    throw std::invalid_argument("gaussian-square: width and rise time must be positive");
  if (std::abs(p.amplitude) > 0.5)
    throw std::invalid_argument("gaussian-square: |amplitude| exceeds half a flux quantum");
  const double half = 0.5 * p.width + kGaussianSquareTail * p.rise_time;
  const auto m = static_cast<std::size_t>(std::ceil(half / dt - 1e-9));
  Waveform wf;
  wf.dt = dt;
  wf.t0 = -static_cast<double>(m) * dt;
  wf.samples.resize(2 * m + 1);
  for (std::size_t k = 0; k <= 2 * m; ++k) {
    const double t = (static_cast<double>(k) - static_cast<double>(m)) * dt;
    wf.samples[k] = gaussian_square_value(p, t);
  }
  // Exact even symmetry regardless of erf rounding.
  for (std::size_t k = 0; k < m; ++k) wf.samples[2 * m - k] = wf.samples[k];
  wf.append_zeros(p.buffer);
  return wf;
}

// ---------------------------------------------------------------------------
// Fourier series: e(t) = sum_n lambda_n (1 - cos(2 pi n t / w)) on [0, w],
// rescaled so the continuous maximum equals the amplitude.

inline double fourier_envelope(std::span<const double> lambdas, double x) {
  double e = 0.0;
  for (std::size_t n = 0; n < lambdas.size(); ++n)
    e += lambdas[n] * (1.0 - std::cos(kTwoPi * static_cast<double>(n + 1) * x));
  return e;
}

struct EnvelopePeak {
  double position;  // fraction of the width
  double value;
};

// Continuous maximum of the raw envelope on x in [0, 1]: scan, then
// golden-section refinement of the best bracket.
inline EnvelopePeak fourier_envelope_peak(std::span<const double> lambdas) {
  constexpr int kScan = 4096;
  int best = 0;
  double best_v = fourier_envelope(lambdas, 0.0);
  for (int i = 1; i <= kScan; ++i) {
    const double v = fourier_envelope(lambdas, static_cast<double>(i) / kScan);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  double a = std::max(0, best - 1) / static_cast<double>(kScan);
  double b = std::min(kScan, best + 1) / static_cast<double>(kScan);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = fourier_envelope(lambdas, c), fd = fourier_envelope(lambdas, d);
  for (int it = 0; it < 80 && b - a > 1e-15; ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a);
      fc = fourier_envelope(lambdas, c);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a);
      fd = fourier_envelope(lambdas, d);
    }
  }
  const double x = 0.5 * (a + b);
  EnvelopePeak peak{x, fourier_envelope(lambdas, x)};
  if (best_v > peak.value) peak = {best / static_cast<double>(kScan), best_v};
  return peak;
}

inline Waveform sample_fourier(const FourierParams& p, double dt = kDefaultAwgDt) {
  detail::check_dt(dt);
  if (p.lambdas.empty())
    throw std::invalid_argument("fourier: need at least one coefficient");
  if (!(p.width > 0.0)) throw std::invalid_argument("fourier: width must be positive");
  const EnvelopePeak peak = fourier_envelope_peak(p.lambdas);
  if (!(peak.value > 1e-12))
    throw std::invalid_argument("fourier: envelope has no positive peak to normalize");
  const std::size_t n = detail::span_samples(p.width, dt);
  Waveform wf;
  wf.dt = dt;
  wf.samples.resize(n);
  const double scale = p.amplitude / peak.value;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    wf.samples[k] = t >= p.width ? 0.0 : scale * fourier_envelope(p.lambdas, t / p.width);
  }
  wf.samples.front() = 0.0;
  wf.append_zeros(p.buffer);
  return wf;
}

// ---------------------------------------------------------------------------
// PiCoS: nodes at the centres of N_Y equal segments, joined by straight
// lines, with linear ramps from zero at t = 0 and back to zero at t = w.

inline double picos_value(const PiCoSParams& p, double t) {
  if (t <= 0.0 || t >= p.width) return 0.0;
  const auto ny = static_cast<double>(p.nodes.size());
  const double seg = p.width / ny;
  const double u = t / seg - 0.5;  // node i sits at u = i
  if (u <= 0.0) return p.amplitude * p.nodes.front() * (t / (0.5 * seg));
  if (u >= ny - 1.0) return p.amplitude * p.nodes.back() * ((p.width - t) / (0.5 * seg));
  const auto i = static_cast<std::size_t>(u);
  const double f = u - static_cast<double>(i);
  return p.amplitude * (p.nodes[i] + f * (p.nodes[i + 1] - p.nodes[i]));
}

inline Waveform sample_picos(const PiCoSParams& p, double dt = kDefaultAwgDt) {
  detail::check_dt(dt);
  if (p.nodes.size() < 2) throw std::invalid_argument("picos: need at least two nodes");
  if (!(p.width > 0.0)) throw std::invalid_argument("picos: width must be positive");
  const std::size_t n = detail::span_samples(p.width, dt);
  Waveform wf;
  wf.dt = dt;
  wf.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) wf.samples[k] = picos_value(p, static_cast<double>(k) * dt);
  wf.append_zeros(p.buffer);
  return wf;
}

inline Waveform sample(const PulseParams& p, double dt = kDefaultAwgDt) {
  return std::visit(
      [dt](const auto& q) -> Waveform {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, GaussianSquareParams>) return sample_gaussian_square(q, dt);
        else if constexpr (std::is_same_v<T, FourierParams>) return sample_fourier(q, dt);
        else return sample_picos(q, dt);
      },
      p);
}

// ---------------------------------------------------------------------------
// Optimizer vector layout. Virtual-Z angles are always the last two entries.
//   gaussian-square: {A, w, tau_R, phi1, phi2}
//   fourier:         {A, w, lambda_1..lambda_N, phi1, phi2}
//   picos:           {Y_1..Y_N, A, w, phi1, phi2}
// Widths and rise times are in seconds. The buffer is not optimized.

inline std::vector<double> parameter_vector(const PulseParams& p) {
  return std::visit(
      [](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        std::vector<double> v;
        if constexpr (std::is_same_v<T, GaussianSquareParams>) {
          v = {q.amplitude, q.width, q.rise_time};
        } else if constexpr (std::is_same_v<T, FourierParams>) {
          v = {q.amplitude, q.width};
          v.insert(v.end(), q.lambdas.begin(), q.lambdas.end());
        } else {
          v = q.nodes;
          v.push_back(q.amplitude);
          v.push_back(q.width);
        }
        v.push_back(q.phi1);
        v.push_back(q.phi2);
        return v;
      },
      p);
}

inline std::vector<std::string> parameter_names(const PulseParams& p) {
  return std::visit(
      [](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        std::vector<std::string> v;
        if constexpr (std::is_same_v<T, GaussianSquareParams>) {
          v = {"amplitude", "width", "rise_time"};
        } else if constexpr (std::is_same_v<T, FourierParams>) {
          v = {"amplitude", "width"};
          for (std::size_t i = 0; i < q.lambdas.size(); ++i)
            v.push_back("lambda" + std::to_string(i + 1));
        } else {
          for (std::size_t i = 0; i < q.nodes.size(); ++i)
            v.push_back("Y" + std::to_string(i + 1));
          v.push_back("amplitude");
          v.push_back("width");
        }
        v.push_back("phi1");
        v.push_back("phi2");
        return v;
      },
      p);
}

// Inverse of parameter_vector; `shape` supplies the family, the coefficient
// count, and the (non-optimized) buffer.
inline PulseParams from_parameter_vector(const PulseParams& shape,
                                         std::span<const double> v) {
  const std::size_t expected = parameter_vector(shape).size();
  if (v.size() != expected)
    throw std::invalid_argument("from_parameter_vector: expected " +
                                std::to_string(expected) + " entries, got " +
                                std::to_string(v.size()));
  return std::visit(
      [&](auto q) -> PulseParams {
        using T = std::decay_t<decltype(q)>;
        const std::size_t n = v.size();
        if constexpr (std::is_same_v<T, GaussianSquareParams>) {
          q.amplitude = v[0];
          q.width = v[1];
          q.rise_time = v[2];
        } else if constexpr (std::is_same_v<T, FourierParams>) {
          q.amplitude = v[0];
          q.width = v[1];
          q.lambdas.assign(v.begin() + 2, v.end() - 2);
        } else {
          q.nodes.assign(v.begin(), v.end() - 4);
          q.amplitude = v[n - 4];
          q.width = v[n - 3];
        }
        q.phi1 = v[n - 2];
        q.phi2 = v[n - 1];
        return q;
      },
      shape);
}

}  // namespace czcal

#endif  // CZCAL_PULSE_SHAPES_HPP_
