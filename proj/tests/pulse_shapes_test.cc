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

#include "czcal/pulse_shapes.hpp"

#include <gtest/gtest.h>

#include <random>

namespace czcal {
namespace {

TEST(GaussianSquare, FlatTopSaturates) {
  GaussianSquareParams p;
  p.amplitude = 0.1;
  p.width = 40e-9;
  p.rise_time = 2e-9;
  const double r = gaussian_square_value(p, 0.0) / p.amplitude;
  EXPECT_GE(r, 0.999999);
  EXPECT_LE(r, 1.0);
}

TEST(GaussianSquare, EvenAndZeroAtEnds) {
  GaussianSquareParams p;
  p.width = 37e-9;
  p.rise_time = 3.3e-9;
  const Waveform w = sample_gaussian_square(p);
  const std::size_t n = w.size();
  ASSERT_EQ(n % 2, 1u);
  for (std::size_t k = 0; k < n; ++k) EXPECT_EQ(w.samples[k], w.samples[n - 1 - k]);
  EXPECT_NEAR(w.time(n / 2), 0.0, 1e-18);
  EXPECT_LT(std::abs(w.samples.front()), 1e-9 * p.amplitude);
  EXPECT_LT(std::abs(w.samples.back()), 1e-9 * p.amplitude);
  EXPECT_GE(w.time(0), -0.5 * p.width - 4.5 * p.rise_time - w.dt);
}

TEST(GaussianSquare, EdgeValue) {
  GaussianSquareParams p;
  p.amplitude = 0.08;
  p.width = 50e-9;
  p.rise_time = 2e-9;
  const double expected = p.amplitude * 0.5 * (1.0 + std::erf(p.width / p.rise_time)) * 0.5;
  EXPECT_NEAR(gaussian_square_value(p, 0.5 * p.width), expected, 1e-15);
  EXPECT_NEAR(gaussian_square_value(p, 0.5 * p.width), 0.5 * p.amplitude, 1e-12);
}

TEST(GaussianSquare, RejectsInvalid) {
  GaussianSquareParams p;
  p.width = 0.0;
  EXPECT_THROW(sample_gaussian_square(p), std::invalid_argument);
  p = {};
  p.amplitude = 0.6;
  EXPECT_THROW(sample_gaussian_square(p), std::invalid_argument);
}

TEST(Fourier, SingleHarmonicPeaksAtCentre) {
  FourierParams p;
  p.amplitude = 0.11;
  p.width = 60e-9;
  const Waveform w = sample_fourier(p);
  EXPECT_NEAR(w.samples[60], p.amplitude, 1e-15);
  EXPECT_EQ(w.samples.front(), 0.0);
  EXPECT_EQ(w.samples.back(), 0.0);
  EXPECT_NEAR(w.duration(), p.width, 1e-18);
}

TEST(Fourier, ZeroAtBoundariesForAnyCoefficients) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    FourierParams p;
    for (auto& l : p.lambdas) l = n(rng);
    p.lambdas[0] = 1.0 + std::abs(p.lambdas[0]);
    EXPECT_NEAR(fourier_envelope(p.lambdas, 0.0), 0.0, 1e-15);
    EXPECT_NEAR(fourier_envelope(p.lambdas, 1.0), 0.0, 1e-12);
    const Waveform w = sample_fourier(p);
    EXPECT_EQ(w.samples.front(), 0.0);
    EXPECT_LT(std::abs(w.samples.back()), 1e-9 * p.amplitude);
  }
}

TEST(Fourier, PeakMatchesDenseScan) {
  const std::vector<double> lambdas = {1.0, 1.0, 0.0, 0.0, 0.0};
  const EnvelopePeak peak = fourier_envelope_peak(lambdas);
  double best_x = 0.0, best_v = -1.0;
  constexpr int kN = 2'000'000;
  for (int i = 0; i <= kN; ++i) {
    const double x = static_cast<double>(i) / kN;
    double v = 0.0;
    for (int k = 0; k < 2; ++k) v += 1.0 - std::cos(2.0 * kPi * (k + 1) * x);
    if (v > best_v) {
      best_v = v;
      best_x = x;
    }
  }
  EXPECT_NEAR(peak.position, best_x, 1e-6);
  EXPECT_NEAR(peak.value, best_v, 1e-6);
  FourierParams p;
  p.lambdas = lambdas;
  const Waveform w = sample_fourier(p);
  double wmax = 0.0;
  for (double s : w.samples) wmax = std::max(wmax, s);
  EXPECT_LE(wmax, p.amplitude * (1.0 + 1e-12));
}

TEST(Fourier, AllZeroCoefficientsRejected) {
  FourierParams p;
  p.lambdas.assign(5, 0.0);
  EXPECT_THROW(sample_fourier(p), std::invalid_argument);
}

TEST(PiCoS, FlatNodesGiveTrapezoid) {
  PiCoSParams p;
  p.amplitude = 0.1;
  p.width = 68e-9;  // 17 segments of 4 ns
  const double seg = p.width / 17.0;
  for (int i = 0; i <= 1000; ++i) {
    const double t = p.width * i / 1000.0;
    const double v = picos_value(p, t);
    if (t >= 0.5 * seg && t <= p.width - 0.5 * seg) {
      EXPECT_NEAR(v, p.amplitude, 1e-15);
    } else {
      const double ramp = std::min(t, p.width - t) / (0.5 * seg);
      EXPECT_NEAR(v, p.amplitude * ramp, 1e-14);
    }
  }
}

TEST(PiCoS, TwoNodeRamp) {
  PiCoSParams p;
  p.nodes = {0.0, 1.0};
  p.amplitude = 0.2;
  p.width = 40e-9;
  const double t1 = 10e-9, t2 = 30e-9;
  for (int i = 0; i <= 20; ++i) {
    const double t = t1 + (t2 - t1) * i / 20.0;
    EXPECT_NEAR(picos_value(p, t), p.amplitude * (t - t1) / (t2 - t1), 1e-14);
  }
}

TEST(PiCoS, NodeAnchors) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PiCoSParams p;
  for (auto& y : p.nodes) y = u(rng);
  p.width = 60e-9;
  const double ny = static_cast<double>(p.nodes.size());
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    const double t = (static_cast<double>(i) + 0.5) * p.width / ny;
    EXPECT_NEAR(picos_value(p, t), p.amplitude * p.nodes[i], 1e-15);
  }
  const Waveform w = sample_picos(p);
  EXPECT_EQ(w.samples.front(), 0.0);
  EXPECT_EQ(w.samples.back(), 0.0);
}

TEST(Sampling, PointwiseUnderRefinement) {
  const std::vector<PulseParams> pulses = {GaussianSquareParams{}, FourierParams{},
                                           PiCoSParams{}};
  for (const auto& p : pulses) {
    const Waveform a = sample(p, 0.5e-9);
    const Waveform b = sample(p, 0.25e-9);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double t = a.time(k);
      const double u = (t - b.t0) / b.dt;
      const auto j = static_cast<std::size_t>(std::llround(u));
      ASSERT_LT(j, b.size());
      EXPECT_NEAR(a.samples[k], b.samples[j], 1e-12);
    }
  }
}

TEST(Sampling, BufferAppendsZeros) {
  FourierParams p;
  p.buffer = 12e-9;
  const Waveform w = sample_fourier(p);
  EXPECT_NEAR(w.buffer_after, 12e-9, 1e-18);
  EXPECT_NEAR(static_cast<double>(w.size()) * w.dt, p.width + p.buffer, w.dt + 1e-18);
  for (std::size_t k = w.size() - 24; k < w.size(); ++k) EXPECT_EQ(w.samples[k], 0.0);
}

TEST(ParameterVector, LengthsAndOrder) {
  EXPECT_EQ(parameter_vector(FourierParams{}).size(), 9u);
  EXPECT_EQ(parameter_vector(PiCoSParams{}).size(), 21u);
  EXPECT_EQ(parameter_vector(GaussianSquareParams{}).size(), 5u);
  FourierParams f;
  f.phi1 = 0.3;
  f.phi2 = -0.7;
  const auto v = parameter_vector(f);
  EXPECT_EQ(v[0], f.amplitude);
  EXPECT_EQ(v[1], f.width);
  EXPECT_EQ(v[7], 0.3);
  EXPECT_EQ(v[8], -0.7);
  EXPECT_EQ(parameter_names(f).size(), 9u);
}

TEST(ParameterVector, RoundTripIsBitwise) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    for (PulseParams shape : {PulseParams{GaussianSquareParams{}}, PulseParams{FourierParams{}},
                              PulseParams{PiCoSParams{}}}) {
      std::vector<double> v = parameter_vector(shape);
      for (auto& x : v) x = n(rng);
      const PulseParams p = from_parameter_vector(shape, v);
      EXPECT_EQ(parameter_vector(p), v);
      EXPECT_EQ(family_of(p), family_of(shape));
    }
  }
}

TEST(ParameterVector, LengthMismatchRejected) {
  const std::vector<double> v(8, 0.0);
  EXPECT_THROW(from_parameter_vector(FourierParams{}, v), std::invalid_argument);
}

TEST(ParameterVector, FamilyNames) {
  for (auto f : {PulseFamily::kGaussianSquare, PulseFamily::kFourier, PulseFamily::kPiCoS})
    EXPECT_EQ(parse_family(family_name(f)), f);
  EXPECT_THROW(parse_family("square"), std::invalid_argument);
}

}  // namespace
}  // namespace czcal
