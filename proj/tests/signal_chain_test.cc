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

#include "czcal/signal_chain.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

namespace czcal {
namespace {

constexpr double kDt = 0.5e-9;

Waveform RandomWaveform(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Waveform w;
  w.samples.resize(n);
  for (auto& s : w.samples) s = u(rng);
  return w;
}

double MaxAbsDiff(const std::vector<double>& a, const std::vector<double>& b,
                  std::size_t from = 0) {
  double m = 0.0;
  for (std::size_t i = from; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(ApplyStage, ZeroAmplitudeIsIdentity) {
  std::mt19937_64 rng(1);
  const Waveform x = RandomWaveform(rng, 300);
  EXPECT_EQ(apply_stage(x, {0.0, 30e-9}).samples, x.samples);
}

TEST(ApplyStage, StepResponseAtTau) {
  const IirStage s{-0.3, 20e-9};
  const Waveform y = apply_stage(unit_step(200), s);
  EXPECT_NEAR(y.samples[40], 1.0 - 0.3 / std::exp(1.0), 1e-12);
  for (std::size_t k = 0; k < y.size(); ++k)
    EXPECT_NEAR(y.samples[k], 1.0 - 0.3 * std::exp(-static_cast<double>(k) * kDt / s.tau), 1e-12);
}

TEST(ApplyStage, ReferenceStageAt60ns) {
  const Waveform y = apply_stage(unit_step(200), {0.595, 21.6e-9});
  EXPECT_NEAR(y.samples[120], 1.0 + 0.595 * std::exp(-60.0 / 21.6), 1e-12);
  EXPECT_NEAR(y.samples[120], 1.0371, 2e-4);
}

TEST(ApplyStage, InvalidStageRejected) {
  EXPECT_THROW(apply_stage(unit_step(10), {-1.0, 10e-9}), std::invalid_argument);
  EXPECT_THROW(apply_stage(unit_step(10), {0.1, 0.0}), std::invalid_argument);
}

TEST(ApplyFir, IdentityAndDelay) {
  std::mt19937_64 rng(2);
  const Waveform x = RandomWaveform(rng, 100);
  FirFilter id;
  id.taps = std::vector<double>(72, 0.0);
  id.taps[0] = 1.0;
  EXPECT_EQ(apply_fir(x, id).samples, x.samples);
  FirFilter delay = id;
  delay.taps[0] = 0.0;
  delay.taps[1] = 1.0;
  const Waveform y = apply_fir(x, delay);
  EXPECT_EQ(y.samples[0], 0.0);
  for (std::size_t k = 1; k < x.size(); ++k) EXPECT_EQ(y.samples[k], x.samples[k - 1]);
}

TEST(ApplyFir, MatchesNaiveConvolution) {
  std::mt19937_64 rng(3);
  const Waveform x = RandomWaveform(rng, 500);
  FirFilter f;
  f.taps = RandomWaveform(rng, 72).samples;
  const auto ref = oracle::naive_convolution(x.samples, f.taps);
  EXPECT_LT(MaxAbsDiff(apply_fir(x, f).samples, ref), 1e-12);
}

TEST(ApplyChain, EmptyAndSingleStage) {
  std::mt19937_64 rng(4);
  const Waveform x = RandomWaveform(rng, 200);
  EXPECT_EQ(apply_chain(x, DistortionChain{}).samples, x.samples);
  DistortionChain c;
  c.stages = {{0.2, 15e-9}};
  EXPECT_EQ(apply_chain(x, c).samples, apply_stage(x, c.stages[0]).samples);
}

TEST(ApplyChain, ReferenceChainSettles) {
  const DistortionChain c = reference_chain();
  const std::size_t n = static_cast<std::size_t>(12 * 846e-9 / kDt);
  const Waveform y = apply_chain(unit_step(n), c);
  const std::size_t settle = static_cast<std::size_t>(10 * 846e-9 / kDt);
  for (std::size_t k = settle; k < n; ++k) EXPECT_NEAR(y.samples[k], 1.0, 1e-3);
  EXPECT_NEAR(discretize(c.stages[2], kDt).dc_gain(), 1.0, 1e-12);
}

TEST(ApplyChain, SampleRateMismatchRejected) {
  Waveform x = unit_step(10, 1e-9);
  EXPECT_THROW(apply_chain(x, reference_chain()), std::invalid_argument);
}

TEST(ApplyChain, LinearTimeInvariantCommutative) {
  std::mt19937_64 rng(5);
  const DistortionChain c = reference_chain();
  const Waveform x = RandomWaveform(rng, 400), y = RandomWaveform(rng, 400);
  Waveform mix = x;
  for (std::size_t k = 0; k < x.size(); ++k) mix.samples[k] = 0.7 * x.samples[k] - 1.3 * y.samples[k];
  const auto cx = apply_chain(x, c).samples, cy = apply_chain(y, c).samples;
  const auto cm = apply_chain(mix, c).samples;
  for (std::size_t k = 0; k < x.size(); ++k)
    EXPECT_NEAR(cm[k], 0.7 * cx[k] - 1.3 * cy[k], 1e-12);

  Waveform shifted = x;
  shifted.samples.insert(shifted.samples.begin(), 7, 0.0);
  const auto cs = apply_chain(shifted, c).samples;
  for (std::size_t k = 0; k < 7; ++k) EXPECT_EQ(cs[k], 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) EXPECT_EQ(cs[k + 7], cx[k]);

  DistortionChain rev = c;
  std::reverse(rev.stages.begin(), rev.stages.end());
  EXPECT_LT(MaxAbsDiff(apply_chain(x, rev).samples, cx), 1e-10);
}

TEST(InvertChain, IdentityChain) {
  std::mt19937_64 rng(6);
  const Waveform x = RandomWaveform(rng, 100);
  const Predistortion p = invert_chain(DistortionChain{});
  EXPECT_EQ(apply_predistortion(x, p).samples, x.samples);
}

TEST(InvertChain, SingleStageIsExactReciprocal) {
  DistortionChain c;
  c.stages = {{-0.3, 40e-9}};
  const Predistortion p = invert_chain(c);
  const Waveform y = apply_chain(apply_predistortion(unit_step(2000), p), c);
  for (double v : y.samples) EXPECT_NEAR(v, 1.0, 1e-9);
  // The inverse is itself a step-invariant stage with A' = -A / (1 + A).
  const Waveform inv = apply_predistortion(unit_step(400), p);
  const double a_inv = 0.3 / 0.7;
  EXPECT_NEAR(inv.samples[0], 1.0 + a_inv, 1e-12);
}

TEST(InvertChain, ReferenceChainRoundTrip) {
  const DistortionChain c = reference_chain();
  const std::size_t n = 6000;
  const Waveform y = apply_chain(apply_predistortion(unit_step(n), invert_chain(c)), c);
  double err = 0.0;
  for (double v : y.samples) err = std::max(err, std::abs(v - 1.0));
  EXPECT_LT(err, 1e-6);
  for (std::size_t k = 120; k < n; ++k) EXPECT_NEAR(y.samples[k], 1.0, 5e-3);
}

TEST(InvertChain, NonInvertibleStageRejected) {
  DistortionChain c;
  c.stages = {{-0.9, 1e-9}};  // rho' = (rho + A) / (1 + A) < -1
  EXPECT_THROW(invert_chain(c), std::invalid_argument);
}

TEST(InvertChain, WithFir) {
  DistortionChain c = reference_chain();
  FirFilter f;
  f.taps.assign(72, 0.0);
  f.taps[0] = 0.9;
  f.taps[1] = 0.08;
  f.taps[2] = 0.02;
  c.fir = f;
  const Predistortion p = invert_chain(c);
  EXPECT_GE(p.fir_inverse.size(), 72u);
  const Waveform y = apply_chain(apply_predistortion(unit_step(3000), p), c);
  for (double v : y.samples) EXPECT_NEAR(v, 1.0, 1e-6);
}

TEST(InvertFir, ResidualTooLargeRejected) {
  // Maximum-phase filter: the causal inverse diverges.
  const std::vector<double> taps = {0.5, 1.0};
  EXPECT_THROW(invert_fir(taps, 1e-6, 256), NumericalError);
  EXPECT_THROW(invert_fir(std::vector<double>{0.0, 1.0}), std::invalid_argument);
}

TEST(InvertChain, RandomRoundTrips) {
  std::mt19937_64 rng(7);
  const DistortionChain c = reference_chain();
  const Predistortion p = invert_chain(c);
  for (int trial = 0; trial < 100; ++trial) {
    const Waveform x = RandomWaveform(rng, 300);
    const Waveform y = apply_chain(apply_predistortion(x, p), c);
    double peak = 0.0;
    for (double v : x.samples) peak = std::max(peak, std::abs(v));
    EXPECT_LT(MaxAbsDiff(y.samples, x.samples), 1e-6 * peak);
  }
}

TEST(Granularity, SampleGrainIsUnchanged) {
  std::mt19937_64 rng(8);
  const Waveform x = RandomWaveform(rng, 200);
  const Predistortion p = invert_chain(reference_chain());
  EXPECT_EQ(apply_predistortion(x, emulate_granularity(p, kDt)).samples,
            apply_predistortion(x, p).samples);
}

TEST(Granularity, FourNanosecondGrain) {
  const DistortionChain c = reference_chain();
  const Predistortion p = emulate_granularity(invert_chain(c), 4e-9);
  const Waveform y = apply_chain(apply_predistortion(unit_step(6000), p), c);
  double late = 0.0;
  for (std::size_t k = 120; k < y.size(); ++k) late = std::max(late, std::abs(y.samples[k] - 1.0));
  EXPECT_LT(late, 0.02);
  EXPECT_GT(late, 1e-6);
}

TEST(Granularity, InvalidGrainRejected) {
  const Predistortion p = invert_chain(reference_chain());
  EXPECT_THROW(emulate_granularity(p, 0.0), std::invalid_argument);
  EXPECT_THROW(emulate_granularity(p, 1.3e-9), std::invalid_argument);
}

TEST(PartialCorrection, LeavesLongStagesUncorrected) {
  const DistortionChain c = reference_chain();
  const Predistortion p = invert_chain_up_to(c, 500e-9);
  EXPECT_EQ(p.sections.size(), 3u);
  const Waveform y = apply_chain(apply_predistortion(unit_step(4000), p), c);
  // What remains is the 846 ns stage alone.
  EXPECT_NEAR(y.samples[2000], 1.0 - 0.021 * std::exp(-1000e-9 / 846e-9), 1e-9);
}

}  // namespace
}  // namespace czcal
