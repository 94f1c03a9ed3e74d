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

#include "czcal/device_model.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

namespace czcal {
namespace {

DeviceParams Uncoupled() {
  DeviceParams p;
  p.g1c = p.g2c = p.g12 = 0.0;
  return p;
}

const AdiabaticTracker& Tracker() {
  static const AdiabaticTracker t{DeviceParams{}};
  return t;
}

TEST(CouplerFrequency, SweetSpotAndHalfFlux) {
  DeviceParams p;
  EXPECT_NEAR(coupler_frequency(p, 0.0), ghz(6.3), 1e-6);
  EXPECT_NEAR(coupler_frequency(p, 0.5), ghz(3.7), 1e-3);
  EXPECT_NEAR(p.squid_asymmetry, std::pow(3.824 / 6.424, 2), 1e-12);
  EXPECT_NEAR(p.squid_asymmetry, 0.354, 1e-3);
}

TEST(CouplerFrequency, QuarterFluxSymmetricJunctions) {
  DeviceParams p;
  p.squid_asymmetry = 0.0;
  const double a = std::abs(p.alphaC);
  EXPECT_NEAR(coupler_frequency(p, 0.25),
              (p.omegaC_max + a) * std::pow(0.5, 0.25) - a, 1e-3);
}

TEST(CouplerFrequency, MonotonePeriodicEven) {
  DeviceParams p;
  double prev = coupler_frequency(p, 0.0);
  for (int i = 1; i <= 500; ++i) {
    const double f = 0.5 * i / 500.0;
    const double w = coupler_frequency(p, f);
    EXPECT_LT(w, prev);
    prev = w;
    EXPECT_NEAR(coupler_frequency(p, f + 1.0), w, 1e-3);
    EXPECT_NEAR(coupler_frequency(p, -f), w, 1e-9);
  }
}

TEST(BuildHamiltonian, UncoupledIsDiagonalWithLadderEnergies) {
  const DeviceParams p = Uncoupled();
  for (double flux : {0.0, 0.2, 0.41, 0.5}) {
    const MatrixXd h = build_hamiltonian(p, flux);
    const double wc = coupler_frequency(p, flux);
    for (int i = 0; i < h.rows(); ++i) {
      const BareLabel l = bare_label(p, i);
      const double expected = p.omega1 * l.n1 + 0.5 * p.alpha1 * l.n1 * (l.n1 - 1) +
                              p.omega2 * l.n2 + 0.5 * p.alpha2 * l.n2 * (l.n2 - 1) +
                              wc * l.nc + 0.5 * p.alphaC * l.nc * (l.nc - 1);
      EXPECT_NEAR(h(i, i), expected, 1e-6 * std::abs(expected) + 1e-6);
      for (int j = 0; j < h.cols(); ++j) {
        if (j != i) {
          EXPECT_EQ(h(i, j), 0.0);
        }
      }
    }
  }
}

TEST(BuildHamiltonian, MatchesElementwiseOracle) {
  const DeviceParams p;
  for (double flux : {0.0, 0.33, 0.41, 0.47}) {
    const MatrixXd h = build_hamiltonian(p, flux);
    const MatrixXd ref = oracle::hamiltonian(p, coupler_frequency(p, flux));
    EXPECT_LT((h - ref).cwiseAbs().maxCoeff(), 1e-12 * ref.cwiseAbs().maxCoeff());
  }
}

TEST(BuildHamiltonian, HermitianOnRandomDraws) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    DeviceParams p;
    p.g1c = mhz(100.0 * u(rng));
    p.g2c = mhz(100.0 * u(rng));
    p.g12 = mhz(10.0 * u(rng));
    p.alpha1 = mhz(-200.0 - 100.0 * std::abs(u(rng)));
    const MatrixXd h = build_hamiltonian(p, 0.5 * std::abs(u(rng)));
    EXPECT_EQ((h - h.transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(BuildHamiltonian, DimensionCapRejected) {
  DeviceParams p;
  p.n_qubit_levels = 8;
  p.n_coupler_levels = 10;
  EXPECT_THROW(build_hamiltonian(p, 0.0), std::invalid_argument);
  p.n_qubit_levels = 1;
  EXPECT_THROW(build_hamiltonian(p, 0.0), std::invalid_argument);
}

TEST(BuildHamiltonian, EigenvaluesMatchJacobiOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    DeviceParams p;
    p.n_qubit_levels = 2 + static_cast<int>(u(rng) * 2.0);
    p.n_coupler_levels = 2 + static_cast<int>(u(rng) * 3.0);
    p.g1c = mhz(40.0 + 60.0 * u(rng));
    p.g2c = mhz(-40.0 - 60.0 * u(rng));
    const double flux = 0.5 * u(rng);
    const LabeledSpectrum s = labeled_spectrum(p, flux);
    const auto ref = oracle::jacobi_eigenvalues(oracle::hamiltonian(p, coupler_frequency(p, flux)));
    ASSERT_EQ(static_cast<std::size_t>(s.eigenvalues.size()), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const double scale = std::max(std::abs(ref[i]), ghz(1.0));
      EXPECT_LT(std::abs(s.eigenvalues(static_cast<Eigen::Index>(i)) - ref[i]) / scale, 1e-10);
    }
  }
}

TEST(LabeledSpectrum, UncoupledLabelsAreBare) {
  const DeviceParams p = Uncoupled();
  const LabeledSpectrum s = labeled_spectrum(p, 0.3);
  for (int b = 0; b < p.dimension(); ++b) {
    EXPECT_NEAR(s.overlap_matrix(b, s.eigen_of[b]), 1.0, 1e-15);
    EXPECT_EQ(s.label_of[static_cast<std::size_t>(s.eigen_of[b])], b);
  }
}

TEST(LabeledSpectrum, LabelsAreABijection) {
  const LabeledSpectrum s = labeled_spectrum(DeviceParams{}, 0.3);
  std::vector<int> seen(s.label_of.size(), 0);
  for (int l : s.label_of) ++seen[static_cast<std::size_t>(l)];
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(LabeledSpectrum, IdleComputationalStatesAreNearlyBare) {
  const DeviceParams p;
  const LabeledSpectrum far = labeled_spectrum(p, 0.285);
  for (int b : computational_indices(p)) EXPECT_GT(far.overlap_matrix(b, far.eigen_of[b]), 0.99);
  // The zero-ZZ idle point sits closer to the coupler.
  const LabeledSpectrum s = labeled_spectrum(p, default_idle_flux(Tracker()));
  for (int b : computational_indices(p)) EXPECT_GT(s.overlap_matrix(b, s.eigen_of[b]), 0.985);
}

TEST(LabeledSpectrum, AmbiguousAssignmentIsReported) {
  // Degenerate qubits coupled only to each other mix 50/50.
  DeviceParams p = Uncoupled();
  p.omega2 = p.omega1;
  p.alpha2 = p.alpha1;
  p.g12 = mhz(-5.5);
  EXPECT_THROW(labeled_spectrum(p, 0.3), NumericalError);
}

TEST(LabeledSpectrum, ChainedSweepAcrossCrossingIsSmooth) {
  const DeviceParams p;
  LabeledSpectrum prev = Tracker().spectrum(0.38);
  for (int k = 1; k <= 70; ++k) {
    const double flux = 0.38 + 1e-3 * k;
    LabeledSpectrum cur = labeled_spectrum(p, flux, &prev);
    for (int b : computational_indices(p))
      EXPECT_GT(std::abs(prev.vector(b).dot(cur.vector(b))), 0.9) << "flux " << flux;
    prev = std::move(cur);
  }
}

TEST(LabeledSpectrum, ForwardBackwardSweepIsIdentityPermutation) {
  const DeviceParams p;
  LabeledSpectrum s = labeled_spectrum(p, 0.0);
  const std::vector<int> start = s.label_of;
  for (int k = 1; k <= 1000; ++k) {
    LabeledSpectrum next = labeled_spectrum(p, 5e-4 * k, &s);
    s = std::move(next);
  }
  for (int k = 999; k >= 0; --k) {
    LabeledSpectrum next = labeled_spectrum(p, 5e-4 * k, &s);
    s = std::move(next);
  }
  EXPECT_EQ(s.label_of, start);
}

TEST(ConditionalShift, VanishesWithoutCoupling) {
  const DeviceParams p = Uncoupled();
  const AdiabaticTracker t(p);
  for (int i = 0; i <= 50; ++i) EXPECT_NEAR(t.conditional_shift(0.01 * i), 0.0, 1e-3);
}

TEST(ConditionalShift, SpansOrdersOfMagnitude) {
  const auto& t = Tracker();
  double lo = 1e300, hi = 0.0;
  for (int i = 0; i <= 500; ++i) {
    const double x = std::abs(t.conditional_shift(0.5 * i / 500.0)) / kTwoPi;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double zmin = std::abs(t.conditional_shift(default_idle_flux(t))) / kTwoPi;
  EXPECT_LT(zmin, 100e3);
  EXPECT_GT(hi, 50e6);
  EXPECT_GE(std::log10(hi / std::min(lo, zmin)), 2.5);
}

TEST(ZzZeroCrossing, LinearTestFunction) {
  const double z = 0.3217;
  const auto r = minimize_abs([&](double x) { return 3.0 * (x - z); }, 0.2, 0.4);
  ASSERT_TRUE(r.has_value());
  EXPECT_NEAR(*r, z, 1e-5);
}

TEST(ZzZeroCrossing, NotFoundAtBracketEdge) {
  EXPECT_FALSE(minimize_abs([](double x) { return 1.0 + x; }, 0.0, 1.0).has_value());
}

TEST(ZzZeroCrossing, TableParamsBelow100kHz) {
  const auto& t = Tracker();
  const auto f = zz_zero_crossing(t, 0.0, 0.4);
  ASSERT_TRUE(f.has_value());
  EXPECT_LT(std::abs(t.conditional_shift(*f)) / kTwoPi, 100e3);
  // Lies between the sweet spot and the first crossing.
  EXPECT_GT(coupler_frequency(DeviceParams{}, *f), DeviceParams{}.omega1);
}

TEST(ZzZeroCrossing, MatchesDenseScan) {
  const auto& t = Tracker();
  const auto f = zz_zero_crossing(t, 0.0, 0.4);
  ASSERT_TRUE(f.has_value());
  double best = 0.0, best_v = 1e300;
  for (int i = 0; i <= 4000; ++i) {
    const double x = 0.4 * i / 4000.0;
    const double v = std::abs(t.conditional_shift(x));
    if (v < best_v) {
      best_v = v;
      best = x;
    }
  }
  EXPECT_NEAR(*f, best, 2e-4);
  EXPECT_LE(std::abs(t.conditional_shift(*f)), best_v * (1.0 + 1e-6) + 1.0);
}

TEST(ZzZeroCrossing, WithoutDirectCouplingMinimumIsAtSweetSpot) {
  // xi keeps one sign and |xi| grows monotonically away from zero flux.
  DeviceParams p;
  p.g12 = 0.0;
  const AdiabaticTracker t(p);
  EXPECT_FALSE(zz_zero_crossing(t, 0.0, 0.4).has_value());
}

}  // namespace
}  // namespace czcal
