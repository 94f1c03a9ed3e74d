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

#include "czcal/benchmarking.hpp"

#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "oracles.hpp"

namespace czcal {
namespace {

Eigen::Matrix4cd DenseOf(std::span<const Primitive> gates) {
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
  for (const auto& g : gates) u = oracle::gate_unitary(to_token(g)) * u;
  return u;
}

// X^x Z^z on two qubits from explicit Kronecker products.
Eigen::Matrix4cd PauliDense(int x, int z, int phase) {
  Eigen::Matrix2cd px, pz, id = Eigen::Matrix2cd::Identity();
  px << 0, 1, 1, 0;
  pz << 1, 0, 0, -1;
  const Eigen::Matrix2cd a = ((x & 1) ? px : id) * ((z & 1) ? pz : id);
  const Eigen::Matrix2cd b = ((x & 2) ? px : id) * ((z & 2) ? pz : id);
  Eigen::Matrix4cd m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m.block<2, 2>(2 * r, 2 * c) = a(r, c) * b;
  return std::pow(Complex(0, 1), phase) * m;
}

TEST(Pauli, ProductMatchesMatrices) {
  for (int x1 = 0; x1 < 4; ++x1)
    for (int z1 = 0; z1 < 4; ++z1)
      for (int x2 = 0; x2 < 4; ++x2)
        for (int z2 = 0; z2 < 4; ++z2) {
          const Pauli2 a{static_cast<std::uint8_t>(x1), static_cast<std::uint8_t>(z1), 1};
          const Pauli2 b{static_cast<std::uint8_t>(x2), static_cast<std::uint8_t>(z2), 2};
          const Pauli2 c = a * b;
          const Eigen::Matrix4cd ref = PauliDense(x1, z1, 1) * PauliDense(x2, z2, 2);
          EXPECT_LT((PauliDense(c.x, c.z, c.phase) - ref).cwiseAbs().maxCoeff(), 1e-14);
        }
}

TEST(CliffordTable, SizeClassesAndCounts) {
  const auto& t = CliffordTable::instance();
  ASSERT_EQ(t.size(), 11520u);
  std::map<CliffordClass, int> sizes;
  for (const auto& e : t.entries()) {
    ++sizes[e.cls];
    EXPECT_TRUE(e.tableau.is_valid());
    EXPECT_EQ(e.cz_count, static_cast<int>(e.cls));
  }
  EXPECT_EQ(sizes[CliffordClass::kSingleQubit], 576);
  EXPECT_EQ(sizes[CliffordClass::kCnotLike], 5184);
  EXPECT_EQ(sizes[CliffordClass::kIswapLike], 5184);
  EXPECT_EQ(sizes[CliffordClass::kSwapLike], 576);
  EXPECT_DOUBLE_EQ(t.mean_cz_count(), 1.5);
  EXPECT_GE(t.mean_sq_count(), 7.0);
  EXPECT_LE(t.mean_sq_count(), 10.0);
  EXPECT_TRUE(t[t.identity_index()].gates.empty());
}

TEST(CliffordTable, EveryDecompositionMatchesItsTableau) {
  const auto& t = CliffordTable::instance();
  for (std::size_t i = 0; i < t.size(); i += 7) {
    const auto& e = t[i];
    const Eigen::Matrix4cd u = DenseOf(e.gates);
    for (int g = 0; g < 4; ++g) {
      const Pauli2 gen = Clifford2::kGenerators[static_cast<std::size_t>(g)];
      const Pauli2 img = e.tableau.images()[static_cast<std::size_t>(g)];
      const Eigen::Matrix4cd lhs = u * PauliDense(gen.x, gen.z, 0) * u.adjoint();
      EXPECT_LT((lhs - PauliDense(img.x, img.z, img.phase)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(CliffordTable, CompositionMatchesDenseOnRandomPairs) {
  const auto& t = CliffordTable::instance();
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto& a = t[sample_clifford(rng)];
    const auto& b = t[sample_clifford(rng)];
    const Clifford2 c = a.tableau.then(b.tableau);
    const auto& e = t[t.index_of(c)];
    EXPECT_LT(oracle::distance_up_to_phase(DenseOf(e.gates), DenseOf(b.gates) * DenseOf(a.gates)),
              1e-10);
  }
}

TEST(CliffordTable, InversesCompose) {
  for (const auto& e : CliffordTable::instance().entries())
    EXPECT_EQ(e.tableau.then(e.tableau.inverse()), Clifford2{});
}

TEST(Sampling, CzMeanOverManySamples) {
  const auto& t = CliffordTable::instance();
  Rng rng(5);
  std::array<int, 4> hist{};
  double sum = 0.0;
  constexpr int kN = 100000;
  for (int i = 0; i < kN; ++i) {
    const int c = t[sample_clifford(rng)].cz_count;
    ++hist[static_cast<std::size_t>(c)];
    sum += c;
  }
  EXPECT_NEAR(sum / kN, 1.5, 0.02);
  EXPECT_NEAR(hist[0] / static_cast<double>(kN), 576.0 / 11520.0, 0.005);
}

TEST(Recovery, EmptySingleAndLong) {
  const auto& t = CliffordTable::instance();
  EXPECT_EQ(recovery_clifford({}), t.identity_index());
  Rng rng(9);
  const std::size_t one = sample_clifford(rng);
  const std::vector<std::size_t> single = {one};
  EXPECT_EQ(t[recovery_clifford(single)].tableau, t[one].tableau.inverse());

  std::vector<std::size_t> ids;
  for (int i = 0; i < 20; ++i) ids.push_back(sample_clifford(rng));
  const std::size_t rec = recovery_clifford(ids);
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
  for (auto i : ids) u = DenseOf(t[i].gates) * u;
  u = DenseOf(t[rec].gates) * u;
  EXPECT_LT(oracle::distance_up_to_phase(u, Eigen::Matrix4cd::Identity()), 1e-10);
}

TEST(Sequences, SingleCliffordThenInverse) {
  Rng rng(11);
  const RbSequence s = build_rb_sequence(1, 0, rng);
  ASSERT_EQ(s.clifford_ids.size(), 1u);
  const auto& t = CliffordTable::instance();
  EXPECT_EQ(t[s.recovery_id].tableau, t[s.clifford_ids[0]].tableau.inverse());
  EXPECT_THROW(build_rb_sequence(0, 0, rng), std::invalid_argument);
}

TEST(Sequences, ReproducibleAndCounted) {
  Rng a(42), b(42);
  const auto sa = build_rb_sequences(5, 80, 0, a);
  const auto sb = build_rb_sequences(5, 80, 0, b);
  ASSERT_EQ(sa.size(), 80u);
  for (std::size_t i = 0; i < sa.size(); ++i) EXPECT_EQ(sa[i].gates, sb[i].gates);

  Rng c(7), d(7);
  const RbSequence plain = build_rb_sequence(6, 0, c);
  const RbSequence inter = build_rb_sequence(6, 2, d);
  EXPECT_EQ(plain.clifford_ids, inter.clifford_ids);
  const auto& t = CliffordTable::instance();
  auto count_cz = [](const RbSequence& s) {
    return std::count_if(s.gates.begin(), s.gates.end(), is_two_qubit);
  };
  EXPECT_EQ(count_cz(inter) - t[inter.recovery_id].cz_count,
            count_cz(plain) - t[plain.recovery_id].cz_count + 12);

  Rng e(8);
  const auto batch = build_irb_batch(3, 80, 1, e);
  ASSERT_EQ(batch.size(), 80u);
  EXPECT_FALSE(batch[39].interleaved());
  EXPECT_TRUE(batch[40].interleaved());
}

TEST(Sequences, IdealSimulationReturnsGround) {
  Rng rng(13);
  const CzModel ideal;
  for (int n : {1, 2, 5, 20}) {
    for (int inter : {0, 1, 2}) {
      for (const auto& s : build_rb_sequences(n, 20, inter, rng)) {
        EXPECT_NEAR(ground_probability(std::span<const Primitive>(s.gates), ideal), 1.0, 1e-9);
        const Eigen::Matrix4cd u = DenseOf(s.gates);
        EXPECT_NEAR(std::norm(u(0, 0)), 1.0, 1e-9);
      }
    }
  }
}

TEST(Sequences, TextRoundTrip) {
  Rng rng(17);
  const auto seqs = build_rb_sequences(4, 5, 1, rng);
  std::stringstream ss;
  write_sequences(ss, seqs);
  const auto back = read_sequences(ss);
  ASSERT_EQ(back.size(), seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) EXPECT_EQ(back[i], seqs[i].gates);
  EXPECT_THROW(parse_token("Z90.1"), std::invalid_argument);
  EXPECT_THROW(parse_token("X90.3"), std::invalid_argument);
  EXPECT_EQ(parse_token("-Y180.2"), (Primitive{GateKind::kYm180, 2}));
}

TEST(GateCounts, ScaleWithLength) {
  Rng rng(19);
  const auto seqs = build_rb_sequences(200, 80, 0, rng);
  const GateCounts c = report_gate_counts(seqs);
  const auto& t = CliffordTable::instance();
  EXPECT_NEAR(c.mean_cz / 200.0, 1.5, 0.05 * 1.5);
  EXPECT_NEAR(c.mean_sq / 200.0, t.mean_sq_count(), 0.05 * t.mean_sq_count());
}

TEST(Simulation, DensityAndPurePathsAgree) {
  Rng rng(23);
  const auto s = build_rb_sequence(10, 1, rng);
  // A slightly wrong CZ so the result is not trivially 1.
  CzModel off;
  off.gate(3, 3) = std::polar(1.0, kPi + 0.3);
  const double pure = ground_probability(std::span<const Primitive>(s.gates), off);
  CzModel dens = off;
  dens.depolarizing = 1e-300;  // forces the density-matrix path
  EXPECT_NEAR(ground_probability(std::span<const Primitive>(s.gates), dens), pure, 1e-12);
}

TEST(Simulation, FullyDepolarizingCzGivesHalf) {
  Rng rng(29);
  const CzModel dep = CzModel::with_error(0.75);
  double mean = 0.0;
  const auto seqs = build_rb_sequences(20, 40, 0, rng);
  for (const auto& s : seqs) mean += ground_probability(std::span<const Primitive>(s.gates), dep);
  EXPECT_NEAR(mean / 40.0, 0.5, 1e-9);
}

TEST(Simulation, LeakedPopulationReadsExcited) {
  CzModel leaky;
  leaky.gate = MatrixXcd::Identity(5, 5);
  leaky.gate(3, 3) = -1.0;
  // Swap |00> with the leaked state.
  leaky.gate(0, 0) = 0.0;
  leaky.gate(4, 4) = 0.0;
  leaky.gate(0, 4) = 1.0;
  leaky.gate(4, 0) = 1.0;
  const std::vector<Primitive> g = {{GateKind::kCZ, 0}};
  EXPECT_NEAR(ground_probability(std::span<const Primitive>(g), leaky), 0.0, 1e-15);
}

TEST(Simulation, ShotNoiseMagnitude) {
  Rng rng(31);
  const double p = 0.8;
  constexpr int kRepeats = 1000, kM = 80, kShots = 128;
  std::vector<double> es;
  for (int r = 0; r < kRepeats; ++r) {
    double mean = 0.0;
    for (int m = 0; m < kM; ++m) mean += sample_shots(p, kShots, rng);
    es.push_back(1.0 - mean / kM);
  }
  double mu = 0.0, var = 0.0;
  for (double e : es) mu += e;
  mu /= kRepeats;
  for (double e : es) var += (e - mu) * (e - mu);
  var /= kRepeats - 1;
  const double expected = std::sqrt(p * (1 - p) / (kShots * kM));
  EXPECT_NEAR(std::sqrt(var), expected, 0.1 * expected);
}

TEST(FitDecay, ExactData) {
  std::vector<double> ns, ys;
  for (int n : {1, 2, 4, 8, 16, 32, 64, 128}) {
    ns.push_back(n);
    ys.push_back(0.45 * std::pow(0.97, n) + 0.52);
  }
  const DecayFit f = fit_decay(ns, ys);
  EXPECT_NEAR(f.a, 0.45, 1e-6);
  EXPECT_NEAR(f.p, 0.97, 1e-6);
  EXPECT_NEAR(f.b, 0.52, 1e-6);
}

TEST(FitDecay, ShotNoiseMonteCarlo) {
  Rng rng(37);
  std::vector<double> ns, ys;
  for (int n : {1, 4, 8, 16, 32, 64}) {
    for (int m = 0; m < 80; ++m) {
      ns.push_back(n);
      ys.push_back(sample_shots(0.5 * std::pow(0.97, n) + 0.5, 128, rng));
    }
  }
  const DecayFit f = fit_decay(ns, ys, 0.5);
  EXPECT_NEAR(f.p, 0.97, 0.005);
  EXPECT_GT(f.p_sigma(), 0.0);
  EXPECT_LT(f.p_sigma(), 0.005);
}

TEST(FitDecay, DegenerateInputs) {
  const std::vector<double> ns = {1, 2, 3, 4}, flat(4, 0.7);
  EXPECT_THROW(fit_decay(ns, flat), NumericalError);
  const std::vector<double> two = {1, 2, 1, 2}, ys = {0.9, 0.8, 0.9, 0.8};
  EXPECT_THROW(fit_decay(two, ys), std::invalid_argument);
}

TEST(Irb, Estimator) {
  DecayFit ref, inter;
  ref.p = 0.95;
  inter.p = 0.95;
  EXPECT_DOUBLE_EQ(irb_gate_error(ref, inter), 0.0);
  inter.p = 0.9 * ref.p;
  EXPECT_NEAR(irb_gate_error(ref, inter), 0.075, 1e-15);
  EXPECT_NEAR(irb_gate_error(ref, inter, 2), 0.0375, 1e-15);
  ref.p = 0.0;
  EXPECT_THROW(irb_gate_error(ref, inter), std::invalid_argument);
}

TEST(Irb, RecoversInjectedDepolarizingError) {
  Rng rng(41);
  IrbConfig cfg;
  cfg.lengths = {1, 3, 6, 10, 15, 20};
  const IrbResult r = run_irb(CzModel::with_error(0.02), SqNoise{}, cfg, rng);
  EXPECT_NEAR(r.error, 0.02, std::max(0.2 * 0.02, 2.0 * r.error_sigma));
}

TEST(Sensitivity, CliffordFidelityExamples) {
  EXPECT_DOUBLE_EQ(clifford_fidelity(1.0, 1.0), 1.0);
  EXPECT_NEAR(clifford_fidelity(1.0, 0.99), std::pow(0.99, 1.5), 1e-15);
  EXPECT_NEAR(clifford_fidelity(1.0, 0.99), 0.98504, 1e-5);
  EXPECT_NEAR(clifford_fidelity(0.999, 1.0), 0.99153, 1e-5);
}

TEST(Sensitivity, ArgmaxMatchesClosedForm) {
  for (double fc = 0.9; fc <= 0.99991; fc += 0.00371) {
    const double f_cz = std::pow(fc, 1.0 / 1.5);
    const int n = optimal_n(1.0, f_cz);
    EXPECT_NEAR(n, std::round(-1.0 / std::log(fc)), 1.0) << fc;
  }
  EXPECT_EQ(optimal_n(1.0, std::exp(-0.1 / 1.5)), 10);
  EXPECT_NEAR(optimal_n(1.0, 0.999), 666, 1);
}

TEST(Sensitivity, SingleQubitErrorsShortenSchedule) {
  for (double f_cz : {0.9, 0.99, 0.995, 0.999})
    EXPECT_LE(optimal_n(0.999, f_cz), optimal_n(1.0, f_cz));
}

TEST(Sensitivity, PerfectCzReturnsUnnormalizedDerivative) {
  EXPECT_NEAR(sensitivity(10, 1.0, 1.0, 0.5), 0.5 * 10 * 1.5, 1e-12);
}

}  // namespace
}  // namespace czcal
