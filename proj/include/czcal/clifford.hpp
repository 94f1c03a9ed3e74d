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

// Two-qubit Clifford group: tableau representation, primitive gates and the
// 11520-element decomposition table.

#ifndef CZCAL_CLIFFORD_HPP_
#define CZCAL_CLIFFORD_HPP_

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "czcal/common.hpp"

namespace czcal {

// i^phase X^x Z^z; bit 0 of x/z is qubit 1, bit 1 is qubit 2.
struct Pauli2 {
  std::uint8_t x = 0, z = 0, phase = 0;

  friend bool operator==(const Pauli2&, const Pauli2&) = default;
};

inline Pauli2 operator*(const Pauli2& a, const Pauli2& b) {
  const int swaps = std::popcount(static_cast<unsigned>(a.z & b.x));
  return {static_cast<std::uint8_t>(a.x ^ b.x), static_cast<std::uint8_t>(a.z ^ b.z),
          static_cast<std::uint8_t>((a.phase + b.phase + 2 * swaps) & 3)};
}

// Conjugation action P -> C P C^dag, stored as images of X1, Z1, X2, Z2.
class Clifford2 {
 public:
  static constexpr std::array<Pauli2, 4> kGenerators = {
      Pauli2{1, 0, 0}, Pauli2{0, 1, 0}, Pauli2{2, 0, 0}, Pauli2{0, 2, 0}};

  Clifford2() : images_(kGenerators) {}
  explicit Clifford2(const std::array<Pauli2, 4>& images) : images_(images) {}

  const std::array<Pauli2, 4>& images() const { return images_; }

  Pauli2 apply(const Pauli2& p) const {
    // X^x Z^z = X1^x1 X2^x2 Z1^z1 Z2^z2 (factors on different qubits commute).
    Pauli2 out{0, 0, p.phase};
    if (p.x & 1) out = out * images_[0];
    if (p.x & 2) out = out * images_[2];
    if (p.z & 1) out = out * images_[1];
    if (p.z & 2) out = out * images_[3];
    return out;
  }

  // This first, then `next`.
  Clifford2 then(const Clifford2& next) const {
    std::array<Pauli2, 4> img;
    for (int g = 0; g < 4; ++g) img[g] = next.apply(images_[g]);
    return Clifford2(img);
  }

  Clifford2 inverse() const {
    std::array<Pauli2, 4> img;
    for (int g = 0; g < 4; ++g) {
      const Pauli2& target = kGenerators[static_cast<std::size_t>(g)];
      bool found = false;
      for (std::uint8_t bits = 0; bits < 16 && !found; ++bits) {
        const Pauli2 q{static_cast<std::uint8_t>(bits & 3), static_cast<std::uint8_t>(bits >> 2), 0};
        const Pauli2 c = apply(q);
        if (c.x == target.x && c.z == target.z) {
          img[static_cast<std::size_t>(g)] = {q.x, q.z, static_cast<std::uint8_t>((4 - c.phase) & 3)};
          found = true;
        }
      }
      if (!found) throw NumericalError("Clifford2::inverse: tableau is not invertible");
    }
    return Clifford2(img);
  }

  // Symplectic check on the bit part plus Hermitian images.
  bool is_valid() const {
    auto commute = [](const Pauli2& a, const Pauli2& b) {
      return (std::popcount(static_cast<unsigned>((a.x & b.z) ^ (a.z & b.x))) & 1) == 0;
    };
    for (int a = 0; a < 4; ++a) {
      const Pauli2& p = images_[static_cast<std::size_t>(a)];
      if (p.x == 0 && p.z == 0) return false;
      // Hermitian iff phase + popcount(x & z) is even.
      if (((p.phase + std::popcount(static_cast<unsigned>(p.x & p.z))) & 1) != 0) return false;
      for (int b = a + 1; b < 4; ++b) {
        const bool should = !(a / 2 == b / 2);  // X_i, Z_i anticommute
        if (commute(p, images_[static_cast<std::size_t>(b)]) != should) return false;
      }
    }
    return true;
  }

  std::uint32_t key() const {
    std::uint32_t k = 0;
    for (const auto& p : images_) k = (k << 6) | (p.x << 4) | (p.z << 2) | p.phase;
    return k;
  }

  friend bool operator==(const Clifford2& a, const Clifford2& b) {
    return a.images_ == b.images_;
  }

 private:
  std::array<Pauli2, 4> images_;
};

// ---------------------------------------------------------------------------
// Primitive gates.

enum class GateKind : std::uint8_t {
  kX180, kY180, kX90, kY90, kXm90, kYm90, kXm180, kYm180, kCZ
};

struct Primitive {
  GateKind kind = GateKind::kCZ;
  int qubit = 0;  // 1 or 2 for single-qubit gates, 0 for CZ

  friend bool operator==(const Primitive&, const Primitive&) = default;
};

inline bool is_two_qubit(const Primitive& g) { return g.kind == GateKind::kCZ; }

inline std::string_view gate_kind_name(GateKind k) {
  switch (k) {
    case GateKind::kX180: return "X180";
    case GateKind::kY180: return "Y180";
    case GateKind::kX90: return "X90";
    case GateKind::kY90: return "Y90";
    case GateKind::kXm90: return "-X90";
    case GateKind::kYm90: return "-Y90";
    case GateKind::kXm180: return "-X180";
    case GateKind::kYm180: return "-Y180";
    case GateKind::kCZ: return "CZ";
  }
  return "?";
}

// "X90.1", "-Y180.2", "CZ".
inline std::string to_token(const Primitive& g) {
  if (is_two_qubit(g)) return "CZ";
  return std::string(gate_kind_name(g.kind)) + "." + std::to_string(g.qubit);
}

inline Primitive parse_token(std::string_view tok) {
  if (tok == "CZ") return {GateKind::kCZ, 0};
  const auto dot = tok.rfind('.');
  if (dot == std::string_view::npos || dot + 2 != tok.size())
    throw std::invalid_argument("parse_token: bad gate token '" + std::string(tok) + "'");
  const int q = tok[dot + 1] - '0';
  if (q != 1 && q != 2) throw std::invalid_argument("parse_token: bad qubit in '" + std::string(tok) + "'");
  const auto name = tok.substr(0, dot);
  for (int k = 0; k < 8; ++k) {
    const auto kind = static_cast<GateKind>(k);
    if (gate_kind_name(kind) == name) return {kind, q};
  }
  throw std::invalid_argument("parse_token: unknown gate '" + std::string(tok) + "'");
}

// exp(-i theta/2 sigma) for the single-qubit kinds.
inline Eigen::Matrix2cd single_qubit_unitary(GateKind k) {
  const Complex i(0.0, 1.0);
  Eigen::Matrix2cd x, y;
  x << 0, 1, 1, 0;
  y << 0, -i, i, 0;
  auto rot = [&](const Eigen::Matrix2cd& s, double theta) -> Eigen::Matrix2cd {
    return std::cos(0.5 * theta) * Eigen::Matrix2cd::Identity() - i * std::sin(0.5 * theta) * s;
  };
  switch (k) {
    case GateKind::kX180: return rot(x, kPi);
    case GateKind::kY180: return rot(y, kPi);
    case GateKind::kX90: return rot(x, 0.5 * kPi);
    case GateKind::kY90: return rot(y, 0.5 * kPi);
    case GateKind::kXm90: return rot(x, -0.5 * kPi);
    case GateKind::kYm90: return rot(y, -0.5 * kPi);
    case GateKind::kXm180: return rot(x, -kPi);
    case GateKind::kYm180: return rot(y, -kPi);
    case GateKind::kCZ: break;
  }
  throw std::invalid_argument("single_qubit_unitary: CZ is a two-qubit gate");
}

// Basis order |q1 q2> = 00, 01, 10, 11 (qubit 1 is the left factor).
inline Eigen::Matrix4cd primitive_unitary(const Primitive& g) {
  if (is_two_qubit(g)) {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Identity();
    m(3, 3) = -1.0;
    return m;
  }
  const Eigen::Matrix2cd u = single_qubit_unitary(g.kind);
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd& a = g.qubit == 1 ? u : id;
  const Eigen::Matrix2cd& b = g.qubit == 1 ? id : u;
  Eigen::Matrix4cd m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m.block<2, 2>(2 * r, 2 * c) = a(r, c) * b;
  return m;
}

inline Eigen::Matrix4cd pauli_matrix(const Pauli2& p) {
  Eigen::Matrix2cd x, z;
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd a = ((p.x & 1) ? x : id) * ((p.z & 1) ? z : id);
  const Eigen::Matrix2cd b = ((p.x & 2) ? x : id) * ((p.z & 2) ? z : id);
  Eigen::Matrix4cd m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m.block<2, 2>(2 * r, 2 * c) = a(r, c) * b;
  static constexpr std::array<Complex, 4> kPhase = {Complex(1, 0), Complex(0, 1),
                                                    Complex(-1, 0), Complex(0, -1)};
  return kPhase[p.phase & 3] * m;
}

// Tableau of a 4x4 Clifford unitary.
inline Clifford2 tableau_of(const Eigen::Matrix4cd& u) {
  std::array<Pauli2, 4> img;
  for (int g = 0; g < 4; ++g) {
    const Eigen::Matrix4cd m = u * pauli_matrix(Clifford2::kGenerators[static_cast<std::size_t>(g)]) *
                               u.adjoint();
    bool found = false;
    for (std::uint8_t bits = 0; bits < 16 && !found; ++bits) {
      const Pauli2 q{static_cast<std::uint8_t>(bits & 3), static_cast<std::uint8_t>(bits >> 2), 0};
      const Complex c = (pauli_matrix(q).adjoint() * m).trace() / 4.0;
      if (std::abs(c) > 0.5) {
        if (std::abs(std::abs(c) - 1.0) > 1e-9) break;
        const int r = static_cast<int>(std::lround(std::arg(c) / (0.5 * kPi)));
        img[static_cast<std::size_t>(g)] = {q.x, q.z, static_cast<std::uint8_t>(((r % 4) + 4) % 4)};
        found = true;
      }
    }
    if (!found) throw std::invalid_argument("tableau_of: matrix is not a Clifford unitary");
  }
  return Clifford2(img);
}

inline const Clifford2& primitive_tableau(const Primitive& g) {
  static const auto table = [] {
    std::array<Clifford2, 17> t;  // 8 kinds x 2 qubits + CZ
    for (int k = 0; k < 8; ++k)
      for (int q = 1; q <= 2; ++q)
        t[static_cast<std::size_t>(2 * k + q - 1)] =
            tableau_of(primitive_unitary({static_cast<GateKind>(k), q}));
    t[16] = tableau_of(primitive_unitary({GateKind::kCZ, 0}));
    return t;
  }();
  if (is_two_qubit(g)) return table[16];
  return table[static_cast<std::size_t>(2 * static_cast<int>(g.kind) + g.qubit - 1)];
}

inline Clifford2 compose(std::span<const Primitive> gates) {
  Clifford2 c;
  for (const auto& g : gates) c = c.then(primitive_tableau(g));
  return c;
}

inline Eigen::Matrix4cd compose_unitary(std::span<const Primitive> gates) {
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
  for (const auto& g : gates) u = primitive_unitary(g) * u;
  return u;
}

// ---------------------------------------------------------------------------
// Decomposition table.

namespace detail {

using SqSeq = std::vector<GateKind>;

// The 24 single-qubit Cliffords, each as a time-ordered primitive list.
inline const std::array<SqSeq, 24>& single_qubit_cliffords() {
  using enum GateKind;
  static const std::array<SqSeq, 24> t = {{
      {}, {kX180}, {kY180}, {kY180, kX180},
      {kX90, kY90}, {kX90, kYm90}, {kXm90, kY90}, {kXm90, kYm90},
      {kY90, kX90}, {kY90, kXm90}, {kYm90, kX90}, {kYm90, kXm90},
      {kX90}, {kXm90}, {kY90}, {kYm90},
      {kXm90, kY90, kX90}, {kXm90, kYm90, kX90},
      {kX180, kY90}, {kX180, kYm90}, {kY180, kX90}, {kY180, kXm90},
      {kX90, kY90, kX90}, {kXm90, kY90, kXm90},
  }};
  return t;
}

// Three-element subgroup cycling the Pauli axes.
inline const std::array<SqSeq, 3>& s1_elements() {
  using enum GateKind;
  static const std::array<SqSeq, 3> t = {{{}, {kY90, kX90}, {kXm90, kYm90}}};
  return t;
}

inline void append_sq(std::vector<Primitive>& out, const SqSeq& s, int qubit) {
  for (GateKind k : s) out.push_back({k, qubit});
}

}  // namespace detail

enum class CliffordClass : std::uint8_t { kSingleQubit, kCnotLike, kIswapLike, kSwapLike };

struct CliffordEntry {
  Clifford2 tableau;
  std::vector<Primitive> gates;  // time ordered
  CliffordClass cls = CliffordClass::kSingleQubit;
  int cz_count = 0;
  int sq_count = 0;
};

class CliffordTable {
 public:
  static constexpr std::size_t kSize = 11520;

  static const CliffordTable& instance() {
    static const CliffordTable t;
    return t;
  }

  std::size_t size() const { return entries_.size(); }
  const CliffordEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<CliffordEntry>& entries() const { return entries_; }

  std::size_t index_of(const Clifford2& c) const {
    const auto it = index_.find(c.key());
    if (it == index_.end()) throw std::invalid_argument("CliffordTable: unknown tableau");
    return it->second;
  }

  std::size_t identity_index() const { return index_of(Clifford2{}); }

  double mean_cz_count() const { return mean_cz_; }
  double mean_sq_count() const { return mean_sq_; }

 private:
  CliffordTable() {
    using enum GateKind;
    const auto& c1 = detail::single_qubit_cliffords();
    const auto& s1 = detail::s1_elements();
    // Entangling cores appended after a C1 x C1 layer.
    std::vector<std::pair<CliffordClass, std::vector<Primitive>>> cores;
    cores.push_back({CliffordClass::kSingleQubit, {}});
    for (const auto& a : s1)
      for (const auto& b : s1) {
        std::vector<Primitive> k = {{kCZ, 0}};
        detail::append_sq(k, a, 1);
        detail::append_sq(k, b, 2);
        cores.push_back({CliffordClass::kCnotLike, std::move(k)});
      }
    for (const auto& a : s1)
      for (const auto& b : s1) {
        std::vector<Primitive> k = {{kCZ, 0}, {kY90, 1}, {kXm90, 2}, {kCZ, 0}};
        detail::append_sq(k, a, 1);
        k.push_back({kY90, 1});
        detail::append_sq(k, b, 2);
        k.push_back({kXm90, 2});
        cores.push_back({CliffordClass::kIswapLike, std::move(k)});
      }
    cores.push_back({CliffordClass::kSwapLike,
                     {{kCZ, 0}, {kYm90, 1}, {kY90, 2}, {kCZ, 0}, {kY90, 1}, {kYm90, 2},
                      {kCZ, 0}, {kY90, 2}}});

    entries_.reserve(kSize);
    for (const auto& [cls, core] : cores)
      for (const auto& a : c1)
        for (const auto& b : c1) {
          CliffordEntry e;
          e.cls = cls;
          detail::append_sq(e.gates, a, 1);
          detail::append_sq(e.gates, b, 2);
          e.gates.insert(e.gates.end(), core.begin(), core.end());
          e.tableau = compose(e.gates);
          for (const auto& g : e.gates) (is_two_qubit(g) ? e.cz_count : e.sq_count)++;
          if (!index_.emplace(e.tableau.key(), entries_.size()).second)
            throw NumericalError("CliffordTable: decomposition table has a duplicate element");
          entries_.push_back(std::move(e));
        }
    if (entries_.size() != kSize) throw NumericalError("CliffordTable: wrong group size");
    for (const auto& e : entries_) {
      mean_cz_ += e.cz_count;
      mean_sq_ += e.sq_count;
    }
    mean_cz_ /= static_cast<double>(kSize);
    mean_sq_ /= static_cast<double>(kSize);
  }

  std::vector<CliffordEntry> entries_;
  std::unordered_map<std::uint32_t, std::size_t> index_;
  double mean_cz_ = 0.0;
  double mean_sq_ = 0.0;
};

inline std::size_t sample_clifford(Rng& rng) {
  std::uniform_int_distribution<std::size_t> u(0, CliffordTable::kSize - 1);
  return u(rng);
}

// Recovery element: composing the sequence and then the result gives identity.
inline std::size_t recovery_clifford(std::span<const std::size_t> ids) {
  const auto& t = CliffordTable::instance();
  Clifford2 c;
  for (auto i : ids) c = c.then(t[i].tableau);
  return t.index_of(c.inverse());
}

}  // namespace czcal

#endif  // CZCAL_CLIFFORD_HPP_
