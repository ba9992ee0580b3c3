// Copyright 2026 The qmetro Authors
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

#pragma once

#include "qmetro/tpsr.hpp"

#include <bit>
#include <cstdint>
#include <numbers>
#include <optional>

namespace qmetro {

// ---------------------------------------------------------------- qubit

// State (I + z sigma_z)/2, generator gamma (sin d sigma_x + cos d sigma_z),
// measurement along b = (sin t cos p, sin t sin p, cos t).
struct BlochQubit {
  double z = 1.0;
  double delta = std::numbers::pi / 2;
  double gamma = 1.0;
  double theta = std::numbers::pi / 2;
  double phi = std::numbers::pi / 2;

  CMatrix state() const { return (pauli::id() + z * pauli::z()) * 0.5; }
  CMatrix generator() const { return gamma * (std::sin(delta) * pauli::x() + std::cos(delta) * pauli::z()); }
  StateFamily family() const { return StateFamily::unitary_family(state(), generator()); }
  MeasBasis basis() const {
    const CMatrix b = std::sin(theta) * std::cos(phi) * pauli::x() + std::sin(theta) * std::sin(phi) * pauli::y() +
                      std::cos(theta) * pauli::z();
    return MeasBasis{eigh(b).vectors};
  }
};

inline double qubit_fi_closed(const BlochQubit& q) {
  const double zb = q.z * std::cos(q.theta);
  const double den = 1.0 - zb * zb;
  if (den <= 1e-14) throw DegenerateDenominator("qubit_fi_closed: (z.b)^2 = 1");
  const double num = q.gamma * q.z * std::sin(q.delta) * std::sin(q.theta) * std::sin(q.phi);
  return 4.0 * num * num / den;
}

// First-order expansion of the pure-state Fisher information at a small
// offset dl from the working point.
inline double qubit_robustness(const BlochQubit& q, double dl) {
  if (std::abs(q.z - 1.0) > 1e-12) throw InvalidArgument("qubit_robustness: requires a pure state (z = 1)");
  const double sp = std::sin(q.phi), cp = std::cos(q.phi);
  const double cot = std::cos(q.theta) / std::sin(q.theta);
  return 4.0 * q.gamma * q.gamma * sp * sp - q.gamma * q.gamma * q.gamma * 16.0 * cp * cp * sp * cot * dl;
}

// ---------------------------------------------------------------- max QFI

struct MaxQfi {
  CMatrix G;
  double qfi_max;
};

inline MaxQfi max_qfi_generator(const std::vector<double>& p, double gamma) {
  const size_t n = p.size();
  if (n < 2) throw InvalidArgument("max_qfi_generator: need N >= 2");
  if (!(gamma > 0)) throw InvalidArgument("max_qfi_generator: gamma must be positive");
  for (size_t i = 0; i < n; ++i) {
    if (!(p[i] > 0)) throw InvalidArgument("max_qfi_generator: probabilities must be positive");
    if (i > 0 && p[i] > p[i - 1]) throw NotDescending("max_qfi_generator: p must be descending");
  }
  MaxQfi out;
  out.G = CMatrix::Zero(n, n);
  out.G(0, n - 1) = out.G(n - 1, 0) = gamma;
  const double d = p[0] - p[n - 1];
  out.qfi_max = 4.0 * gamma * gamma * d * d / (p[0] + p[n - 1]);
  return out;
}

// ---------------------------------------------------------------- separable class

struct SeparableSector {
  double p;      // weight
  double h;      // Bloch length of tau_k
  double phi;    // azimuth
  double delta;  // polar angle, pi/2 is in the xy plane
};
using SeparableClass = std::vector<SeparableSector>;

inline void validate(const SeparableClass& s) {
  double tot = 0;
  for (const auto& x : s) {
    if (x.p < 0 || x.h < 0 || x.h > 1) throw InvalidArgument("separable class: need p >= 0 and 0 <= h <= 1");
    tot += x.p;
  }
  if (std::abs(tot - 1.0) > 1e-12) throw InvalidArgument("separable class: weights must sum to 1");
}

inline double separable_qfi(const SeparableClass& s) {
  validate(s);
  double q = 0;
  for (const auto& x : s) q += 4.0 * x.p * x.h * x.h * std::sin(x.delta) * std::sin(x.delta);
  return q;
}

// sum_k p_k tau_k (x) |k><k|, qubit first.
inline CMatrix separable_state(const SeparableClass& s) {
  validate(s);
  const Eigen::Index K = static_cast<Eigen::Index>(s.size());
  CMatrix rho = CMatrix::Zero(2 * K, 2 * K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& x = s[k];
    const CMatrix tau = (pauli::id() + x.h * (std::sin(x.delta) * std::cos(x.phi) * pauli::x() +
                                              std::sin(x.delta) * std::sin(x.phi) * pauli::y() +
                                              std::cos(x.delta) * pauli::z())) * 0.5;
    CMatrix e = CMatrix::Zero(K, K);
    e(k, k) = 1.0;
    rho += x.p * kron(tau, e);
  }
  return rho;
}

inline CMatrix separable_generator(Eigen::Index K) { return kron(pauli::z(), CMatrix::Identity(K, K)); }

// ---------------------------------------------------------------- GHZ mixtures

inline double log_binom(int n, int k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

// w[j] is the total weight of the C(M-1, j) sectors with |k| = j.
struct GhzMixture {
  int M = 1;
  std::vector<double> w;

  static GhzMixture pure(int M) {
    GhzMixture g{M, std::vector<double>(M, 0.0)};
    g.w[0] = 1.0;
    return g;
  }
  void validate() const {
    if (M < 1) throw InvalidArgument("GhzMixture: M must be >= 1");
    if (static_cast<int>(w.size()) != M) throw InvalidArgument("GhzMixture: need M class weights");
    double t = 0;
    for (double x : w) {
      if (x < 0) throw InvalidArgument("GhzMixture: negative weight");
      t += x;
    }
    if (std::abs(t - 1.0) > 1e-9) throw InvalidArgument("GhzMixture: weights must sum to 1");
  }
};

struct GhzRecord {
  double qfi, fi2, oz_mean, oz_var;
  double d2m() const { return 4.0 * oz_var; }
};

inline GhzRecord ghz_record(const GhzMixture& g) {
  g.validate();
  double m1 = 0, m2 = 0;
  for (int j = 0; j < g.M; ++j) {
    const double a = g.M - 2.0 * j;
    m1 += g.w[j] * a;
    m2 += g.w[j] * a * a;
  }
  return {4.0 * m2, 4.0 * m1 * m1, m1, m2 - m1 * m1};
}

inline constexpr int kGhzMaxFullM = 14;

// Diagonal of sum_h sigma_z^h; bit h-1 of the index is qubit h.
inline RVector ghz_generator_diag(int M) {
  const std::uint64_t n = std::uint64_t{1} << M;
  RVector g(n);
  for (std::uint64_t x = 0; x < n; ++x) g(x) = M - 2.0 * std::popcount(x);
  return g;
}

inline CVector ghz_vector(int M, std::uint64_t k, int sign) {
  if (M > 24) throw DimTooLarge("ghz_vector: M above 24");
  const std::uint64_t n = std::uint64_t{1} << M;
  CVector v = CVector::Zero(n);
  v(k) = 1.0 / std::sqrt(2.0);
  v(k ^ (n - 1)) = sign / std::sqrt(2.0);
  return v;
}

inline CMatrix ghz_full_state(const GhzMixture& g) {
  g.validate();
  if (g.M > kGhzMaxFullM) throw DimTooLarge("ghz_full_state: full-space materialization limited to M <= 14");
  const std::uint64_t n = std::uint64_t{1} << g.M, K = n / 2;
  CMatrix rho = CMatrix::Zero(n, n);
  for (std::uint64_t k = 0; k < K; ++k) {
    const int j = std::popcount(k);
    const double pk = g.w[j] * std::exp(-log_binom(g.M - 1, j));
    if (pk == 0) continue;
    const std::uint64_t kb = k ^ (n - 1);
    rho(k, k) += pk / 2;
    rho(kb, kb) += pk / 2;
    rho(k, kb) += pk / 2;
    rho(kb, k) += pk / 2;
  }
  return rho;
}

// Unitary family under sum sigma_z with the diagonal generator applied
// elementwise: rho_ab -> rho_ab exp(-i l (g_a - g_b)).
inline StateFamily diagonal_unitary_family(const CMatrix& rho0, const RVector& g) {
  StateFamily s;
  s.unitary = true;
  s.rho0 = rho0;
  s.G = g.cast<cplx>().asDiagonal();
  s.at = [rho0, g](double l) {
    CMatrix r = rho0;
    for (Eigen::Index b = 0; b < r.cols(); ++b)
      for (Eigen::Index a = 0; a < r.rows(); ++a)
        if (r(a, b) != cplx(0)) r(a, b) *= std::exp(-I_unit * (l * (g(a) - g(b))));
    return r;
  };
  return s;
}

struct GhzFamily {
  GhzRecord record;
  std::optional<StateFamily> family;  // present when materialized
};

inline GhzFamily ghz_family(const GhzMixture& g, bool materialize) {
  GhzFamily out{ghz_record(g), std::nullopt};
  if (materialize) out.family = diagonal_unitary_family(ghz_full_state(g), ghz_generator_diag(g.M));
  return out;
}

// TPS with l1 = GHZ+_k, l2 = GHZ-_k, so alpha_plus(k) = 2(M - 2|k|) keeps its sign.
inline TpsDecomposition ghz_tps(int M, const CMatrix& L) {
  if (M > kGhzMaxFullM) throw DimTooLarge("ghz_tps: M above 14");
  const std::uint64_t n = std::uint64_t{1} << M, K = n / 2;
  CMatrix l1(n, K), l2(n, K);
  for (std::uint64_t k = 0; k < K; ++k) {
    l1.col(k) = ghz_vector(M, k, +1);
    l2.col(k) = ghz_vector(M, k, -1);
  }
  return tps_from_pairs(l1, l2, L);
}

// ---------------------------------------------------------------- NOON mixtures

struct NoonMixture {
  std::vector<double> p;   // k = 0..K
  std::vector<cplx> eta;   // coherence of the normalized k-sector block

  void validate() const {
    if (p.size() != eta.size() || p.empty()) throw InvalidArgument("NoonMixture: p and eta sizes differ");
    double t = 0;
    for (size_t k = 0; k < p.size(); ++k) {
      if (p[k] < 0) throw InvalidArgument("NoonMixture: negative weight");
      if (std::abs(eta[k]) > 0.5 + 1e-12) throw InvalidArgument("NoonMixture: |eta_k| must be <= 1/2");
      t += p[k];
    }
    if (std::abs(t - 1.0) > 1e-9) throw InvalidArgument("NoonMixture: weights must sum to 1");
  }
};

inline double noon_qfi(const NoonMixture& n) {
  n.validate();
  double q = 0;
  for (size_t k = 1; k < n.p.size(); ++k) {
    const double b = 2.0 * std::abs(n.eta[k]);
    q += n.p[k] * double(k * k) * b * b;
  }
  return q;
}

// Basis: |0,0>, then (|k,0>, |0,k>) for k = 1..K. Generator counts mode-1 photons.
inline CMatrix noon_state(const NoonMixture& n) {
  n.validate();
  const Eigen::Index K = static_cast<Eigen::Index>(n.p.size()) - 1;
  CMatrix rho = CMatrix::Zero(1 + 2 * K, 1 + 2 * K);
  rho(0, 0) = n.p[0];
  for (Eigen::Index k = 1; k <= K; ++k) {
    const Eigen::Index a = 2 * k - 1, b = 2 * k;
    rho(a, a) = rho(b, b) = n.p[k] / 2;
    rho(a, b) = n.p[k] * n.eta[k];
    rho(b, a) = std::conj(rho(a, b));
  }
  return rho;
}

inline RVector noon_generator_diag(const NoonMixture& n) {
  const Eigen::Index K = static_cast<Eigen::Index>(n.p.size()) - 1;
  RVector g = RVector::Zero(1 + 2 * K);
  for (Eigen::Index k = 1; k <= K; ++k) g(2 * k - 1) = double(k);
  return g;
}

// (arg eta_k - k l) reduced to [0, pi/2); values near 0 or pi/2 mark sectors
// where the fixed measurement is optimal. Diagnostic only.
inline std::vector<double> noon_phase_mismatch(const NoonMixture& n, double l) {
  std::vector<double> out(n.p.size(), 0.0);
  const double q = std::numbers::pi / 2;
  for (size_t k = 1; k < n.p.size(); ++k) {
    double x = std::fmod(std::arg(n.eta[k]) - double(k) * l, q);
    if (x < 0) x += q;
    out[k] = x;
  }
  return out;
}

}  // namespace qmetro
