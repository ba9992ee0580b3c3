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

// Ground-state estimation of lambda in H = H0 + lambda V.

#pragma once

#include "qmetro/ghznoise.hpp"
#include "qmetro/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <random>

namespace qmetro {

struct HamiltonianFamily {
  CMatrix H0, V;
  std::string tag;

  static HamiltonianFamily checked(CMatrix h0, CMatrix v, std::string tag = {}) {
    if (h0.rows() != h0.cols() || v.rows() != v.cols() || h0.rows() != v.rows())
      throw DimMismatch("HamiltonianFamily: H0 and V must be square of equal size");
    if (!is_hermitian(h0) || !is_hermitian(v)) throw NonHermitian("HamiltonianFamily: H0 and V must be Hermitian");
    return {std::move(h0), std::move(v), std::move(tag)};
  }
  Eigen::Index dim() const { return H0.rows(); }
  CMatrix at(double l) const { return H0 + l * V; }
};

inline constexpr int kMaxTfimSites = 14;

// Open (or periodic) chain H0 = -J sum Z_i Z_{i+1}, V = -sum X_i. With
// even_parity the family is restricted to the prod X_i = +1 sector, written
// in the X eigenbasis (bit 1 = X eigenvalue -1), which holds the ground
// state for lambda > 0.
inline HamiltonianFamily tfim_family(int L, double J, bool periodic = false, bool even_parity = false) {
  if (L < 2) throw InvalidArgument("tfim_family: L must be >= 2");
  if (L > kMaxTfimSites) throw DimTooLarge("tfim_family: L must be <= 14");
  const int bonds = periodic && L > 2 ? L : L - 1;
  const size_t full = size_t{1} << L;
  auto bond_mask = [&](int i) { return (size_t{1} << i) | (size_t{1} << ((i + 1) % L)); };
  if (!even_parity) {
    CMatrix h0 = CMatrix::Zero(full, full), v = CMatrix::Zero(full, full);
    for (size_t s = 0; s < full; ++s) {
      double e = 0;
      for (int i = 0; i < bonds; ++i) e += std::popcount(s & bond_mask(i)) == 1 ? 1.0 : -1.0;
      h0(s, s) = J * e;
      for (int i = 0; i < L; ++i) v(s ^ (size_t{1} << i), s) -= 1.0;
    }
    return {h0, v, "tfim"};
  }
  std::vector<size_t> states;
  std::vector<Eigen::Index> index(full, -1);
  for (size_t s = 0; s < full; ++s)
    if (std::popcount(s) % 2 == 0) index[s] = Eigen::Index(states.size()), states.push_back(s);
  const auto n = Eigen::Index(states.size());
  CMatrix h0 = CMatrix::Zero(n, n), v = CMatrix::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const size_t s = states[a];
    v(a, a) = -(L - 2.0 * std::popcount(s));
    for (int i = 0; i < bonds; ++i) h0(index[s ^ bond_mask(i)], a) -= J;
  }
  return {h0, v, "tfim-even"};
}

// Classical Ising chain in a longitudinal field: H0 = -J sum Z Z, V = -sum Z.
// Everything commutes, so the ground state does not depend on lambda.
inline HamiltonianFamily commuting_family(int L, double J) {
  if (L < 2) throw InvalidArgument("commuting_family: L must be >= 2");
  if (L > kMaxTfimSites) throw DimTooLarge("commuting_family: L must be <= 14");
  const size_t full = size_t{1} << L;
  CMatrix h0 = CMatrix::Zero(full, full), v = CMatrix::Zero(full, full);
  for (size_t s = 0; s < full; ++s) {
    double e = 0;
    for (int i = 0; i + 1 < L; ++i) e += ((s >> i) & 1) == ((s >> (i + 1)) & 1) ? -1.0 : 1.0;
    h0(s, s) = J * e;
    v(s, s) = -(L - 2.0 * std::popcount(s));
  }
  return {h0, v, "commuting"};
}

struct GroundStateRecord {
  double lambda = 0;
  double e0 = 0, gap = 0;
  CVector ground, v;  // v: first-order correction sum_{n>0} |n><n|V|0>/(E0-En)
  double vv = 0;
  double qfi_sum = 0;  // 4 sum |<n|V|0>|^2/(E0-En)^2
};

inline constexpr double kGapGuard = 1e-10;

namespace detail {

struct Spectrum {
  RVector values;
  CMatrix vectors;
};

inline Spectrum diagonalize(const CMatrix& H) {
  if (H.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.real());
    if (es.info() != Eigen::Success) throw NoConvergence("ceqe: eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors().cast<cplx>()};
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
  if (es.info() != Eigen::Success) throw NoConvergence("ceqe: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline CVector ground_vector(const HamiltonianFamily& fam, double l) {
  const auto s = diagonalize(fam.at(l));
  if (s.values.size() > 1 && s.values(1) - s.values(0) <= kGapGuard)
    throw DegenerateGround("ceqe: ground state degenerate");
  return s.vectors.col(0);
}

}  // namespace detail

inline GroundStateRecord ground_state(const HamiltonianFamily& fam, double l) {
  const auto s = detail::diagonalize(fam.at(l));
  GroundStateRecord r;
  r.lambda = l;
  r.e0 = s.values(0);
  r.gap = s.values.size() > 1 ? s.values(1) - s.values(0) : std::numeric_limits<double>::infinity();
  if (r.gap <= kGapGuard) throw DegenerateGround("ground_state: gap below 1e-10");
  r.ground = s.vectors.col(0);
  const CVector vn = s.vectors.adjoint() * (fam.V * r.ground);
  CVector c = CVector::Zero(vn.size());
  for (Eigen::Index n = 1; n < vn.size(); ++n) {
    c(n) = vn(n) / (r.e0 - s.values(n));
    r.qfi_sum += 4 * std::norm(c(n));
  }
  r.v = s.vectors * c;
  r.vv = r.v.squaredNorm();
  if (std::abs(r.ground.dot(r.v)) > 1e-10 * std::max(1.0, std::sqrt(r.vv)))
    throw InvariantFailure("ground_state: correction not orthogonal to the ground state");
  return r;
}

struct CeqeQfi {
  double qfi = 0;           // perturbative sum
  double qfi_vv = 0;        // 4 <v|v>
  double qfi_fidelity = 0;  // 8 (1 - |<0(l-h/2)|0(l+h/2)>|) / h^2
  double gap = 0;
};

inline CeqeQfi ceqe_qfi(const HamiltonianFamily& fam, double l, double h = 0) {
  if (h <= 0) h = 1e-3 * std::max(1.0, std::abs(l));
  const auto g = ground_state(fam, l);
  CeqeQfi q;
  q.qfi = g.qfi_sum;
  q.qfi_vv = 4 * g.vv;
  q.gap = g.gap;
  const double ov = std::abs(detail::ground_vector(fam, l - h / 2).dot(detail::ground_vector(fam, l + h / 2)));
  q.qfi_fidelity = 8 * (1 - std::min(1.0, ov)) / (h * h);
  if (std::abs(q.qfi - q.qfi_vv) > 1e-12 * std::max(1.0, q.qfi))
    throw InvariantFailure("ceqe_qfi: perturbative sum and 4<v|v> disagree");
  if (std::abs(q.qfi - q.qfi_fidelity) > 1e-5 * std::max(1.0, q.qfi))
    throw InvariantFailure("ceqe_qfi: fidelity route disagrees beyond 1e-5");
  return q;
}

struct CoherenceIdentity {
  double curvature = 0;  // -d^2 Coh in B_{0,v}
  double qfi = 0;
  double residual() const { return curvature - qfi; }
};

// Orthonormal basis {(|0> +- v/|v|)/sqrt 2} completed by a seeded random
// orthonormal set.
inline CMatrix b0v_basis(const CVector& g, const CVector& v, std::uint64_t seed) {
  const Eigen::Index n = g.size();
  const CVector vh = v / v.norm();
  CMatrix B(n, n);
  B.col(0) = (g + vh) / std::sqrt(2.0);
  B.col(1) = (g - vh) / std::sqrt(2.0);
  if (n > 2) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    CMatrix R(n, n - 2);
    for (Eigen::Index i = 0; i < R.size(); ++i) R.data()[i] = cplx(nd(rng), nd(rng));
    CMatrix Q(n, 2);
    Q << g, vh;
    R -= Q * (Q.adjoint() * R);
    R -= Q * (Q.adjoint() * R);
    Eigen::HouseholderQR<CMatrix> qr(R);
    const CMatrix thin = qr.householderQ() * CMatrix::Identity(n, n - 2);
    B.rightCols(n - 2) = thin - Q * (Q.adjoint() * thin);
    for (Eigen::Index c = 2; c < n; ++c) B.col(c).normalize();
  }
  return B;
}

inline double pure_coherence(const CVector& psi, const CMatrix& B) {
  const CVector a = B.adjoint() * psi;
  std::vector<double> p(a.size());
  double s = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += p[i] = std::norm(a(i));
  for (double& x : p) x /= s;
  return xlogx_sum(p);
}

inline CoherenceIdentity ceqe_coherence_identity(const HamiltonianFamily& fam, double l, double dl = 0,
                                                 std::uint64_t seed = 42) {
  if (dl <= 0) dl = 1e-4 * std::max(1.0, std::abs(l));
  const auto g = ground_state(fam, l);
  CoherenceIdentity out;
  out.qfi = g.qfi_sum;
  if (std::sqrt(g.vv) <= 1e-12) return out;  // commuting: no response
  const CMatrix B = b0v_basis(g.ground, g.v, seed);
  auto coh = [&](double x) { return x == l ? pure_coherence(g.ground, B) : pure_coherence(detail::ground_vector(fam, x), B); };
  const auto c = fd::sample(coh, l, dl);
  const auto f = fd::sample(coh, l, dl / 2);
  out.curvature = fd::gated(-c.second(), -f.second(), "ceqe_coherence_identity");
  return out;
}

struct ScalingFit {
  std::vector<int> L;
  std::vector<double> lambda_star, peak;
  double exponent = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();  // rms of the log-log fit
  bool fitted = false;
  bool super_extensive = false;  // peak/L strictly increasing
  std::vector<double> skipped;   // grid points with a degenerate ground state
};

// Grid argmax of the perturbative QFI refined by golden section on the
// neighboring cells. Points with a degenerate ground state are skipped.
inline ScalingFit critical_scan(const std::function<HamiltonianFamily(int)>& make, const std::vector<int>& Ls,
                                const std::vector<double>& grid, int jobs = 1) {
  if (Ls.empty() || grid.size() < 3) throw InvalidArgument("critical_scan: need sizes and at least 3 grid points");
  for (size_t i = 1; i < Ls.size(); ++i)
    if (Ls[i] <= Ls[i - 1]) throw InvalidArgument("critical_scan: sizes must be ascending");
  for (size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) throw InvalidArgument("critical_scan: grid must be ascending");
  ScalingFit fit;
  fit.L = Ls;
  for (int L : Ls) {
    const auto fam = make(L);
    auto q = [&](double l) {
      try {
        return ground_state(fam, l).qfi_sum;
      } catch (const DegenerateGround&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    const auto vals = parallel_map(grid.size(), jobs, [&](size_t i) { return q(grid[i]); });
    size_t best = 0;
    bool any = false;
    for (size_t i = 0; i < grid.size(); ++i) {
      if (std::isnan(vals[i])) {
        fit.skipped.push_back(grid[i]);
        continue;
      }
      if (!any || vals[i] > vals[best]) best = i, any = true;
    }
    if (!any) throw DegenerateGround("critical_scan: every grid point degenerate");
    double ls = grid[best], pk = vals[best];
    if (pk > 0 && best > 0 && best + 1 < grid.size()) {
      auto qs = [&](double l) {
        const double v = q(l);
        return std::isnan(v) ? -1.0 : v;
      };
      ls = golden_max(qs, grid[best - 1], grid[best + 1], 1e-9);
      pk = std::max(pk, qs(ls));
    }
    fit.lambda_star.push_back(ls);
    fit.peak.push_back(pk);
  }
  fit.super_extensive = Ls.size() > 1;
  for (size_t i = 1; i < Ls.size(); ++i)
    if (!(fit.peak[i] / Ls[i] > fit.peak[i - 1] / Ls[i - 1])) fit.super_extensive = false;
  const bool positive = std::all_of(fit.peak.begin(), fit.peak.end(), [](double p) { return p > 1e-12; });
  if (positive && Ls.size() >= 2) {
    std::vector<double> x, y;
    for (size_t i = 0; i < Ls.size(); ++i) x.push_back(std::log(double(Ls[i]))), y.push_back(std::log(fit.peak[i]));
    fit.exponent = least_squares_slope(x, y);
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    double ss = 0;
    for (size_t i = 0; i < x.size(); ++i) ss += std::pow(y[i] - (my + fit.exponent * (x[i] - mx)), 2);
    fit.residual = std::sqrt(ss / x.size());
    fit.fitted = true;
  }
  return fit;
}

}  // namespace qmetro
