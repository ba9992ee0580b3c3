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

#include "qmetro/qstate.hpp"

#include <array>
#include <functional>
#include <memory>

namespace qmetro {

inline constexpr double kSupportCutoff = 1e-10;

inline double default_step(double lambda0) { return 1e-3 * std::max(1.0, std::abs(lambda0)); }

// A one-parameter family lambda -> rho(lambda). Unitary families keep
// (rho0, G) so that derivatives are exact and spectra are known constant.
struct StateFamily {
  std::function<CMatrix(double)> at;
  bool unitary = false;
  CMatrix rho0;
  CMatrix G;

  CMatrix operator()(double lambda) const { return at(lambda); }

  static StateFamily general(std::function<CMatrix(double)> f) {
    StateFamily s;
    s.at = std::move(f);
    return s;
  }

  static StateFamily unitary_family(const CMatrix& rho0, const CMatrix& G) {
    if (rho0.rows() != G.rows()) throw DimMismatch("unitary_family: rho0 and G dimensions differ");
    auto eg = std::make_shared<EigDecomposition>(eigh(G));
    StateFamily s;
    s.unitary = true;
    s.rho0 = rho0;
    s.G = G;
    s.at = [eg, rho0](double lambda) {
      CVector ph(eg->values.size());
      for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::exp(-I_unit * (lambda * eg->values(i)));
      const CMatrix U = eg->vectors * ph.asDiagonal() * eg->vectors.adjoint();
      CMatrix r = U * rho0 * U.adjoint();
      return CMatrix((r + r.adjoint()) * 0.5);
    };
    return s;
  }
};

namespace fd {

inline constexpr std::array<int, 4> kOffsets{-2, -1, 1, 2};

template <class T>
T d1(const T& m2, const T& m1, const T& cd, const T& p2, double h) {
  return (m2 - 8.0 * m1 + 8.0 * cd - p2) / (12.0 * h);
}

template <class T>
T d2(const T& m2, const T& m1, const T& c, const T& cd, const T& p2, double h) {
  return (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * cd - p2) / (12.0 * h * h);
}

// Five samples f(l0 + k h), k = -2..2.
template <class T>
struct Stencil {
  std::array<T, 5> v;
  double h;
  T first() const { return d1(v[0], v[1], v[3], v[4], h); }
  T second() const { return d2(v[0], v[1], v[2], v[3], v[4], h); }
};

template <class F>
auto sample(F&& f, double l0, double h) {
  using T = std::decay_t<decltype(f(l0))>;
  Stencil<T> s{{f(l0 - 2 * h), f(l0 - h), f(l0), f(l0 + h), f(l0 + 2 * h)}, h};
  return s;
}

// Richardson gate between h and h/2; returns the h/2 estimate.
inline double gated(double coarse, double fine, const char* what) {
  if (std::abs(coarse - fine) > 1e-4 * std::max(1.0, std::abs(fine)))
    throw StepTooLarge(std::string(what) + ": h and h/2 estimates disagree beyond 1e-4");
  return fine;
}

}  // namespace fd

inline CMatrix family_derivative(const StateFamily& fam, double l0, double h) {
  if (fam.unitary) {
    const CMatrix r = fam(l0);
    return -I_unit * (fam.G * r - r * fam.G);
  }
  const auto s = fd::sample([&](double l) { return fam(l); }, l0, h);
  CMatrix d = s.first();
  return (d + d.adjoint()) * 0.5;
}

struct SldResult {
  CMatrix L;
  RVector alpha;     // descending |alpha|, ties by ascending eigen-index
  CMatrix vectors;   // eigenvectors of L matching alpha
  int support_rank = 0;
  CMatrix rho;
  EigDecomposition rho_eig;
};

inline SldResult sld(const CMatrix& rho, const CMatrix& drho, double eps_supp = kSupportCutoff) {
  if (rho.rows() != drho.rows() || rho.cols() != drho.cols()) throw DimMismatch("sld: rho and drho dimensions differ");
  if (!is_hermitian(drho, 1e-10) && max_abs(drho) > 1e-14) throw NonHermitian("sld: drho not Hermitian");
  if (std::abs(drho.trace().real()) > 1e-9) throw InvalidArgument("sld: Tr drho deviates from 0");
  SldResult out;
  out.rho = rho;
  out.rho_eig = eigh(rho);
  const auto& p = out.rho_eig.values;
  const auto& W = out.rho_eig.vectors;
  const Eigen::Index n = rho.rows();
  const CMatrix d = W.adjoint() * drho * W;
  CMatrix Lp = CMatrix::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    if (p(a) > eps_supp) ++out.support_rank;
    for (Eigen::Index b = 0; b < n; ++b) {
      const double den = p(a) + p(b);
      if (den > eps_supp) {
        Lp(a, b) = 2.0 * d(a, b) / den;
      } else if (std::abs(d(a, b)) > 1e-6) {
        throw SupportViolation("sld: drho has weight on the null subspace of rho");
      }
    }
  }
  CMatrix L = W * Lp * W.adjoint();
  out.L = (L + L.adjoint()) * 0.5;

  const CMatrix res = W.adjoint() * ((rho * out.L + out.L * rho) * 0.5 - drho) * W;
  double worst = 0.0;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      if (p(a) + p(b) > eps_supp) worst = std::max(worst, std::abs(res(a, b)));
  if (worst > 1e-8 * std::max(1.0, max_abs(drho))) throw InvariantFailure("sld: Lyapunov residual above 1e-8");

  const auto el = eigh(out.L);
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](auto i, auto j) { return std::abs(el.values(i)) > std::abs(el.values(j)); });
  out.alpha.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.alpha(k) = el.values(idx[k]);
    out.vectors.col(k) = el.vectors.col(idx[k]);
  }
  return out;
}

inline double qfi_trace(const CMatrix& rho, const SldResult& s) {
  if (rho.rows() != s.L.rows()) throw DimMismatch("qfi_trace: dimensions differ");
  return std::max(0.0, (rho * s.L * s.L).trace().real());
}

inline double qfi_spectral(const CMatrix& rho0, const CMatrix& G, double eps_supp = kSupportCutoff) {
  if (rho0.rows() != G.rows()) throw DimMismatch("qfi_spectral: dimensions differ");
  const auto e = eigh(rho0);
  const CMatrix g = e.vectors.adjoint() * G * e.vectors;
  double q = 0.0;
  for (Eigen::Index a = 0; a < g.rows(); ++a)
    for (Eigen::Index b = 0; b < g.rows(); ++b) {
      if (a == b) continue;
      const double s = e.values(a) + e.values(b);
      if (s <= eps_supp) continue;
      const double dp = e.values(a) - e.values(b);
      q += 2.0 * dp * dp / s * std::norm(g(a, b));
    }
  return q;
}

inline double qfi_pure(const CVector& psi, const CVector& dpsi) {
  const cplx ov = psi.dot(dpsi);
  if (std::abs(ov.real()) > 1e-8) throw NormalizationDrift("qfi_pure: Re<psi|dpsi> is not 0");
  return std::max(0.0, 4.0 * (dpsi.squaredNorm() - std::norm(ov)));
}

namespace detail {

inline double fisher_from(const fd::Stencil<std::vector<double>>& s) {
  const auto& p0 = s.v[2];
  double fi = 0.0;
  for (size_t x = 0; x < p0.size(); ++x) {
    const double dp = fd::d1(s.v[0][x], s.v[1][x], s.v[3][x], s.v[4][x], s.h);
    if (p0[x] < 1e-12 && std::abs(dp) < 1e-8) continue;
    fi += dp * dp / p0[x];
  }
  return fi;
}

inline fd::Stencil<std::vector<double>> prob_stencil(const StateFamily& fam, const MeasBasis& B, double l0,
                                                     double h) {
  return fd::sample([&](double l) { return probs(fam(l), B); }, l0, h);
}

}  // namespace detail

inline double fisher_info(const StateFamily& fam, const MeasBasis& B, double l0, double h) {
  if (!(h > 0)) throw InvalidArgument("fisher_info: h must be positive");
  const double c = detail::fisher_from(detail::prob_stencil(fam, B, l0, h));
  const double f = detail::fisher_from(detail::prob_stencil(fam, B, l0, h / 2));
  return fd::gated(c, f, "fisher_info");
}

struct CurvatureResult {
  double curvature;   // -d^2 Coh
  double first;       // d Coh
};

inline CurvatureResult coherence_curvature(const StateFamily& fam, const MeasBasis& B, double l0, double h) {
  if (!(h > 0)) throw InvalidArgument("coherence_curvature: h must be positive");
  auto coh = [&](double l) { return coherence(fam(l), B); };
  const auto c = fd::sample(coh, l0, h);
  const auto f = fd::sample(coh, l0, h / 2);
  const double curv = fd::gated(-c.second(), -f.second(), "coherence_curvature");
  return {curv, f.first()};
}

inline MeasBasis sld_basis(const SldResult& s) { return MeasBasis{s.vectors}; }

struct CoherenceDecomposition {
  double curvature = 0, qfi = 0, f = 0, f_chi = 0, f_eps = 0, qfi_c = 0, qfi_q = 0;
  double first = 0;  // d Coh in the SLD basis
};

namespace detail {

// Eigenvalues of rho(l) reordered to follow the eigenvectors at the center.
inline RVector tracked_eigenvalues(const EigDecomposition& center, const CMatrix& rho) {
  const auto e = eigh(rho);
  const Eigen::Index n = rho.rows();
  const Eigen::MatrixXd ov = (center.vectors.adjoint() * e.vectors).cwiseAbs();
  std::vector<bool> used_c(n, false), used_s(n, false);
  RVector out(n);
  for (Eigen::Index step = 0; step < n; ++step) {
    double best = -1;
    Eigen::Index bi = 0, bj = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used_c[i]) continue;
      for (Eigen::Index j = 0; j < n; ++j)
        if (!used_s[j] && ov(i, j) > best) best = ov(i, j), bi = i, bj = j;
    }
    // Degenerate levels mix freely; only a genuine swap of distinct levels is fatal.
    if (best < 0.5 && std::abs(center.values(bi) - e.values(bj)) > 1e-8)
      throw EigTrackFailure("coherence_decompose: eigenvector overlap below 0.5");
    used_c[bi] = used_s[bj] = true;
    out(bi) = e.values(bj);
  }
  return out;
}

}  // namespace detail

inline CoherenceDecomposition coherence_decompose(const StateFamily& fam, double l0, double h) {
  CoherenceDecomposition r;
  const CMatrix rho0 = fam(l0);
  const auto s = sld(rho0, family_derivative(fam, l0, h));
  r.qfi = qfi_trace(rho0, s);
  const MeasBasis B = sld_basis(s);
  const auto cc = coherence_curvature(fam, B, l0, h);
  r.curvature = cc.curvature;
  r.first = cc.first;

  const auto ps = detail::prob_stencil(fam, B, l0, h);
  for (size_t a = 0; a < ps.v[2].size(); ++a) {
    if (ps.v[2][a] <= kProbClip) continue;
    r.f_chi += fd::d2(ps.v[0][a], ps.v[1][a], ps.v[2][a], ps.v[3][a], ps.v[4][a], h) * std::log(ps.v[2][a]);
  }

  if (!fam.unitary) {
    const auto& c = s.rho_eig;
    std::array<RVector, 5> ev;
    for (int k = -2; k <= 2; ++k)
      ev[k + 2] = k == 0 ? c.values : detail::tracked_eigenvalues(c, fam(l0 + k * h));
    for (Eigen::Index i = 0; i < c.values.size(); ++i) {
      const double e0 = ev[2](i);
      if (e0 <= 1e-12) continue;
      const double d1 = fd::d1(ev[0](i), ev[1](i), ev[3](i), ev[4](i), h);
      const double d2 = fd::d2(ev[0](i), ev[1](i), ev[2](i), ev[3](i), ev[4](i), h);
      r.f_eps -= d2 * std::log(e0);
      r.qfi_c += d1 * d1 / e0;
    }
  }
  r.qfi_q = r.qfi - r.qfi_c;
  r.f = r.f_chi + r.f_eps - r.qfi_c;
  return r;
}

// Uhlmann fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)).
inline double fidelity(const CMatrix& rho, const CMatrix& sigma) {
  const auto e = eigh(rho);
  RVector sq(e.values.size());
  for (Eigen::Index i = 0; i < sq.size(); ++i) sq(i) = std::sqrt(std::max(0.0, e.values(i)));
  const CMatrix sr = e.vectors * sq.asDiagonal() * e.vectors.adjoint();
  CMatrix m = sr * sigma * sr;
  m = (m + m.adjoint()) * 0.5;
  const auto em = eigh(m);
  double f = 0.0;
  for (Eigen::Index i = 0; i < em.values.size(); ++i) f += std::sqrt(std::max(0.0, em.values(i)));
  return f;
}

// 8(1 - F)/h^2 with the pair placed symmetrically about l0.
inline double bures_qfi(const StateFamily& fam, double l0, double h) {
  return 8.0 * (1.0 - fidelity(fam(l0 - h / 2), fam(l0 + h / 2))) / (h * h);
}

}  // namespace qmetro
