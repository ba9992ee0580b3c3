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

#include "qmetro/estimator.hpp"

namespace qmetro {

// Qubit (+/-) x sector (k) factorization induced by the SLD. Column k of
// l1/l2 spans sector k; aplus/aminus are (l1 +- i l2)/sqrt(2). For the
// generic decomposition alpha_plus(k) >= 0; explicitly oriented structures
// (tps_from_pairs) may carry negative alpha_plus.
struct TpsDecomposition {
  Eigen::Index dim = 0;
  RVector alpha_plus;
  CMatrix l1, l2;
  CMatrix aplus, aminus;

  Eigen::Index sectors() const { return l1.cols(); }

  CMatrix projector(Eigen::Index k) const {
    return l1.col(k) * l1.col(k).adjoint() + l2.col(k) * l2.col(k).adjoint();
  }
  // Embedded Pauli a in {x, y, z} acting as sigma_a on every (l1, l2) plane.
  CMatrix pauli(char a) const {
    CMatrix s = CMatrix::Zero(dim, dim);
    for (Eigen::Index k = 0; k < sectors(); ++k) {
      const CVector u = l1.col(k), v = l2.col(k);
      switch (a) {
        case 'x': s += u * v.adjoint() + v * u.adjoint(); break;
        case 'y': s += -I_unit * u * v.adjoint() + I_unit * v * u.adjoint(); break;
        case 'z': s += u * u.adjoint() - v * v.adjoint(); break;
        default: throw InvalidArgument("pauli: axis must be x, y or z");
      }
    }
    return s;
  }
  CMatrix reconstruct_sld() const {
    CMatrix L = CMatrix::Zero(dim, dim);
    for (Eigen::Index k = 0; k < sectors(); ++k)
      L += alpha_plus(k) * (aplus.col(k) * aplus.col(k).adjoint() - aminus.col(k) * aminus.col(k).adjoint());
    return L;
  }
};

namespace detail {

inline void finish_tps(TpsDecomposition& t) {
  const double r = 1.0 / std::sqrt(2.0);
  t.aplus = (t.l1 + I_unit * t.l2) * r;
  t.aminus = (t.l1 - I_unit * t.l2) * r;
}

}  // namespace detail

inline TpsDecomposition tps_decompose(const SldResult& s) {
  const Eigen::Index n = s.L.rows();
  if (n % 2 != 0) throw OddDimension("tps_decompose: dimension must be even");
  const CMatrix& W = s.rho_eig.vectors;
  const CMatrix Lp = W.adjoint() * s.L * W;
  const double scale = std::max(1.0, max_abs(s.L));
  if (Lp.real().cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw NotAntisymmetric("tps_decompose: SLD not purely imaginary in the eigenbasis of rho");
  const CMatrix Li = I_unit * Lp.imag().cast<cplx>();  // drop roundoff real part
  const auto e = eigh(Li);

  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(e.values(i) + e.values(n - 1 - i)) > 1e-9 * scale)
      throw InvariantFailure("tps_decompose: SLD spectrum not paired as +-alpha");

  const double ztol = 1e-9 * scale;
  std::vector<Eigen::Index> pos, zero;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (e.values(i) > ztol) pos.push_back(i);
    else if (std::abs(e.values(i)) <= ztol) zero.push_back(i);
  }
  std::stable_sort(pos.begin(), pos.end(), [&](auto a, auto b) { return e.values(a) > e.values(b); });

  TpsDecomposition t;
  t.dim = n;
  const Eigen::Index K = n / 2;
  Eigen::MatrixXd l1(n, K), l2(n, K);
  t.alpha_plus = RVector::Zero(K);
  const double s2 = std::sqrt(2.0);
  Eigen::Index k = 0;
  for (auto i : pos) {
    const CVector v = e.vectors.col(i);
    l1.col(k) = s2 * v.real();
    l2.col(k) = s2 * v.imag();
    t.alpha_plus(k) = e.values(i);
    ++k;
  }
  if (!zero.empty()) {
    // The kernel of a real antisymmetric matrix is closed under conjugation,
    // so its projector is real; its unit eigenvectors give a real basis.
    CMatrix P = CMatrix::Zero(n, n);
    for (auto i : zero) P += e.vectors.col(i) * e.vectors.col(i).adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P.real());
    std::vector<Eigen::Index> cols;
    for (Eigen::Index i = n - 1; i >= 0 && cols.size() < zero.size(); --i) cols.push_back(i);
    std::sort(cols.begin(), cols.end());
    for (size_t j = 0; j + 1 < cols.size(); j += 2, ++k) {
      l1.col(k) = es.eigenvectors().col(cols[j]);
      l2.col(k) = es.eigenvectors().col(cols[j + 1]);
    }
  }
  if (k != K) throw InvariantFailure("tps_decompose: pairing did not cover the space");
  t.l1 = W * l1.cast<cplx>();
  t.l2 = W * l2.cast<cplx>();
  detail::finish_tps(t);
  return t;
}

// Structure from explicit orthonormal real-pair columns; alpha_plus(k) is
// read off as <a+_k|L|a+_k> and may be negative.
inline TpsDecomposition tps_from_pairs(const CMatrix& l1, const CMatrix& l2, const CMatrix& L) {
  if (l1.rows() != L.rows() || l2.rows() != L.rows() || l1.cols() != l2.cols() || 2 * l1.cols() != L.rows())
    throw DimMismatch("tps_from_pairs: inconsistent shapes");
  TpsDecomposition t;
  t.dim = L.rows();
  t.l1 = l1;
  t.l2 = l2;
  detail::finish_tps(t);
  t.alpha_plus.resize(l1.cols());
  for (Eigen::Index k = 0; k < l1.cols(); ++k) t.alpha_plus(k) = t.aplus.col(k).dot(L * t.aplus.col(k)).real();
  return t;
}

struct ProbTable {
  std::vector<std::array<double, 2>> joint;  // joint[k][0] = p_{+,k}, [1] = p_{-,k}
  std::array<double, 2> pm{0, 0};
  std::vector<double> pk;
};

inline ProbTable joint_probs(const CMatrix& rho, const TpsDecomposition& t) {
  if (rho.rows() != t.dim) throw DimMismatch("joint_probs: dimensions differ");
  ProbTable out;
  const Eigen::Index K = t.sectors();
  out.joint.resize(K);
  out.pk.resize(K);
  const CMatrix rp = rho * t.aplus, rm = rho * t.aminus;
  for (Eigen::Index k = 0; k < K; ++k) {
    out.joint[k][0] = std::max(0.0, t.aplus.col(k).dot(rp.col(k)).real());
    out.joint[k][1] = std::max(0.0, t.aminus.col(k).dot(rm.col(k)).real());
    out.pm[0] += out.joint[k][0];
    out.pm[1] += out.joint[k][1];
    out.pk[k] = out.joint[k][0] + out.joint[k][1];
  }
  return out;
}

namespace detail {
inline double shannon(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > kProbClip) h -= x * std::log(x);
  return h;
}
}  // namespace detail

inline double mutual_info(const ProbTable& t) {
  std::vector<double> j;
  j.reserve(2 * t.joint.size());
  for (const auto& r : t.joint) j.insert(j.end(), r.begin(), r.end());
  return detail::shannon({t.pm[0], t.pm[1]}) + detail::shannon(t.pk) - detail::shannon(j);
}

struct SplitResult {
  double fi2 = 0, d2m = 0, qfi = 0;
  double m0 = 0, dm0 = 0;
  double residual() const { return qfi - fi2 - d2m; }
};

inline double qfi_at(const StateFamily& fam, double l0, double h) {
  const CMatrix r = fam(l0);
  return qfi_trace(r, sld(r, family_derivative(fam, l0, h)));
}

inline SplitResult qfi_split(const StateFamily& fam, const TpsDecomposition& t, double l0, double h) {
  auto table = [&](double l) { return joint_probs(fam(l), t); };
  auto estimate = [&](double hh, double& fi2, double& d2m, double& m0, double& dm0) {
    const auto st = fd::sample(table, l0, hh);
    fi2 = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double d = fd::d1(st.v[0].pm[i], st.v[1].pm[i], st.v[3].pm[i], st.v[4].pm[i], hh);
      const double p = st.v[2].pm[i];
      if (p < 1e-12 && std::abs(d) < 1e-8) continue;
      fi2 += d * d / p;
    }
    std::array<double, 5> m;
    for (int i = 0; i < 5; ++i) m[i] = mutual_info(st.v[i]);
    d2m = fd::d2(m[0], m[1], m[2], m[3], m[4], hh);
    dm0 = fd::d1(m[0], m[1], m[3], m[4], hh);
    m0 = m[2];
  };
  SplitResult c, f;
  estimate(h, c.fi2, c.d2m, c.m0, c.dm0);
  estimate(h / 2, f.fi2, f.d2m, f.m0, f.dm0);
  f.fi2 = fd::gated(c.fi2, f.fi2, "qfi_split FI2");
  f.d2m = fd::gated(c.d2m, f.d2m, "qfi_split d2M");
  f.qfi = qfi_at(fam, l0, h);
  return f;
}

// 2x2 state of the qubit factor in the (+, -) basis.
inline CMatrix reduced_qubit(const CMatrix& rho, const TpsDecomposition& t) {
  if (rho.rows() != t.dim) throw DimMismatch("reduced_qubit: dimensions differ");
  const CMatrix rp = rho * t.aplus, rm = rho * t.aminus;
  CMatrix xi = CMatrix::Zero(2, 2);
  for (Eigen::Index k = 0; k < t.sectors(); ++k) {
    xi(0, 0) += t.aplus.col(k).dot(rp.col(k));
    xi(0, 1) += t.aplus.col(k).dot(rm.col(k));
    xi(1, 0) += t.aminus.col(k).dot(rp.col(k));
    xi(1, 1) += t.aminus.col(k).dot(rm.col(k));
  }
  return (xi + xi.adjoint()) * 0.5;
}

inline StateFamily reduced_family(const StateFamily& fam, const TpsDecomposition& t) {
  return StateFamily::general([fam, t](double l) { return reduced_qubit(fam(l), t); });
}

}  // namespace qmetro
