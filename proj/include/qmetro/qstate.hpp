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

#include "qmetro/numkernel.hpp"

namespace qmetro {

// Density matrices travel as plain CMatrix through the numerical routines;
// DensityMatrix is the validated wrapper used at API boundaries.
struct DensityMatrix {
  CMatrix rho;

  static DensityMatrix checked(const CMatrix& m) {
    if (m.rows() != m.cols()) throw DimMismatch("density matrix not square");
    if (!is_hermitian(m, 1e-12)) throw NonHermitian("density matrix not Hermitian");
    if (std::abs(m.trace().real() - 1.0) > 1e-9) throw NotNormalized("trace deviates from 1");
    if (eigh(m).values(0) < -1e-9) throw InvalidArgument("density matrix has eigenvalue below -1e-9");
    return DensityMatrix{m};
  }
  Eigen::Index dim() const { return rho.rows(); }
};

struct PureState {
  CVector psi;

  static PureState checked(const CVector& v) {
    if (std::abs(v.norm() - 1.0) > 1e-10) throw NotNormalized("state vector norm deviates from 1");
    return PureState{v};
  }
  CMatrix projector() const { return psi * psi.adjoint(); }
};

// Columns are the basis vectors.
struct MeasBasis {
  CMatrix vecs;

  static MeasBasis checked(const CMatrix& v) {
    if (v.rows() != v.cols()) throw DimMismatch("basis matrix not square");
    if (max_abs(v.adjoint() * v - CMatrix::Identity(v.cols(), v.cols())) > 1e-9)
      throw InvalidArgument("basis vectors not orthonormal");
    return MeasBasis{v};
  }
  static MeasBasis computational(Eigen::Index n) { return MeasBasis{CMatrix::Identity(n, n)}; }
  Eigen::Index dim() const { return vecs.rows(); }
};

inline std::vector<double> probs(const CMatrix& rho, const MeasBasis& b) {
  if (rho.rows() != b.dim()) throw DimMismatch("probs: state and basis dimensions differ");
  const CMatrix rb = rho * b.vecs;
  std::vector<double> p(b.vecs.cols());
  double sum = 0.0;
  for (Eigen::Index x = 0; x < b.vecs.cols(); ++x) {
    p[x] = std::clamp(b.vecs.col(x).dot(rb.col(x)).real(), 0.0, 1.0);
    sum += p[x];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw NotNormalized("probs: outcome probabilities do not sum to 1");
  for (double& x : p) x /= sum;
  return p;
}

inline double von_neumann(const CMatrix& rho) {
  const auto e = eigh(rho);
  std::vector<double> ev(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) ev[i] = e.values(i) < kProbClip ? 0.0 : e.values(i);
  double s = std::accumulate(ev.begin(), ev.end(), 0.0);
  for (double& x : ev) x /= s;
  return xlogx_sum(ev);
}

// Relative entropy of coherence in nats.
inline double coherence(const CMatrix& rho, const MeasBasis& b) {
  return xlogx_sum(probs(rho, b)) - von_neumann(rho);
}

}  // namespace qmetro
