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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmetro {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr cplx I_unit{0.0, 1.0};

// All library failures derive from Error. numeric() separates invariant or
// convergence failures (exit 3 in the CLI) from bad inputs (exit 2).
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what, bool numeric)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)), numeric_(numeric) {}
  const std::string& kind() const noexcept { return kind_; }
  bool numeric() const noexcept { return numeric_; }

 private:
  std::string kind_;
  bool numeric_;
};

#define QMETRO_ERROR(Name, numeric)                                           \
  struct Name : Error {                                                       \
    explicit Name(const std::string& w) : Error(#Name, w, numeric) {}         \
  };

QMETRO_ERROR(InvalidArgument, false)
QMETRO_ERROR(DimMismatch, false)
QMETRO_ERROR(DimTooLarge, false)
QMETRO_ERROR(OddDimension, false)
QMETRO_ERROR(NotDescending, false)
QMETRO_ERROR(NonHermitian, true)
QMETRO_ERROR(NoConvergence, true)
QMETRO_ERROR(NotNormalized, true)
QMETRO_ERROR(SupportViolation, true)
QMETRO_ERROR(NormalizationDrift, true)
QMETRO_ERROR(StepTooLarge, true)
QMETRO_ERROR(EigTrackFailure, true)
QMETRO_ERROR(NotAntisymmetric, true)
QMETRO_ERROR(DegenerateDenominator, true)
QMETRO_ERROR(StiffnessFailure, true)
QMETRO_ERROR(DegenerateGround, true)
QMETRO_ERROR(InvariantFailure, true)

#undef QMETRO_ERROR

inline double max_abs(const CMatrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

inline bool all_finite(const CMatrix& a) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const cplx z = a.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

inline bool is_hermitian(const CMatrix& a, double rel = 1e-12) {
  if (a.rows() != a.cols()) return false;
  return max_abs(a - a.adjoint()) <= rel * std::max(max_abs(a), 1e-300);
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace pauli {
inline CMatrix id() { return CMatrix::Identity(2, 2); }
inline CMatrix x() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline CMatrix y() {
  CMatrix m(2, 2);
  m << 0, -I_unit, I_unit, 0;
  return m;
}
inline CMatrix z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
}  // namespace pauli

struct EigDecomposition {
  RVector values;   // ascending
  CMatrix vectors;  // columns
};

namespace detail {

// First component with modulus above 1e-8 becomes real positive.
inline void fix_phase(CMatrix& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      const double m = std::abs(v(r, c));
      if (m > 1e-8) {
        v.col(c) *= std::conj(v(r, c)) / m;
        break;
      }
    }
  }
}

inline void sort_ascending(RVector& w, CMatrix& v) {
  std::vector<Eigen::Index> idx(w.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto i, auto j) { return w(i) < w(j); });
  RVector w2(w.size());
  CMatrix v2(v.rows(), v.cols());
  for (size_t k = 0; k < idx.size(); ++k) {
    w2(k) = w(idx[k]);
    v2.col(k) = v.col(idx[k]);
  }
  w = std::move(w2);
  v = std::move(v2);
}

}  // namespace detail

// Cyclic complex Jacobi. Each rotation is D R D^dagger with R the real
// rotation annihilating |a_pq| and D = diag(1, e^{-i arg a_pq}).
inline EigDecomposition eigh(const CMatrix& A) {
  if (A.rows() != A.cols()) throw DimMismatch("eigh: matrix not square");
  if (!all_finite(A)) throw NonHermitian("eigh: non-finite entries");
  const Eigen::Index n = A.rows();
  const double anorm = max_abs(A);
  if (max_abs(A - A.adjoint()) > 1e-12 * std::max(anorm, 1e-300))
    throw NonHermitian("eigh: ||A - A^dagger|| exceeds 1e-12 ||A||");

  CMatrix a = (A + A.adjoint()) * 0.5;
  CMatrix v = CMatrix::Identity(n, n);
  const double thr = 1e-13 * anorm;
  bool converged = (n <= 1) || anorm == 0.0;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= thr) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double mag = std::abs(a(p, q));
        if (mag < 1e-300) continue;
        const cplx ph = a(p, q) / mag;
        const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * mag);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0) t = -t;
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const cplx jpq = s * ph;             // J(p,q)
        const cplx jqp = -s * std::conj(ph);  // J(q,p)
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * c + akq * jqp;
          a(k, q) = akp * jpq + akq * c;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk + std::conj(jqp) * aqk;
          a(q, k) = std::conj(jpq) * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * c + vkq * jqp;
          v(k, q) = vkp * jpq + vkq * c;
        }
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off > thr) throw NoConvergence("eigh: 100 Jacobi sweeps exceeded");
  }
  EigDecomposition out;
  out.values = a.diagonal().real();
  out.vectors = std::move(v);
  detail::sort_ascending(out.values, out.vectors);
  detail::fix_phase(out.vectors);
  return out;
}

inline CMatrix unitary_from_generator(const CMatrix& G, double lambda) {
  const auto e = eigh(G);
  CVector ph(e.values.size());
  for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::exp(-I_unit * (lambda * e.values(i)));
  return e.vectors * ph.asDiagonal() * e.vectors.adjoint();
}

// Entries at or below this threshold contribute exactly 0 to entropies.
inline constexpr double kProbClip = 1e-15;

// -sum p ln p in nats, with negatives down to -1e-12 clipped to 0.
inline double xlogx_sum(const std::vector<double>& p) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= -1e-12)) throw NotNormalized("xlogx_sum: entry below -1e-12");
    sum += std::max(x, 0.0);
  }
  if (std::abs(sum - 1.0) > 1e-9) throw NotNormalized("xlogx_sum: sum deviates from 1");
  double h = 0.0;
  for (double x : p)
    if (x > kProbClip) h -= x * std::log(x);
  return std::max(h, 0.0);
}

inline std::vector<double> to_std(const RVector& v) { return {v.data(), v.data() + v.size()}; }

inline CMatrix from_real(const Eigen::MatrixXd& m) { return m.cast<cplx>(); }

}  // namespace qmetro
