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

// Noisy GHZ frequency estimation. The M-qubit state evolves under
//   d rho/dt = -i w/2 [sum sigma_z, rho] - g/2 sum_h (rho - sum_a alpha_a s_a^h rho s_a^h)
// from (|0..0> + |1..1>)/sqrt(2). The state stays block diagonal in the
// sectors {|k>, |~k>} (k with top bit 0); blocks are written in that
// basis and depend on k only through j = |k|.

#pragma once

#include "qmetro/families.hpp"
#include "qmetro/parallel.hpp"

#include <boost/numeric/odeint.hpp>

#include <limits>

namespace qmetro {

struct NoiseParams {
  double omega = 1.0;
  double gamma = 1.0;
  double ax = 1.0, ay = 0.0, az = 0.0;

  static NoiseParams transverse(double w, double g) { return {w, g, 1.0, 0.0, 0.0}; }
  static NoiseParams parallel(double w, double g) { return {w, g, 0.0, 0.0, 1.0}; }
  void validate() const {
    if (!(gamma >= 0)) throw InvalidArgument("NoiseParams: gamma must be >= 0");
    if (ax < 0 || ay < 0 || az < 0 || std::abs(ax + ay + az - 1.0) > 1e-12)
      throw InvalidArgument("NoiseParams: alpha must be nonnegative and sum to 1");
  }
  bool is_transverse() const { return ax == 1.0 && ay == 0.0 && az == 0.0; }
};

// ---------------------------------------------------------------- Kraus form

// Single-qubit transverse channel: |0><0| -> a|0><0| + d|1><1|,
// |0><1| -> (b - ic)|0><1| + f|1><0|.
struct KrausCoeffs {
  double a, b, c, d, f;
  double zeta_sq;  // 4 w^2 - g^2; zeta = sqrt(|zeta_sq|)
};

inline KrausCoeffs kraus_coeffs(double w, double g, double t) {
  if (!(t >= 0)) throw InvalidArgument("kraus_coeffs: t must be >= 0");
  const double e = std::exp(-g * t / 2);
  const double eg = std::exp(-g * t);
  const double zs = 4 * w * w - g * g;
  const double z = std::sqrt(std::abs(zs));
  double C, S;  // cos(zeta t/2) and sin(zeta t/2)/zeta, continued for zs < 0
  if (z * t < 1e-8) {
    C = 1.0 - zs * t * t / 8;
    S = t / 2 * (1.0 - zs * t * t / 24);
  } else if (zs > 0) {
    C = std::cos(z * t / 2);
    S = std::sin(z * t / 2) / z;
  } else {
    C = std::cosh(z * t / 2);
    S = std::sinh(z * t / 2) / z;
  }
  return {(1 + eg) / 2, e * C, 2 * w * e * S, (1 - eg) / 2, g * e * S, zs};
}

inline CMatrix apply_kraus_map(const KrausCoeffs& k, const CMatrix& r) {
  const cplx u(k.b, -k.c);
  CMatrix o(2, 2);
  o(0, 0) = k.a * r(0, 0) + k.d * r(1, 1);
  o(1, 1) = k.d * r(0, 0) + k.a * r(1, 1);
  o(0, 1) = u * r(0, 1) + k.f * r(1, 0);
  o(1, 0) = std::conj(o(0, 1));
  return o;
}

// ---------------------------------------------------------------- sector ensemble

struct SectorClass {
  int j = 0;
  double log_mult = 0;   // ln C(M-1, j)
  double weight = 0;     // class probability mult * 2 r
  double log2r = 0;      // ln(2 r), r per sector
  cplx coh = 0;          // s / (2 r): off-diagonal of the normalized block
  CMatrix tau() const {
    CMatrix t(2, 2);
    t << 0.5, coh, std::conj(coh), 0.5;
    return t;
  }
  // Class-total block mult * [[r, s], [s*, r]].
  CMatrix total() const { return weight * tau(); }
};

struct SectorEnsemble {
  int M = 0;
  std::vector<SectorClass> classes;
  bool underflow = false;
  // Present for ODE-evolved ensembles: class totals w_j.
  std::vector<CMatrix> totals;

  double norm() const {
    double s = 0;
    for (const auto& c : classes) s += c.weight;
    return s;
  }
};

namespace detail {

inline double mul_log(double n, double lx) { return n == 0 ? 0.0 : n * lx; }
inline cplx mul_log(double n, cplx lx) { return n == 0 ? cplx(0) : n * lx; }

// Complex log of a real or complex base, with -inf modulus for 0.
inline cplx clog(cplx x) {
  if (x == cplx(0)) return {-std::numeric_limits<double>::infinity(), 0.0};
  return std::log(x);
}

inline cplx safe_exp(cplx l) {
  if (l.real() == -std::numeric_limits<double>::infinity()) return 0.0;
  return std::exp(l);
}

inline SectorClass closed_form_class(int M, int j, const KrausCoeffs& k) {
  const double la = std::log(k.a);
  const double ld = k.d > 0 ? std::log(k.d) : -std::numeric_limits<double>::infinity();
  const double t1 = mul_log(M - j, la) + mul_log(j, ld);
  const double t2 = mul_log(j, la) + mul_log(M - j, ld);
  const double ref = std::max(t1, t2);
  SectorClass c;
  c.j = j;
  c.log_mult = log_binom(M - 1, j);
  if (ref == -std::numeric_limits<double>::infinity()) {
    // only reachable at t = 0, where d = 0 empties every class but j = 0
    c.log2r = ref;
    c.weight = 0;
    c.coh = 0;
    return c;
  }
  const double e1 = std::exp(t1 - ref), e2 = t2 == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(t2 - ref);
  c.log2r = ref + std::log(e1 + e2);
  c.weight = std::exp(c.log_mult + c.log2r);
  const cplx u(k.b, -k.c);
  const cplx lf = clog(cplx(k.f)), lu = clog(u), lub = clog(std::conj(u));
  const cplx A = mul_log(j, lf) + mul_log(M - j, lu);
  const cplx B = mul_log(M - j, lf) + mul_log(j, lub);
  c.coh = (safe_exp(A - ref) + safe_exp(B - ref)) / (2.0 * (e1 + e2));
  return c;
}

}  // namespace detail

inline SectorEnsemble ghz_noisy_state(int M, double w, double g, double t) {
  if (M < 1) throw InvalidArgument("ghz_noisy_state: M must be >= 1");
  const auto k = kraus_coeffs(w, g, t);
  SectorEnsemble e;
  e.M = M;
  e.classes.reserve(M);
  for (int j = 0; j < M; ++j) {
    e.classes.push_back(detail::closed_form_class(M, j, k));
    if (e.classes.back().weight < 1e-300) e.underflow = true;
  }
  if (std::abs(e.norm() - 1.0) > 1e-9) throw InvariantFailure("ghz_noisy_state: class weights do not sum to 1");
  return e;
}

inline SectorClass ghz_noisy_class(int M, int j, double w, double g, double t) {
  return detail::closed_form_class(M, j, kraus_coeffs(w, g, t));
}

// ---------------------------------------------------------------- sector QFI

struct ClassRow {
  int j;
  double weight, qfi, coh_curv;
};

struct SectorQfi {
  double qfi = 0;       // sum_j p_j QFI_j
  double coh_curv = 0;  // sum_j p_j (-d^2 Coh_j)
  std::vector<ClassRow> table;
};

inline StateFamily class_family(int M, int j, double g, double t) {
  return StateFamily::general([=](double w) { return ghz_noisy_class(M, j, w, g, t).tau(); });
}

inline SectorQfi sector_qfi_avg(int M, double w, double g, double t, double h = 0) {
  if (h <= 0) h = 1e-3 * w;
  const auto e = ghz_noisy_state(M, w, g, t);
  SectorQfi out;
  for (const auto& c : e.classes) {
    if (c.weight < 1e-12) continue;
    const auto fam = class_family(M, c.j, g, t);
    const CMatrix tau = c.tau();
    auto fine = [&](double hh) { return qfi_trace(tau, sld(tau, family_derivative(fam, w, hh))); };
    const double q = fd::gated(fine(h), fine(h / 2), "sector_qfi_avg");
    const auto s = sld(tau, family_derivative(fam, w, h / 2));
    const double cc = coherence_curvature(fam, sld_basis(s), w, h).curvature;
    out.table.push_back({c.j, c.weight, q, cc});
    out.qfi += c.weight * q;
    out.coh_curv += c.weight * cc;
  }
  return out;
}

// Class-weighted averages of the per-class decomposition.
inline CoherenceDecomposition sector_coherence_decompose(int M, double w, double g, double t, double h = 0) {
  if (h <= 0) h = 1e-3 * w;
  const auto e = ghz_noisy_state(M, w, g, t);
  CoherenceDecomposition avg;
  for (const auto& c : e.classes) {
    if (c.weight < 1e-12) continue;
    const auto r = coherence_decompose(class_family(M, c.j, g, t), w, h);
    avg.curvature += c.weight * r.curvature;
    avg.qfi += c.weight * r.qfi;
    avg.f += c.weight * r.f;
    avg.f_chi += c.weight * r.f_chi;
    avg.f_eps += c.weight * r.f_eps;
    avg.qfi_c += c.weight * r.qfi_c;
    avg.qfi_q += c.weight * r.qfi_q;
    avg.first += c.weight * r.first;
  }
  return avg;
}

// ---------------------------------------------------------------- t_opt and sweeps

inline double t_opt(int M, double w, double g) {
  if (M < 1 || !(w > 0) || !(g > 0)) throw InvalidArgument("t_opt: arguments must be positive");
  return std::cbrt(3.0 / (g * w * w * M));
}

// Golden-section maximizer of f on [lo, hi].
template <class F>
double golden_max(F&& f, double lo, double hi, double rtol = 1e-7) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double a = lo, b = hi;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > rtol * std::max(1.0, std::abs(a + b) / 2) && b - a > 1e-14) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    }
  }
  return (a + b) / 2;
}

inline double t_opt_numeric(int M, double w, double g) {
  const double t0 = t_opt(M, w, g);
  return golden_max([&](double t) { return sector_qfi_avg(M, w, g, t).qfi / t; }, 1e-4, 10 * t0, 1e-6);
}

inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope fit needs at least two points");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  if (sxx == 0) throw InvalidArgument("slope fit needs distinct abscissae");
  return sxy / sxx;
}

struct SweepRow {
  int M;
  double t;
  double qfi, coh;
  double inv_qfi_rate, inv_coh_rate, bound;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double slope = 0;      // d ln inv_qfi_rate / d ln M
  double coh_slope = 0;  // same for the coherence column
};

inline double transverse_bound(int M, double w, double g) { return std::cbrt(9.0 / 8.0 * g * w * w) * std::pow(M, -5.0 / 3.0); }

namespace detail {
inline void fit_rows(SweepResult& r, int fit_from) {
  std::vector<double> x, y, yc;
  for (const auto& row : r.rows)
    if (row.M >= fit_from) {
      x.push_back(std::log(double(row.M)));
      y.push_back(std::log(row.inv_qfi_rate));
      yc.push_back(std::log(row.inv_coh_rate));
    }
  r.slope = least_squares_slope(x, y);
  r.coh_slope = least_squares_slope(x, yc);
}

inline int top_half_start(const std::vector<int>& Ms) { return Ms[Ms.size() / 2]; }

inline void check_sweep_list(const std::vector<int>& Ms) {
  if (Ms.size() < 2) throw InvalidArgument("sweep: need at least two values of M");
  for (size_t i = 1; i < Ms.size(); ++i)
    if (Ms[i] <= Ms[i - 1]) throw InvalidArgument("sweep: M list must be ascending");
  if (Ms[0] < 1) throw InvalidArgument("sweep: M must be >= 1");
}
}  // namespace detail

// Rows evaluated at the analytic t_opt. fit_from <= 0 selects the top half.
inline SweepResult transverse_sweep(const std::vector<int>& Ms, double w, double g, int fit_from = 0, int jobs = 1) {
  detail::check_sweep_list(Ms);
  if (!(g > 0) || !(w > 0)) throw InvalidArgument("transverse_sweep: omega and gamma must be positive");
  SweepResult r;
  r.rows = parallel_map(Ms.size(), jobs, [&](size_t i) {
    const int M = Ms[i];
    const double t = t_opt(M, w, g);
    const auto q = sector_qfi_avg(M, w, g, t);
    return SweepRow{M, t, q.qfi, q.coh_curv, t / q.qfi, t / q.coh_curv, transverse_bound(M, w, g)};
  });
  detail::fit_rows(r, fit_from > 0 ? fit_from : detail::top_half_start(Ms));
  return r;
}

// ---------------------------------------------------------------- parallel noise

inline CMatrix parallel_tau(int M, double w, double g, double t) {
  const cplx c = 0.5 * std::exp(cplx(-M * g * t, -M * w * t));
  CMatrix m(2, 2);
  m << 0.5, c, std::conj(c), 0.5;
  return m;
}

inline StateFamily parallel_family(int M, double g, double t) {
  if (M < 1 || !(g >= 0) || !(t >= 0)) throw InvalidArgument("parallel_family: bad arguments");
  return StateFamily::general([=](double w) { return parallel_tau(M, w, g, t); });
}

inline double parallel_qfi_closed(int M, double g, double t) { return double(M) * M * t * t * std::exp(-2.0 * M * g * t); }

// Bloch vector of a {k, ~k} block in the qubit frame where the initial
// state is +z and the generator rotates about x: (x, y, z) -> (-z, y, x).
inline std::array<double, 3> qubit_frame_bloch(const CMatrix& blk) {
  const double tr = blk.trace().real();
  const double x = 2 * blk(0, 1).real() / tr, y = -2 * blk(0, 1).imag() / tr;
  const double z = (blk(0, 0).real() - blk(1, 1).real()) / tr;
  return {-z, y, x};
}

struct ParallelRate {
  int M;
  double t_best, rate;     // numeric max_t QFI/t
  double rate_closed;      // M / (2 g e)
  double coh_rate;         // -d^2 Coh / t at t_best, SLD basis
};

inline ParallelRate parallel_max_rate(int M, double w, double g) {
  const double h = 1e-3 * w;
  auto rate = [&](double t) { return qfi_at(parallel_family(M, g, t), w, h) / t; };
  const double tc = 1.0 / (2.0 * M * g);
  const double tb = golden_max(rate, 0.05 * tc, 10 * tc, 1e-8);
  const auto fam = parallel_family(M, g, tb);
  const CMatrix r = fam(w);
  const double cc = coherence_curvature(fam, sld_basis(sld(r, family_derivative(fam, w, h))), w, h).curvature;
  return {M, tb, rate(tb), M / (2.0 * g * std::exp(1.0)), cc / tb};
}

struct ParallelSweep {
  std::vector<ParallelRate> rows;
  double slope = 0;  // d ln max_t(QFI/t) / d ln M
};

inline ParallelSweep parallel_sweep(const std::vector<int>& Ms, double w, double g, int jobs = 1) {
  detail::check_sweep_list(Ms);
  if (!(g > 0) || !(w > 0)) throw InvalidArgument("parallel_sweep: omega and gamma must be positive");
  ParallelSweep s;
  s.rows = parallel_map(Ms.size(), jobs, [&](size_t i) { return parallel_max_rate(Ms[i], w, g); });
  std::vector<double> x, y;
  for (const auto& row : s.rows) {
    x.push_back(std::log(double(row.M)));
    y.push_back(std::log(row.rate));
  }
  s.slope = least_squares_slope(x, y);
  return s;
}

// ---------------------------------------------------------------- ODE integration

namespace detail {

using OdeState = std::vector<double>;

template <class Rhs>
void integrate(Rhs&& rhs, OdeState& x, double t, const char* who) {
  if (t <= 0) return;
  namespace odeint = boost::numeric::odeint;
  auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<OdeState>>(1e-14, 1e-12);
  size_t steps = 0;
  try {
    odeint::integrate_adaptive(stepper, rhs, x, 0.0, t, std::min(1e-3, t),
                               [&](const OdeState&, double) {
                                 if (++steps > 5'000'000) throw StiffnessFailure(std::string(who) + ": step budget exhausted");
                               });
  } catch (const Error&) {
    throw;
  } catch (const std::exception& ex) {
    throw StiffnessFailure(std::string(who) + ": " + ex.what());
  }
}

// 2x2 complex blocks packed as 8 doubles: (00, 01, 10, 11) re/im.
struct Blk {
  cplx m[4];
};
inline Blk load(const OdeState& x, size_t i) {
  Blk b;
  for (int q = 0; q < 4; ++q) b.m[q] = {x[8 * i + 2 * q], x[8 * i + 2 * q + 1]};
  return b;
}
inline void store_add(OdeState& dx, size_t i, int q, cplx v) {
  dx[8 * i + 2 * q] += v.real();
  dx[8 * i + 2 * q + 1] += v.imag();
}

// Contribution of a neighbor block under the three Pauli maps: identity,
// sigma_z conjugation (flips off-diagonal sign), X conjugation (swap).
inline Blk zconj(const Blk& b) { return {{b.m[0], -b.m[1], -b.m[2], b.m[3]}}; }
inline Blk xconj(const Blk& b) { return {{b.m[3], b.m[2], b.m[1], b.m[0]}}; }

inline CMatrix to_mat(const Blk& b) {
  CMatrix m(2, 2);
  m << b.m[0], b.m[1], b.m[2], b.m[3];
  return m;
}

}  // namespace detail

// Class-total blocks w_j obey
//   dw_j = -i w/2 (M-2j)[s_z, w_j] - g/2 [ M w_j
//          - ax ((M-j) w_{j-1} + (j+1) w_{j+1} + X w_{M-1-j} X)
//          - ay ((M-j) Z w_{j-1} Z + (j+1) Z w_{j+1} Z + XZ w_{M-1-j} ZX)
//          - az M Z w_j Z ].
inline SectorEnsemble sector_ode_evolve(int M, const NoiseParams& p, double t) {
  p.validate();
  if (M < 1) throw InvalidArgument("sector_ode_evolve: M must be >= 1");
  if (!(t >= 0)) throw InvalidArgument("sector_ode_evolve: t must be >= 0");
  using namespace detail;
  OdeState x(8 * M, 0.0);
  for (int q = 0; q < 4; ++q) x[2 * q] = 0.5;
  auto rhs = [&](const OdeState& s, OdeState& dx, double) {
    std::fill(dx.begin(), dx.end(), 0.0);
    const double hg = p.gamma / 2;
    for (int j = 0; j < M; ++j) {
      const Blk u = load(s, j);
      const double e = p.omega / 2 * (M - 2.0 * j);
      // -i e [Z, u]: off-diagonals pick up -2ie and +2ie.
      store_add(dx, j, 1, cplx(0, -2 * e) * u.m[1]);
      store_add(dx, j, 2, cplx(0, 2 * e) * u.m[2]);
      Blk acc{{0, 0, 0, 0}};
      auto add = [&](const Blk& b, double c) {
        for (int q = 0; q < 4; ++q) acc.m[q] += c * b.m[q];
      };
      add(u, -double(M));
      if (j > 0) {
        const Blk v = load(s, j - 1);
        add(v, p.ax * (M - j));
        add(zconj(v), p.ay * (M - j));
      }
      if (j < M - 1) {
        const Blk v = load(s, j + 1);
        add(v, p.ax * (j + 1));
        add(zconj(v), p.ay * (j + 1));
      }
      const Blk fl = xconj(load(s, M - 1 - j));
      add(fl, p.ax);
      add(xconj(zconj(load(s, M - 1 - j))), p.ay);
      add(zconj(u), p.az * M);
      for (int q = 0; q < 4; ++q) store_add(dx, j, q, hg * acc.m[q]);
    }
  };
  integrate(rhs, x, t, "sector_ode_evolve");
  SectorEnsemble e;
  e.M = M;
  double tr = 0;
  for (int j = 0; j < M; ++j) {
    CMatrix w = to_mat(load(x, j));
    w = (w + w.adjoint()) * 0.5;
    e.totals.push_back(w);
    SectorClass c;
    c.j = j;
    c.log_mult = log_binom(M - 1, j);
    c.weight = w.trace().real();
    c.log2r = std::log(std::max(c.weight, 1e-300)) - c.log_mult;
    c.coh = c.weight > 0 ? w(0, 1) / c.weight : cplx(0);
    if (c.weight < 1e-300) e.underflow = true;
    e.classes.push_back(c);
    tr += c.weight;
  }
  if (std::abs(tr - 1.0) > 1e-8) throw InvariantFailure("sector_ode_evolve: trace drifted beyond 1e-8");
  return e;
}

inline constexpr int kMaxEnumerationM = 16;

// Per-sector blocks u_k for all 2^{M-1} sectors, without using the
// permutation symmetry.
inline std::vector<CMatrix> sector_enumeration_evolve(int M, const NoiseParams& p, double t) {
  p.validate();
  if (M < 1 || M > kMaxEnumerationM) throw DimTooLarge("sector_enumeration_evolve: M must be in [1, 16]");
  using namespace detail;
  const size_t K = size_t{1} << (M - 1);
  OdeState x(8 * K, 0.0);
  for (int q = 0; q < 4; ++q) x[2 * q] = 0.5;
  auto rhs = [&](const OdeState& s, OdeState& dx, double) {
    std::fill(dx.begin(), dx.end(), 0.0);
    const double hg = p.gamma / 2;
    for (size_t k = 0; k < K; ++k) {
      const Blk u = load(s, k);
      const double e = p.omega / 2 * (M - 2.0 * std::popcount(k));
      store_add(dx, k, 1, cplx(0, -2 * e) * u.m[1]);
      store_add(dx, k, 2, cplx(0, 2 * e) * u.m[2]);
      Blk acc{{0, 0, 0, 0}};
      auto add = [&](const Blk& b, double c) {
        for (int q = 0; q < 4; ++q) acc.m[q] += c * b.m[q];
      };
      add(u, -double(M));
      for (int h = 0; h < M - 1; ++h) {
        const Blk v = load(s, k ^ (size_t{1} << h));
        add(v, p.ax);
        add(zconj(v), p.ay);
      }
      const Blk v = load(s, k ^ (K - 1));
      add(xconj(v), p.ax);
      add(xconj(zconj(v)), p.ay);
      add(zconj(u), p.az * M);
      for (int q = 0; q < 4; ++q) store_add(dx, k, q, hg * acc.m[q]);
    }
  };
  integrate(rhs, x, t, "sector_enumeration_evolve");
  std::vector<CMatrix> out(K);
  for (size_t k = 0; k < K; ++k) out[k] = to_mat(load(x, k));
  return out;
}

inline constexpr int kMaxDenseM = 10;

// Dense master-equation integration in the computational basis (bit h-1 of
// the index is qubit h). Starts from GHZ+ unless rho0 is given.
inline CMatrix dense_lindblad_evolve(int M, const NoiseParams& p, double t, const CMatrix* rho0 = nullptr) {
  p.validate();
  if (M < 1 || M > kMaxDenseM) throw DimTooLarge("dense_lindblad_evolve: M must be in [1, 10]");
  const size_t n = size_t{1} << M;
  detail::OdeState x(2 * n * n, 0.0);
  CMatrix r0 = rho0 ? *rho0 : CMatrix(ghz_vector(M, 0, +1) * ghz_vector(M, 0, +1).adjoint());
  if (static_cast<size_t>(r0.rows()) != n) throw DimMismatch("dense_lindblad_evolve: rho0 dimension");
  auto idx = [n](size_t a, size_t b) { return 2 * (a * n + b); };
  for (size_t a = 0; a < n; ++a)
    for (size_t b = 0; b < n; ++b) x[idx(a, b)] = r0(a, b).real(), x[idx(a, b) + 1] = r0(a, b).imag();
  std::vector<double> g(n);
  for (size_t a = 0; a < n; ++a) g[a] = M - 2.0 * std::popcount(a);
  auto rhs = [&](const detail::OdeState& s, detail::OdeState& dx, double) {
    const double hg = p.gamma / 2;
    for (size_t a = 0; a < n; ++a)
      for (size_t b = 0; b < n; ++b) {
        const cplx r(s[idx(a, b)], s[idx(a, b) + 1]);
        cplx d = cplx(0, -p.omega / 2 * (g[a] - g[b])) * r - hg * double(M) * r;
        for (int h = 0; h < M; ++h) {
          const size_t m = size_t{1} << h;
          const bool same = ((a >> h) & 1) == ((b >> h) & 1);
          const cplx rf(s[idx(a ^ m, b ^ m)], s[idx(a ^ m, b ^ m) + 1]);
          d += hg * (p.ax * rf + p.ay * (same ? rf : -rf) + p.az * (same ? r : -r));
        }
        dx[idx(a, b)] = d.real();
        dx[idx(a, b) + 1] = d.imag();
      }
  };
  detail::integrate(rhs, x, t, "dense_lindblad_evolve");
  CMatrix out(n, n);
  for (size_t a = 0; a < n; ++a)
    for (size_t b = 0; b < n; ++b) out(a, b) = {x[idx(a, b)], x[idx(a, b) + 1]};
  return out;
}

// Block of sector k read from a dense matrix.
inline CMatrix dense_sector_block(const CMatrix& rho, int M, size_t k) {
  const size_t kb = k ^ ((size_t{1} << M) - 1);
  CMatrix b(2, 2);
  b << rho(k, k), rho(k, kb), rho(kb, k), rho(kb, kb);
  return b;
}

// ---------------------------------------------------------------- ansatz diagnostic

struct AnsatzRow {
  int j;
  double weight;
  double dev;  // angle between evolved and ansatz Bloch directions (rad)
};

struct AnsatzReport {
  std::vector<AnsatzRow> rows;
  double median = 0;
};

inline AnsatzReport ansatz_check(int M, double w, double g, double t) {
  const auto e = sector_ode_evolve(M, NoiseParams::transverse(w, g), t);
  AnsatzReport rep;
  for (const auto& c : e.classes) {
    if (c.weight < 1e-3) continue;
    const auto b = qubit_frame_bloch(e.totals[c.j]);
    const double nb = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
    const double m = std::max(c.j, M - c.j);
    const double ang = (m - 1) * w * t;
    double cosang = nb > 0 ? (b[1] * std::sin(ang) + b[2] * std::cos(ang)) / nb : 1.0;
    rep.rows.push_back({c.j, c.weight, std::acos(std::clamp(cosang, -1.0, 1.0))});
  }
  std::vector<double> d;
  for (const auto& r : rep.rows) d.push_back(r.dev);
  if (!d.empty()) {
    std::sort(d.begin(), d.end());
    rep.median = d.size() % 2 ? d[d.size() / 2] : (d[d.size() / 2 - 1] + d[d.size() / 2]) / 2;
  }
  return rep;
}

// ---------------------------------------------------------------- reduced qubit

// xi = sum_j mult_j * block_j = [[1/2, S], [S*, 1/2]] in the {k, ~k} basis.
inline CMatrix reduced_xi(int M, double w, double g, double t) {
  const auto e = ghz_noisy_state(M, w, g, t);
  cplx S = 0;
  for (const auto& c : e.classes) S += c.weight * c.coh;
  CMatrix xi(2, 2);
  xi << 0.5, S, std::conj(S), 0.5;
  return xi;
}

struct ReducedQubit {
  CMatrix xi;
  double qfi_xi = 0;
  double coh_curv_xi = 0;
  double fi2 = 0;  // measurement in the sigma_y eigenbasis, the SLD basis at t = 0
};

inline ReducedQubit reduced_qubit_noisy(int M, double w, double g, double t, double h = 0) {
  if (h <= 0) h = 1e-3 * w;
  ReducedQubit r;
  const auto fam = StateFamily::general([=](double ww) { return reduced_xi(M, ww, g, t); });
  r.xi = fam(w);
  if (t == 0) return r;
  const auto s = sld(r.xi, family_derivative(fam, w, h));
  r.qfi_xi = qfi_trace(r.xi, s);
  r.coh_curv_xi = coherence_curvature(fam, sld_basis(s), w, h).curvature;
  r.fi2 = fisher_info(fam, MeasBasis{eigh(pauli::y()).vectors}, w, h);
  return r;
}

inline SweepResult reduced_sweep(const std::vector<int>& Ms, double w, double g, int fit_from = 0) {
  detail::check_sweep_list(Ms);
  SweepResult r;
  for (int M : Ms) {
    const double t = t_opt(M, w, g);
    const auto q = reduced_qubit_noisy(M, w, g, t);
    r.rows.push_back({M, t, q.qfi_xi, q.coh_curv_xi, t / q.qfi_xi, t / q.coh_curv_xi, transverse_bound(M, w, g)});
  }
  detail::fit_rows(r, fit_from > 0 ? fit_from : detail::top_half_start(Ms));
  return r;
}

}  // namespace qmetro
