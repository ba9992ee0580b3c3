#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace qmetro;

namespace {

// Row-major vectorization: vec(A rho B) = (A kron B^T) vec(rho).
CMatrix liouvillian(int M, const NoiseParams& p) {
  const Eigen::Index n = Eigen::Index(1) << M;
  const CMatrix I = CMatrix::Identity(n, n);
  auto site = [&](const CMatrix& s, int h) {
    CMatrix o = CMatrix::Identity(1, 1);
    for (int q = M - 1; q >= 0; --q) o = kron(o, q == h ? s : pauli::id());
    return o;
  };
  CMatrix H = CMatrix::Zero(n, n);
  for (int h = 0; h < M; ++h) H += 0.5 * p.omega * site(pauli::z(), h);
  CMatrix L = -I_unit * (kron(H, I) - kron(I, H.transpose()));
  L -= 0.5 * p.gamma * M * kron(I, I);
  for (int h = 0; h < M; ++h) {
    const std::array<std::pair<double, CMatrix>, 3> terms{
        {{p.ax, pauli::x()}, {p.ay, pauli::y()}, {p.az, pauli::z()}}};
    for (const auto& [a, s] : terms)
      if (a != 0) {
        const CMatrix sh = site(s, h);
        L += 0.5 * p.gamma * a * kron(sh, sh.transpose());
      }
  }
  return L;
}

// exp(tL) rho by scaling and squaring of a Taylor series.
CMatrix evolve_exact(int M, const NoiseParams& p, double t, const CMatrix& rho) {
  const CMatrix L = liouvillian(M, p) * t;
  int s = 0;
  double nrm = L.cwiseAbs().rowwise().sum().maxCoeff();
  while (nrm > 0.5) nrm /= 2, ++s;
  const CMatrix A = L / std::pow(2.0, s);
  CMatrix term = CMatrix::Identity(A.rows(), A.cols()), E = term;
  for (int k = 1; k < 30; ++k) {
    term = term * A / double(k);
    E += term;
  }
  for (int i = 0; i < s; ++i) E = E * E;
  const Eigen::Index n = rho.rows();
  CVector v(n * n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) v(a * n + b) = rho(a, b);
  const CVector w = E * v;
  CMatrix out(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) out(a, b) = w(a * n + b);
  return out;
}

CMatrix ghz0(int M) { return ghz_vector(M, 0, +1) * ghz_vector(M, 0, +1).adjoint(); }

// Dense block-diagonal state from the closed-form class records.
CMatrix embed(const SectorEnsemble& e) {
  const int M = e.M;
  const size_t n = size_t{1} << M;
  CMatrix rho = CMatrix::Zero(n, n);
  for (size_t k = 0; k < n / 2; ++k) {
    const auto& c = e.classes[std::popcount(k)];
    const double r = std::exp(c.log2r) / 2;
    const size_t kb = k ^ (n - 1);
    rho(k, k) = rho(kb, kb) = r;
    rho(k, kb) = 2 * r * c.coh;
    rho(kb, k) = std::conj(rho(k, kb));
  }
  return rho;
}

}  // namespace

TEST(Kraus, InitialAndUnitaryLimits) {
  const auto k0 = kraus_coeffs(1.0, 1.0, 0.0);
  EXPECT_EQ(k0.a, 1.0);
  EXPECT_EQ(k0.b, 1.0);
  EXPECT_EQ(k0.c, 0.0);
  EXPECT_EQ(k0.d, 0.0);
  EXPECT_EQ(k0.f, 0.0);
  const auto u = kraus_coeffs(1.0, 0.0, M_PI / 2);
  EXPECT_NEAR(u.a, 1, 1e-15);
  EXPECT_NEAR(u.b, 0, 1e-15);
  EXPECT_NEAR(u.c, 1, 1e-15);
  EXPECT_EQ(u.d, 0);
  EXPECT_EQ(u.f, 0);
}

TEST(Kraus, MatchesSingleQubitLiouvillian) {
  // (omega, gamma, t): underdamped, overdamped and critical regimes
  for (auto [w, g, t] : std::vector<std::array<double, 3>>{{1, 1, 0.3}, {0.2, 1.5, 0.7}, {0.5, 1.0, 1.3}, {2, 0.1, 2.0}}) {
    const NoiseParams p = NoiseParams::transverse(w, g);
    const auto k = kraus_coeffs(w, g, t);
    CMatrix r00 = CMatrix::Zero(2, 2), r01 = CMatrix::Zero(2, 2);
    r00(0, 0) = 1;
    r01(0, 1) = 1;
    const CMatrix e00 = evolve_exact(1, p, t, r00), e01 = evolve_exact(1, p, t, r01);
    EXPECT_NEAR(e00(0, 0).real(), k.a, 1e-12);
    EXPECT_NEAR(e00(1, 1).real(), k.d, 1e-12);
    EXPECT_NEAR(e01(0, 1).real(), k.b, 1e-12);
    EXPECT_NEAR(e01(0, 1).imag(), -k.c, 1e-12);
    EXPECT_NEAR(e01(1, 0).real(), k.f, 1e-12);
    EXPECT_NEAR(k.a + k.d, 1.0, 1e-15);
  }
}

TEST(NoisyState, InitialState) {
  const auto e = ghz_noisy_state(5, 1, 1, 0);
  EXPECT_NEAR(e.classes[0].weight, 1.0, 1e-15);
  EXPECT_NEAR(e.classes[0].coh.real(), 0.5, 1e-15);
  for (int j = 1; j < 5; ++j) EXPECT_EQ(e.classes[j].weight, 0.0);
}

TEST(NoisyState, MatchesExactEvolution) {
  for (int M : {2, 3}) {
    const auto p = NoiseParams::transverse(1, 1);
    const CMatrix exact = evolve_exact(M, p, 0.2, ghz0(M));
    EXPECT_LT(max_abs(embed(ghz_noisy_state(M, 1, 1, 0.2)) - exact), 1e-12) << M;
    EXPECT_LT(max_abs(dense_lindblad_evolve(M, p, 0.2) - exact), 1e-9) << M;
  }
}

TEST(NoisyState, LargeMNormalizationAndUnderflow) {
  const auto e = ghz_noisy_state(100, 1, 1, t_opt(100, 1, 1));
  EXPECT_EQ(e.classes.size(), 100u);
  EXPECT_NEAR(e.norm(), 1.0, 1e-9);
  const auto big = ghz_noisy_state(3000, 1, 1, 0.5);
  EXPECT_TRUE(big.underflow);
  EXPECT_NEAR(big.norm(), 1.0, 1e-9);
  for (const auto& c : big.classes) EXPECT_LE(std::abs(c.coh), 0.5 + 1e-12);
}

TEST(NoisyStateProperty, WeightsIndependentOfOmega) {
  const auto a = ghz_noisy_state(20, 1.0, 1.0, 0.4), b = ghz_noisy_state(20, 1.001, 1.0, 0.4);
  for (int j = 0; j < 20; ++j) EXPECT_NEAR(a.classes[j].weight, b.classes[j].weight, 1e-12);
}

TEST(SectorQfi, NoiselessLimit) {
  for (int M : {1, 4, 9}) {
    const double t = 0.37;
    EXPECT_LT(qtest::rel(sector_qfi_avg(M, 1.0, 0.0, t).qfi, double(M) * M * t * t), 1e-8) << M;
  }
}

TEST(SectorQfi, MatchesFullSpaceQfi) {
  const int M = 6;
  const double t = t_opt(M, 1, 1);
  const auto fam = StateFamily::general([&](double w) { return embed(ghz_noisy_state(M, w, 1, t)); });
  const double full = qfi_at(fam, 1.0, 1e-3);
  EXPECT_LT(std::abs(sector_qfi_avg(M, 1, 1, t).qfi - full), 1e-4 * full);
}

TEST(SectorQfi, CoherenceCurvatureTracksQfi) {
  const int M = 50;
  const auto q = sector_qfi_avg(M, 1, 1, t_opt(M, 1, 1));
  EXPECT_LT(std::abs(q.qfi - q.coh_curv) / q.qfi, 0.05);
  double wsum = 0;
  for (const auto& row : q.table) wsum += row.weight;
  EXPECT_NEAR(wsum, 1.0, 1e-9);
}

TEST(TOpt, ClosedAndNumeric) {
  EXPECT_NEAR(t_opt(3, 1, 1), 1.0, 1e-15);
  EXPECT_NEAR(t_opt(24, 1, 1), 0.5, 1e-15);
  const double tn = t_opt_numeric(50, 1, 1);
  EXPECT_LT(std::abs(tn - t_opt(50, 1, 1)) / t_opt(50, 1, 1), 0.25);
  EXPECT_THROW(t_opt(10, 1, 0), InvalidArgument);
}

TEST(Sweep, GuardsAndColumns) {
  EXPECT_THROW(transverse_sweep({10, 20}, 1, 0), InvalidArgument);
  EXPECT_THROW(transverse_sweep({10}, 1, 1), InvalidArgument);
  const auto s = transverse_sweep({10, 20, 30, 40}, 1, 1);
  ASSERT_EQ(s.rows.size(), 4u);
  for (const auto& r : s.rows) {
    EXPECT_NEAR(r.inv_qfi_rate, r.t / r.qfi, 0);
    EXPECT_NEAR(r.bound, std::cbrt(9.0 / 8.0) * std::pow(r.M, -5.0 / 3.0), 1e-15);
    EXPECT_GT(r.inv_qfi_rate, r.bound);
  }
  EXPECT_LT(s.slope, -1.0);
}

TEST(Parallel, ClosedFormAndDense) {
  EXPECT_LT(qtest::rel(qfi_at(parallel_family(5, 0.0, 0.3), 1.0, 1e-3), 25 * 0.09), 1e-9);
  const int M = 4;
  const double t = 0.1;
  const auto p = NoiseParams::parallel(1, 1);
  const CMatrix rho = dense_lindblad_evolve(M, p, t);
  const CMatrix blk = dense_sector_block(rho, M, 0);
  EXPECT_LT(max_abs(blk - parallel_tau(M, 1, 1, t)), 1e-6);
  const auto b = qubit_frame_bloch(blk);
  EXPECT_NEAR(b[0], 0, 1e-6);
  EXPECT_NEAR(b[1], std::exp(-M * t) * std::sin(M * t), 1e-6);
  EXPECT_NEAR(b[2], std::exp(-M * t) * std::cos(M * t), 1e-6);
  EXPECT_LT(qtest::rel(qfi_at(parallel_family(M, 1, t), 1.0, 1e-3), parallel_qfi_closed(M, 1, t)), 1e-6);
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-10);
  EXPECT_NEAR(std::abs(rho(0, 0)) + std::abs(rho(15, 15)), 1.0, 1e-10);
}

TEST(Parallel, MaxRate) {
  const auto r = parallel_max_rate(20, 1, 1);
  EXPECT_LT(qtest::rel(r.rate, r.rate_closed), 1e-6);
  EXPECT_NEAR(r.t_best, 1.0 / 40, 1e-5);
}

TEST(SectorOde, MatchesClosedForm) {
  const int M = 6;
  const auto ode = sector_ode_evolve(M, NoiseParams::transverse(1, 1), 0.4);
  const auto cf = ghz_noisy_state(M, 1, 1, 0.4);
  for (int j = 0; j < M; ++j) {
    EXPECT_NEAR(ode.classes[j].weight, cf.classes[j].weight, 1e-6);
    EXPECT_LT(std::abs(ode.totals[j](0, 1) - cf.classes[j].weight * cf.classes[j].coh), 1e-6);
  }
  const auto t0 = sector_ode_evolve(M, NoiseParams::transverse(1, 1), 0.0);
  EXPECT_NEAR(t0.classes[0].weight, 1.0, 0);
}

TEST(SectorOde, LargeMAgainstClosedForm) {
  const int M = 200;
  const double t = t_opt(M, 1, 1);
  const auto ode = sector_ode_evolve(M, NoiseParams::transverse(1, 1), t);
  const auto cf = ghz_noisy_state(M, 1, 1, t);
  double worst = 0;
  for (int j = 0; j < M; ++j) {
    worst = std::max(worst, std::abs(ode.classes[j].weight - cf.classes[j].weight));
    worst = std::max(worst, std::abs(ode.totals[j](0, 1) - cf.classes[j].weight * cf.classes[j].coh));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(SectorOde, AggregationMatchesEnumeration) {
  const int M = 6;
  for (const NoiseParams& p : {NoiseParams::transverse(1, 1), NoiseParams{0.7, 1.2, 0.5, 0.3, 0.2}}) {
    const auto agg = sector_ode_evolve(M, p, 0.4);
    const auto all = sector_enumeration_evolve(M, p, 0.4);
    std::vector<CMatrix> sum(M, CMatrix::Zero(2, 2));
    for (size_t k = 0; k < all.size(); ++k) sum[std::popcount(k)] += all[k];
    for (int j = 0; j < M; ++j) EXPECT_LT(max_abs(sum[j] - agg.totals[j]), 1e-10);
  }
}

TEST(SectorOde, EnumerationMatchesExactEvolution) {
  const int M = 3;
  const NoiseParams p{0.9, 0.8, 0.5, 0.3, 0.2};
  const CMatrix exact = evolve_exact(M, p, 0.5, ghz0(M));
  const auto all = sector_enumeration_evolve(M, p, 0.5);
  for (size_t k = 0; k < all.size(); ++k) EXPECT_LT(max_abs(all[k] - dense_sector_block(exact, M, k)), 1e-9);
  EXPECT_LT(max_abs(dense_lindblad_evolve(M, p, 0.5) - exact), 1e-9);
}

TEST(Ansatz, Diagnostic) {
  for (const auto& r : ansatz_check(5, 1, 1, 0).rows) EXPECT_NEAR(r.dev, 0, 1e-12);
  const auto rep = ansatz_check(20, 1, 1, t_opt(20, 1, 1));
  EXPECT_FALSE(rep.rows.empty());
  EXPECT_TRUE(std::isfinite(rep.median));
}

TEST(ReducedQubit, ClosedFormAndBounds) {
  const auto r0 = reduced_qubit_noisy(8, 1, 1, 0);
  const auto b0 = qubit_frame_bloch(r0.xi);
  EXPECT_NEAR(b0[2], 1, 1e-15);
  EXPECT_EQ(r0.qfi_xi, 0.0);

  const int M = 8;
  const double t = t_opt(M, 1, 1);
  const auto k = kraus_coeffs(1, 1, t);
  const cplx u(k.b, -k.c);
  const cplx S = 0.5 * (u * std::pow(u + k.f, M - 1) + k.f * std::pow(k.f + std::conj(u), M - 1));
  const auto r = reduced_qubit_noisy(M, 1, 1, t);
  EXPECT_LT(std::abs(r.xi(0, 1) - S), 1e-12);
  const double q = sector_qfi_avg(M, 1, 1, t).qfi;
  EXPECT_LE(r.qfi_xi, q + 1e-6);
  EXPECT_LE(r.fi2, r.qfi_xi + 1e-6);
  EXPECT_GT(r.fi2, 0.0);
}
