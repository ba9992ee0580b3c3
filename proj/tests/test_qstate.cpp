#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace qmetro;

namespace {

CMatrix bloch(double x, double y, double z) {
  return 0.5 * (pauli::id() + x * pauli::x() + y * pauli::y() + z * pauli::z());
}

double binary_entropy(double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); }

}  // namespace

TEST(Probs, TrivialCases) {
  CMatrix r0 = CMatrix::Zero(3, 3);
  r0(0, 0) = 1;
  const auto p = probs(r0, MeasBasis::computational(3));
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], 0.0);
  std::mt19937_64 rng(7);
  const MeasBasis B{unitary_from_generator(qtest::random_hermitian(rng, 4), 1.0)};
  for (double x : probs(CMatrix::Identity(4, 4) / 4.0, B)) EXPECT_NEAR(x, 0.25, 1e-14);
}

TEST(Probs, SigmaYBasisOfZState) {
  const auto p = probs(bloch(0, 0, 0.8), MeasBasis{eigh(pauli::y()).vectors});
  EXPECT_NEAR(p[0], 0.5, 1e-14);
  EXPECT_NEAR(p[1], 0.5, 1e-14);
}

TEST(Probs, DimensionMismatch) {
  EXPECT_THROW(probs(CMatrix::Identity(2, 2) / 2.0, MeasBasis::computational(3)), DimMismatch);
}

TEST(VonNeumann, KnownValues) {
  CMatrix p = CMatrix::Zero(2, 2);
  p(1, 1) = 1;
  EXPECT_EQ(von_neumann(p), 0.0);
  EXPECT_NEAR(von_neumann(CMatrix::Identity(2, 2) / 2.0), std::log(2.0), 1e-14);
  CMatrix d = CMatrix::Zero(4, 4);
  d.diagonal() << 0.4, 0.3, 0.2, 0.1;
  EXPECT_NEAR(von_neumann(d), xlogx_sum({0.4, 0.3, 0.2, 0.1}), 1e-14);
}

TEST(Coherence, KnownValues) {
  CMatrix d = CMatrix::Zero(3, 3);
  d.diagonal() << 0.5, 0.3, 0.2;
  EXPECT_NEAR(coherence(d, MeasBasis::computational(3)), 0.0, 1e-14);
  EXPECT_NEAR(coherence(bloch(1, 0, 0), MeasBasis::computational(2)), std::log(2.0), 1e-14);
  const double want = std::log(2.0) - binary_entropy(0.9);
  EXPECT_NEAR(binary_entropy(0.9), 0.3250829733914482, 1e-15);
  EXPECT_NEAR(coherence(bloch(0, 0, 0.8), MeasBasis{eigh(pauli::x()).vectors}), want, 1e-13);
}

TEST(CoherenceProperty, NonnegativeAndBasisPhaseInvariant) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 2 * M_PI);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 5;
    const CMatrix r = qtest::random_real_state(rng, n);
    CMatrix B = unitary_from_generator(qtest::random_hermitian(rng, n), 1.0);
    const double c = coherence(r, MeasBasis{B});
    EXPECT_GE(c, -1e-9);
    for (int k = 0; k < n; ++k) B.col(k) *= std::exp(I_unit * u(rng));
    Eigen::PermutationMatrix<Eigen::Dynamic> P(n);
    P.setIdentity();
    std::shuffle(P.indices().data(), P.indices().data() + n, rng);
    B = B * P;
    EXPECT_NEAR(coherence(r, MeasBasis{B}), c, 1e-12);
  }
}

TEST(Validation, WrappersRejectBadInput) {
  CMatrix bad = CMatrix::Identity(2, 2);
  EXPECT_THROW(DensityMatrix::checked(bad), NotNormalized);
  CMatrix neg = CMatrix::Zero(2, 2);
  neg.diagonal() << 1.5, -0.5;
  EXPECT_THROW(DensityMatrix::checked(neg), InvalidArgument);
  CVector v(2);
  v << 1, 1;
  EXPECT_THROW(PureState::checked(v), NotNormalized);
  EXPECT_THROW(MeasBasis::checked(CMatrix::Ones(2, 2)), InvalidArgument);
  EXPECT_NO_THROW(DensityMatrix::checked(bloch(0.3, 0.2, 0.1)));
}
