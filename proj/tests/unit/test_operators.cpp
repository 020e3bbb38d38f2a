#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "skrock/error.hpp"
#include "skrock/operators.hpp"

using namespace skrock;

namespace {

void adjoint_test(const LinearOperator& op, std::uint64_t seed, int pairs = 50) {
  std::mt19937_64 rng(seed);
  for (int t = 0; t < pairs; ++t) {
    const Vector x = oracle::random_vector(op.input_size(), rng);
    const Vector y = oracle::random_vector(op.output_size(), rng);
    const double lhs = op.apply(x).dot(y);
    const double rhs = x.dot(op.apply_adjoint(y));
    EXPECT_NEAR(lhs, rhs, 1e-8 * std::max(1.0, std::abs(lhs)));
  }
}

void norm_bound_test(const LinearOperator& op, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int t = 0; t < 50; ++t) {
    const Vector x = oracle::random_vector(op.input_size(), rng);
    EXPECT_LE(op.apply(x).squaredNorm(), op.operator_norm_sq() * x.squaredNorm() * (1 + 1e-10));
  }
}

}  // namespace

TEST(Blur, IdentityKernel) {
  auto op = make_blur(Matrix::Ones(1, 1), 6, 5);
  std::mt19937_64 rng(1);
  const Vector x = oracle::random_vector(30, rng);
  EXPECT_LT((op->apply(x) - x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(op->operator_norm_sq(), 1.0, 1e-12);
}

TEST(Blur, UniformKernelNormAndConstantImage) {
  auto op = make_blur(uniform_kernel(5), 16, 16);
  EXPECT_NEAR(op->operator_norm_sq(), 1.0, 1e-12);
  const Vector c = Vector::Constant(256, 3.5);
  EXPECT_LT((op->apply(c) - c).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Blur, RejectsBadKernels) {
  EXPECT_THROW(make_blur(Matrix::Ones(4, 4), 8, 8), InvalidArgument);
  EXPECT_THROW(make_blur(Matrix::Ones(3, 2), 8, 8), InvalidArgument);
  EXPECT_THROW(make_blur(Matrix::Ones(9, 9), 8, 8), InvalidArgument);
}

TEST(Blur, MatchesSpatialConvolution) {
  std::mt19937_64 rng(2);
  const Matrix k = Eigen::Map<Matrix>(oracle::random_vector(9, rng).data(), 3, 3);
  auto op = make_blur(k, 8, 8);
  for (int t = 0; t < 5; ++t) {
    const Matrix x = Eigen::Map<Matrix>(oracle::random_vector(64, rng).data(), 8, 8);
    const Matrix ref = oracle::circular_convolve(x, k);
    const Vector got = op->apply(Eigen::Map<const Vector>(x.data(), 64));
    EXPECT_LT((got - Eigen::Map<const Vector>(ref.data(), 64)).cwiseAbs().maxCoeff(), 1e-10);
  }
  adjoint_test(*op, 3);
  norm_bound_test(*op, 4);
}

TEST(Blur, NormalEqualsAdjointOfApply) {
  std::mt19937_64 rng(5);
  auto op = make_blur(uniform_kernel(3), 10, 12);
  const Vector x = oracle::random_vector(120, rng);
  Vector out(120);
  op->apply_normal(x, out);
  EXPECT_LT((out - op->apply_adjoint(op->apply(x))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FourierMask, FullMaskIsUnitary) {
  auto op = make_fourier_mask(6, 8, 1.0, 1);
  std::mt19937_64 rng(6);
  const Vector x = oracle::random_vector(48, rng);
  EXPECT_LT((op->apply_adjoint(op->apply(x)) - x).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(op->apply(x).norm(), x.norm(), 1e-10);
}

TEST(FourierMask, RetainedCountAndDc) {
  auto op = make_fourier_mask(128, 128, 0.15, 9);
  EXPECT_EQ(op->selected().size(), 2458u);
  EXPECT_EQ(op->output_size(), 2 * 2458);
  EXPECT_EQ(op->selected().front(), 0);  // DC
  auto uni = make_fourier_mask(32, 32, 0.15, 9, MaskPattern::uniform);
  EXPECT_EQ(uni->selected().size(), 154u);
  EXPECT_EQ(uni->selected().front(), 0);
}

TEST(FourierMask, SeededAndValidated) {
  EXPECT_EQ(make_fourier_mask(16, 16, 0.2, 3)->selected(), make_fourier_mask(16, 16, 0.2, 3)->selected());
  EXPECT_THROW(make_fourier_mask(16, 16, 0.0, 3), InvalidArgument);
  EXPECT_THROW(make_fourier_mask(16, 16, -0.5, 3), InvalidArgument);
  EXPECT_THROW(make_fourier_mask(16, 16, 1.5, 3), InvalidArgument);
}

TEST(FourierMask, MatchesDefinitionOfDft) {
  auto op = make_fourier_mask(4, 6, 0.5, 2);
  std::mt19937_64 rng(7);
  const Matrix x = Eigen::Map<Matrix>(oracle::random_vector(24, rng).data(), 4, 6);
  const Eigen::VectorXcd ref = oracle::dft2(x);
  const Vector got = op->apply(Eigen::Map<const Vector>(x.data(), 24));
  const auto& sel = op->selected();
  const Eigen::Index m = static_cast<Eigen::Index>(sel.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    EXPECT_NEAR(got[i], ref[sel[i]].real(), 1e-12);
    EXPECT_NEAR(got[m + i], ref[sel[i]].imag(), 1e-12);
  }
  adjoint_test(*op, 8);
  norm_bound_test(*op, 9);
}

TEST(Mixing, IdentityAndRankOne) {
  auto id = make_mixing(Matrix::Identity(3, 3), 5);
  std::mt19937_64 rng(10);
  const Vector x = oracle::random_vector(15, rng);
  EXPECT_LT((id->apply(x) - x).cwiseAbs().maxCoeff(), 1e-15);

  const Vector a = oracle::random_vector(7, rng), b = oracle::random_vector(3, rng);
  auto r1 = make_mixing(a * b.transpose(), 4);
  EXPECT_NEAR(r1->operator_norm_sq(), a.squaredNorm() * b.squaredNorm(), 1e-8 * a.squaredNorm() * b.squaredNorm());
  EXPECT_THROW(make_mixing(Matrix(0, 0), 4), InvalidArgument);
}

TEST(Mixing, AdjointAndNormAgainstSvd) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 5; ++t) {
    const Matrix e = Eigen::Map<Matrix>(oracle::random_vector(20 * 4, rng).data(), 20, 4).cwiseAbs();
    auto op = make_mixing(e, 6);
    adjoint_test(*op, 12 + t);
    norm_bound_test(*op, 20 + t);
    const double sv = Eigen::JacobiSVD<Matrix>(e).singularValues()[0];
    EXPECT_NEAR(op->operator_norm_sq(), sv * sv, 1e-6 * sv * sv);
  }
}

TEST(SpectralNorm, AgreesWithDenseSvd) {
  std::mt19937_64 rng(13);
  for (int n : {5, 17, 64}) {
    const Matrix a = Eigen::Map<Matrix>(oracle::random_vector(n * n, rng).data(), n, n);
    const double sv = Eigen::JacobiSVD<Matrix>(a).singularValues()[0];
    EXPECT_NEAR(spectral_norm_sq(a), sv * sv, 1e-6 * sv * sv);
  }
}
