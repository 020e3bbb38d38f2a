#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "skrock/error.hpp"
#include "skrock/models.hpp"
#include "skrock/operators.hpp"

using namespace skrock;

namespace {

Vector grad(const PosteriorModel& m, const Vector& x) { return regularised_log_gradient(m, x); }

Vector grad_f(const PosteriorModel& m, const Vector& x) {
  Vector out(x.size());
  m.grad_f(x, out);
  return out;
}

// -f - g^lambda evaluated independently of the gradient code.
double log_pi(const PosteriorModel& m, const Vector& x) { return m.log_pi_lambda(x); }

void expect_gradient_matches_fd(const PosteriorModel& m, const Vector& x, double rel, bool smooth_only) {
  const auto f = [&](const Vector& v) { return smooth_only ? -m.log_density_smooth(v) : -log_pi(m, v); };
  const Vector fd = oracle::numeric_gradient(f, x, 1e-5);
  const Vector g = smooth_only ? grad_f(m, x) : Vector(-grad(m, x));
  EXPECT_LE((g - fd).norm(), rel * std::max(1.0, fd.norm())) << m.name();
}

TvSolverOptions tight() { return {1e-12, 20000}; }

}  // namespace

TEST(Gaussian, LipschitzAndGradient) {
  EXPECT_DOUBLE_EQ(model_gaussian((Vector(2) << 1, 1e-2).finished())->lipschitz_f(), 100.0);
  EXPECT_DOUBLE_EQ(model_gaussian((Vector(2) << 1, 1e-4).finished())->lipschitz_f(), 1e4);
  const auto iso = model_gaussian(Vector::Constant(3, 2.5));
  const Vector x = (Vector(3) << 1, -2, 0.5).finished();
  EXPECT_TRUE(grad(*iso, x).isApprox(-x / 2.5));
  EXPECT_FALSE(iso->has_penalty());
  EXPECT_DOUBLE_EQ(iso->lipschitz_total(), iso->lipschitz_f());
  EXPECT_THROW(model_gaussian((Vector(2) << 1, 0).finished()), InvalidArgument);
  EXPECT_THROW(model_gaussian((Vector(2) << 1, -3).finished()), InvalidArgument);
}

TEST(Laplace, Examples) {
  const auto m = model_laplace_1d(1.0, 1e-5);
  EXPECT_NEAR(2.0 / m->lipschitz_total(), 2e-5, 1e-18);
  EXPECT_EQ(grad(*m, Vector::Zero(1))[0], 0.0);
  EXPECT_NEAR(grad(*m, Vector::Constant(1, 0.5))[0], -1.0, 1e-9);
  EXPECT_NEAR(model_laplace_1d(2.0, 1e-5)->lipschitz_total(), 1e5, 1e-6);
  EXPECT_NEAR(grad(*model_laplace_1d(2.0, 1e-5), Vector::Constant(1, -3.0))[0], 0.5, 1e-9);
}

TEST(Uniform, Examples) {
  const double lambda = 1e-5;
  const auto m = model_uniform_1d(lambda);
  EXPECT_EQ(grad(*m, Vector::Constant(1, 0.5))[0], 0.0);
  for (double t : {1e-7, 1e-3, 0.4}) EXPECT_NEAR(grad(*m, Vector::Constant(1, 1.0 + t))[0], -t / lambda, 1e-6 * t / lambda);
  EXPECT_DOUBLE_EQ(m->lipschitz_total(), 1e5);
}

TEST(Deconvolution, ReferenceConfigurationAndTruthGradient) {
  const ImageShape shape{8, 8, 1};
  auto blur = make_blur(uniform_kernel(3), 8, 8);
  std::mt19937_64 rng(1);
  const Vector truth = oracle::random_vector(64, rng);
  const Vector y = blur->apply(truth);
  const auto m = model_deconvolution(y, shape, blur, 0.47, 0.047, 0.21);
  EXPECT_DOUBLE_EQ(m->lambda(), 0.21);
  EXPECT_NEAR(m->lipschitz_f(), 1.0 / (0.47 * 0.47), 1e-9);
  EXPECT_NEAR(default_lambda(m->lipschitz_f()), 0.2209, 1e-9);
  EXPECT_LT(grad_f(*m, truth).norm(), 1e-10);
  EXPECT_EQ(m->initial_label(), "adjoint");
  EXPECT_THROW(model_deconvolution(Vector::Zero(10), shape, blur, 0.47, 0.047, 0.21), InvalidArgument);
}

TEST(Deconvolution, GradientsMatchFiniteDifferences) {
  const ImageShape shape{8, 8, 1};
  auto blur = make_blur(uniform_kernel(3), 8, 8);
  std::mt19937_64 rng(2);
  const Vector y = oracle::random_vector(64, rng);
  const auto m = model_deconvolution(y, shape, blur, 0.5, 0.3, 0.2, tight());
  const Vector x = oracle::random_vector(64, rng);
  expect_gradient_matches_fd(*m, x, 1e-6, true);
  expect_gradient_matches_fd(*m, x, 1e-5, false);
}

TEST(Unmixing, ReferenceConfiguration) {
  const ImageShape shape{4, 4, 2};
  std::mt19937_64 rng(3);
  const Matrix e = Eigen::Map<Matrix>(oracle::random_vector(6, rng).data(), 3, 2).cwiseAbs();
  auto mix = make_mixing(e, 16);
  const auto m = model_unmixing(Vector::Zero(48), shape, mix, 8.4e-4, 25, 185, 7.08e-7);
  EXPECT_DOUBLE_EQ(m->lambda(), 7.08e-7);
  EXPECT_EQ(grad_f(*m, Vector::Zero(32)).norm(), 0.0);
  EXPECT_THROW(model_unmixing(Vector::Zero(47), shape, mix, 1, 1, 1, 1), InvalidArgument);
}

TEST(Unmixing, GradientMatchesFiniteDifferences) {
  const ImageShape shape{4, 4, 2};
  std::mt19937_64 rng(4);
  const Matrix e = Eigen::Map<Matrix>(oracle::random_vector(6, rng).data(), 3, 2).cwiseAbs();
  auto mix = make_mixing(e, 16);
  const Vector y = oracle::random_vector(48, rng);
  const auto m = model_unmixing(y, shape, mix, 0.7, 0.2, 0.3, 0.5,
                                {PenaltyTerm::tv, PenaltyTerm::l1, PenaltyTerm::nonnegative}, tight());
  expect_gradient_matches_fd(*m, oracle::random_vector(32, rng), 1e-6, true);
}

TEST(Tomography, ReferenceConfigurationAndTruthGradient) {
  const ImageShape shape{8, 8, 1};
  auto full = make_fourier_mask(8, 8, 1.0, 1);
  std::mt19937_64 rng(5);
  const Vector truth = oracle::random_vector(64, rng);
  const auto m = model_tomography(full->apply(truth), shape, full, 1e-2, 1e2, 0.2e-4);
  EXPECT_LT(grad_f(*m, truth).norm(), 1e-6);
  EXPECT_NEAR(m->lipschitz_f(), 1e4, 1e-6);
  EXPECT_DOUBLE_EQ(m->lambda(), 2e-5);
}

TEST(Tomography, GradientMatchesFiniteDifferences) {
  const ImageShape shape{8, 8, 1};
  auto mask = make_fourier_mask(8, 8, 0.4, 2);
  std::mt19937_64 rng(6);
  const Vector y = oracle::random_vector(mask->output_size(), rng);
  const auto m = model_tomography(y, shape, mask, 0.8, 0.1, 0.3, tight());
  expect_gradient_matches_fd(*m, oracle::random_vector(64, rng), 1e-6, true);
}

TEST(RegularisedGradient, CountsEvaluationsAndPoisons) {
  const auto m = model_laplace_1d(1.0, 0.1);
  m->reset_counter();
  for (int i = 0; i < 7; ++i) grad(*m, Vector::Constant(1, 0.3 * i));
  EXPECT_EQ(m->gradient_evals(), 7);
  EXPECT_THROW(grad(*m, Vector::Constant(1, std::nan(""))), PoisonedChain);
}

namespace {

std::vector<ModelPtr> property_models() {
  std::mt19937_64 rng(7);
  std::vector<ModelPtr> ms;
  ms.push_back(model_gaussian((Vector(3) << 1, 0.1, 0.01).finished()));
  ms.push_back(model_laplace_1d(0.7, 0.05));
  ms.push_back(model_uniform_1d(0.05));
  const ImageShape shape{6, 6, 1};
  auto blur = make_blur(uniform_kernel(3), 6, 6);
  ms.push_back(model_deconvolution(oracle::random_vector(36, rng), shape, blur, 0.5, 0.2, 0.1, tight()));
  auto mask = make_fourier_mask(6, 6, 0.5, 3);
  ms.push_back(model_tomography(oracle::random_vector(mask->output_size(), rng), shape, mask, 0.5, 0.2, 0.1, tight()));
  const Matrix e = Eigen::Map<Matrix>(oracle::random_vector(8, rng).data(), 4, 2).cwiseAbs();
  ms.push_back(model_unmixing(oracle::random_vector(4 * 36, rng), {6, 6, 2}, make_mixing(e, 36), 0.6, 0.1, 0.2, 0.1,
                              {PenaltyTerm::tv, PenaltyTerm::l1, PenaltyTerm::nonnegative}, tight()));
  return ms;
}

}  // namespace

TEST(ModelProperties, LipschitzAndMonotoneGradients) {
  std::mt19937_64 rng(8);
  for (const auto& m : property_models()) {
    const double L = m->lipschitz_total();
    for (int t = 0; t < 100; ++t) {
      const Vector x = oracle::random_vector(m->dimension(), rng, 2.0);
      const Vector y = oracle::random_vector(m->dimension(), rng, 2.0);
      const Vector gx = grad(*m, x), gy = grad(*m, y);
      EXPECT_LE((gx - gy).norm(), L * (x - y).norm() * (1 + 1e-6) + 1e-3) << m->name();
      // -grad log pi is monotone.
      EXPECT_GE(-(gx - gy).dot(x - y), -1e-3) << m->name();
      Vector fx(m->dimension()), fy(m->dimension());
      m->grad_f(x, fx);
      m->grad_f(y, fy);
      EXPECT_LE((fx - fy).norm(), m->lipschitz_f() * (x - y).norm() * (1 + 1e-6) + 1e-12) << m->name();
    }
  }
}
