#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skrock/chebyshev.hpp"
#include "skrock/types.hpp"

namespace skrock {

enum class Method { em, skrock };

/// The pair (R1, R2) of a one-step integrator applied to dX = z X dt + sqrt(2) dW
/// with step 1, written in terms of z = -delta / sigma^2.
class StabilityFunctions {
 public:
  static StabilityFunctions em();
  static StabilityFunctions skrock(int s, double eta = kDefaultDamping);

  double r1(double z) const;
  double r2(double z) const;

  Method method() const { return method_; }
  /// Gradient evaluations per step.
  int stages() const { return method_ == Method::em ? 1 : coeffs_.s; }
  double eta() const { return coeffs_.eta; }
  const ChebCoefficients& coefficients() const { return coeffs_; }
  std::string label() const;

 private:
  Method method_ = Method::em;
  ChebCoefficients coeffs_;
  double t_at_omega0_ = 1.0;
  double u_at_omega0_ = 1.0;
};

struct GaussianTarget {
  Vector variances;
  Vector mean;  // empty means zero

  Eigen::Index dimension() const { return variances.size(); }
  double kappa() const { return variances.maxCoeff() / variances.minCoeff(); }
};

/// Checks positivity and fills in a zero mean.
GaussianTarget make_target(const Vector& variances, const Vector& mean = Vector());

/// d variances spaced linearly between 1 and 1/kappa.
GaussianTarget spread_target(Eigen::Index d, double kappa);

struct W2Result {
  Vector d;  // mean term D_n per axis
  Vector b;  // covariance term B_n per axis
  double total = 0.0;
};

/// Squared 2-Wasserstein distance between the target and the law of the
/// chain after n steps started at x0 (a point mass).
W2Result w2_distance(const GaussianTarget& target, const StabilityFunctions& stab, double delta, ConstVectorRef x0,
                     std::int64_t n);

/// Squared W2 between the target and the numerical invariant measure.
double w2_bias(const GaussianTarget& target, const StabilityFunctions& stab, double delta);

/// Squared W2 between the numerical invariant measure and Q_n.
double w2_to_invariant(const GaussianTarget& target, const StabilityFunctions& stab, double delta, ConstVectorRef x0,
                       std::int64_t n);

/// Per-axis stationary variances 2 delta R2^2 / (1 - R1^2).
GaussianTarget numerical_invariant(const GaussianTarget& target, const StabilityFunctions& stab, double delta);

/// max_i R1(z_i)^2
double contraction_constant(const GaussianTarget& target, const StabilityFunctions& stab, double delta);

struct StageStep {
  int s = 1;
  double delta = 0.0;
};

/// s = round(sqrt(eta (kappa - 1) / 2)) clamped to >= 1, and
/// delta = (omega0 - 1) / (ell omega1) with ell = 1 / sigma_max^2.
StageStep optimal_stage_and_step(double kappa, double eta = kDefaultDamping, double ell = 1.0);

/// Step used for EM in budget comparisons: safety * 2 / (L + ell).
double em_tuned_step(const GaussianTarget& target, double safety = 1.0);

struct BudgetResult {
  std::int64_t gradient_evals = 0;
  std::int64_t iterations = 0;
  int stages = 1;
  double delta = 0.0;
};

/// Smallest n * stages with W2(pi, Q_n)^2 < epsilon^2 W2(pi, Q_0)^2, by
/// stepping n on the closed form. Throws Unreachable when the asymptotic
/// bias already exceeds the threshold.
BudgetResult gradient_budget(const GaussianTarget& target, Method method, double epsilon, ConstVectorRef x0,
                             double eta = kDefaultDamping, double em_safety = 1.0,
                             std::int64_t max_iterations = 100000000);

/// R(p, q) = R1(p)^2 + R2(p)^2 q^2
double ms_amplification(const StabilityFunctions& stab, double p, double q2);

struct StabilityRegion {
  Vector p;
  Vector q2;
  std::vector<std::uint8_t> stable;  // row i = p[i], column j = q2[j]

  bool at(Eigen::Index i, Eigen::Index j) const { return stable[static_cast<std::size_t>(i * q2.size() + j)] != 0; }
};

/// Marks (p, q^2) as stable iff R(p, q) < 1.
StabilityRegion ms_stability_region(const StabilityFunctions& stab, const Vector& p_grid, const Vector& q2_grid);

/// Most negative p such that every grid point in [p, 0] is stable at q = 0.
double stable_extent(const StabilityFunctions& stab, double p_min, Eigen::Index resolution);

/// Least-squares slope of log10(y) against log10(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace skrock
