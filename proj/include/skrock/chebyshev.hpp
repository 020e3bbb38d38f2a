#pragma once

#include <vector>

namespace skrock {

inline constexpr int kMaxStages = 100;
inline constexpr double kDefaultDamping = 0.05;

/// T_s(x), Chebyshev polynomial of the first kind, by three-term recurrence.
double cheb_t(int s, double x);

/// U_s(x), Chebyshev polynomial of the second kind, by three-term recurrence.
double cheb_u(int s, double x);

/// T_s'(x) = s * U_{s-1}(x). Requires s >= 1.
double cheb_t_derivative(int s, double x);

/// Damped Chebyshev coefficients of an s-stage SK-ROCK step.
///
/// Arrays are indexed by stage j = 1..s at position j-1. Stage 1 uses the
/// special values mu_1 = omega1/omega0, nu_1 = s*omega1/2, k_1 = s*omega1/omega0;
/// later stages satisfy k_j = 1 - nu_j.
struct ChebCoefficients {
  int s = 1;
  double eta = kDefaultDamping;
  double omega0 = 1.0;
  double omega1 = 1.0;
  double ls = 0.0;  // length of the real stability interval [-ls, 0]
  std::vector<double> mu;
  std::vector<double> nu;
  std::vector<double> k;
};

/// Builds all recurrence coefficients. Throws InvalidArgument for s outside
/// [1, kMaxStages] or negative eta.
ChebCoefficients make_coefficients(int s, double eta = kDefaultDamping);

/// ls = (s - 0.5)^2 (2 - 4 eta / 3) - 1.5
double stability_interval_length(int s, double eta = kDefaultDamping);

}  // namespace skrock
