#include "skrock/chebyshev.hpp"

#include <cmath>
#include <string>

#include "skrock/error.hpp"

namespace skrock {

namespace {

double three_term(int s, double x, double first) {
  if (s == 0) return 1.0;
  double prev = 1.0;
  double cur = first;
  for (int k = 1; k < s; ++k) {
    const double next = 2.0 * x * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

void check_stage_count(int s) {
  if (s < 1 || s > kMaxStages) {
    throw InvalidArgument("stage count must lie in [1, " + std::to_string(kMaxStages) +
                          "], got " + std::to_string(s));
  }
}

}  // namespace

double cheb_t(int s, double x) { return three_term(s, x, x); }

double cheb_u(int s, double x) { return three_term(s, x, 2.0 * x); }

double cheb_t_derivative(int s, double x) {
  if (s < 1) return 0.0;
  return static_cast<double>(s) * cheb_u(s - 1, x);
}

double stability_interval_length(int s, double eta) {
  const double h = static_cast<double>(s) - 0.5;
  return h * h * (2.0 - 4.0 * eta / 3.0) - 1.5;
}

ChebCoefficients make_coefficients(int s, double eta) {
  check_stage_count(s);
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw InvalidArgument("damping eta must be finite and non-negative");
  }

  ChebCoefficients c;
  c.s = s;
  c.eta = eta;
  c.omega0 = 1.0 + eta / (static_cast<double>(s) * s);
  c.omega1 = cheb_t(s, c.omega0) / cheb_t_derivative(s, c.omega0);
  c.ls = stability_interval_length(s, eta);

  // T_j(omega0) for j = 0..s, reused by every stage.
  std::vector<double> t(static_cast<std::size_t>(s) + 1);
  t[0] = 1.0;
  t[1] = c.omega0;
  for (int j = 2; j <= s; ++j) t[j] = 2.0 * c.omega0 * t[j - 1] - t[j - 2];

  c.mu.resize(s);
  c.nu.resize(s);
  c.k.resize(s);
  c.mu[0] = c.omega1 / c.omega0;
  c.nu[0] = s * c.omega1 / 2.0;
  c.k[0] = s * c.omega1 / c.omega0;
  for (int j = 2; j <= s; ++j) {
    c.mu[j - 1] = 2.0 * c.omega1 * t[j - 1] / t[j];
    c.nu[j - 1] = 2.0 * c.omega0 * t[j - 1] / t[j];
    c.k[j - 1] = -t[j - 2] / t[j];
  }
  return c;
}

}  // namespace skrock
