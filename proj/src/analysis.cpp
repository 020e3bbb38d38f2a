#include "skrock/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skrock/error.hpp"

namespace skrock {

// StabilityFunctions

StabilityFunctions StabilityFunctions::em() {
  StabilityFunctions f;
  f.method_ = Method::em;
  return f;
}

StabilityFunctions StabilityFunctions::skrock(int s, double eta) {
  StabilityFunctions f;
  f.method_ = Method::skrock;
  f.coeffs_ = make_coefficients(s, eta);
  f.t_at_omega0_ = cheb_t(s, f.coeffs_.omega0);
  f.u_at_omega0_ = cheb_u(s - 1, f.coeffs_.omega0);
  return f;
}

double StabilityFunctions::r1(double z) const {
  if (method_ == Method::em) return 1.0 + z;
  return cheb_t(coeffs_.s, coeffs_.omega0 + coeffs_.omega1 * z) / t_at_omega0_;
}

double StabilityFunctions::r2(double z) const {
  if (method_ == Method::em) return 1.0;
  const double w = coeffs_.omega0 + coeffs_.omega1 * z;
  return cheb_u(coeffs_.s - 1, w) / u_at_omega0_ * (1.0 + coeffs_.omega1 * z / 2.0);
}

std::string StabilityFunctions::label() const {
  if (method_ == Method::em) return "em";
  return "skrock_s" + std::to_string(coeffs_.s);
}

// Targets

GaussianTarget make_target(const Vector& variances, const Vector& mean) {
  if (variances.size() == 0) throw InvalidArgument("Gaussian target needs at least one variance");
  if (!variances.allFinite() || variances.minCoeff() <= 0.0) {
    throw InvalidArgument("Gaussian variances must be positive and finite");
  }
  GaussianTarget t;
  t.variances = variances;
  t.mean = mean.size() == 0 ? Vector::Zero(variances.size()) : mean;
  if (t.mean.size() != variances.size()) throw InvalidArgument("Gaussian mean has the wrong dimension");
  return t;
}

GaussianTarget spread_target(Eigen::Index d, double kappa) {
  if (d < 1) throw InvalidArgument("dimension must be positive");
  if (!(kappa >= 1.0)) throw InvalidArgument("kappa must be at least 1");
  if (d == 1) return make_target(Vector::Ones(1));
  return make_target(Vector::LinSpaced(d, 1.0, 1.0 / kappa));
}

namespace {

struct Axis {
  double sigma;   // target standard deviation
  double r1;
  double r2;
  double offset;  // x0 - mean
};

void check_delta(double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be finite and non-negative");
}

Axis axis(const GaussianTarget& t, const StabilityFunctions& stab, double delta, ConstVectorRef x0, Eigen::Index i) {
  const double var = t.variances[i];
  const double z = -delta / var;
  const double mean = t.mean.size() ? t.mean[i] : 0.0;
  return {std::sqrt(var), stab.r1(z), stab.r2(z), x0.size() ? x0[i] - mean : 0.0};
}

// (1 - a^{2n}) / (1 - a^2), the geometric sum of a^{2k} for k < n, in
// log-magnitude form so that large n and |a| close to 1 stay accurate.
double geometric(double a, std::int64_t n) {
  if (n == 0) return 0.0;
  const double la = std::log(std::abs(a));
  if (la == 0.0) return static_cast<double>(n);
  if (!std::isfinite(la)) return 1.0;  // a == 0
  return std::expm1(2.0 * static_cast<double>(n) * la) / std::expm1(2.0 * la);
}

double power2n(double a, std::int64_t n) {
  if (n == 0) return 1.0;
  if (a == 0.0) return 0.0;
  return std::exp(2.0 * static_cast<double>(n) * std::log(std::abs(a)));
}

void require_contractive(double r1, Eigen::Index i) {
  if (!(std::abs(r1) < 1.0)) {
    throw Divergence("|R1(z)| = " + std::to_string(std::abs(r1)) + " >= 1 on axis " + std::to_string(i));
  }
}

// Standard deviation of the stationary law on one axis. At z = 0 this is the
// continuous limit sigma.
double invariant_sd(const Axis& a, double delta, Eigen::Index i) {
  if (delta == 0.0) return a.sigma;
  require_contractive(a.r1, i);
  return std::sqrt(2.0 * delta * a.r2 * a.r2 / (1.0 - a.r1 * a.r1));
}

void check_dims(const GaussianTarget& t, ConstVectorRef x0) {
  if (x0.size() != 0 && x0.size() != t.dimension()) throw InvalidArgument("x0 has the wrong dimension");
}

}  // namespace

W2Result w2_distance(const GaussianTarget& target, const StabilityFunctions& stab, double delta, ConstVectorRef x0,
                     std::int64_t n) {
  check_delta(delta);
  check_dims(target, x0);
  if (n < 0) throw InvalidArgument("n must be non-negative");
  const Eigen::Index d = target.dimension();
  W2Result r;
  r.d.resize(d);
  r.b.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Axis a = axis(target, stab, delta, x0, i);
    if (n > 0 && delta > 0.0) require_contractive(a.r1, i);
    r.d[i] = power2n(a.r1, n) * a.offset * a.offset;
    // |R2| is the standard deviation factor; R2 itself may be negative.
    const double sd = std::sqrt(2.0 * delta) * std::abs(a.r2) * std::sqrt(geometric(a.r1, n));
    r.b[i] = (a.sigma - sd) * (a.sigma - sd);
  }
  r.total = r.d.sum() + r.b.sum();
  return r;
}

double w2_bias(const GaussianTarget& target, const StabilityFunctions& stab, double delta) {
  check_delta(delta);
  double total = 0.0;
  const Vector none;
  for (Eigen::Index i = 0; i < target.dimension(); ++i) {
    const Axis a = axis(target, stab, delta, none, i);
    const double gap = a.sigma - invariant_sd(a, delta, i);
    total += gap * gap;
  }
  return total;
}

double w2_to_invariant(const GaussianTarget& target, const StabilityFunctions& stab, double delta, ConstVectorRef x0,
                       std::int64_t n) {
  check_delta(delta);
  check_dims(target, x0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < target.dimension(); ++i) {
    const Axis a = axis(target, stab, delta, x0, i);
    const double inv = invariant_sd(a, delta, i);
    const double sd = std::sqrt(2.0 * delta) * std::abs(a.r2) * std::sqrt(geometric(a.r1, n));
    total += power2n(a.r1, n) * a.offset * a.offset + (inv - sd) * (inv - sd);
  }
  return total;
}

GaussianTarget numerical_invariant(const GaussianTarget& target, const StabilityFunctions& stab, double delta) {
  check_delta(delta);
  GaussianTarget out;
  out.variances.resize(target.dimension());
  out.mean = Vector::Zero(target.dimension());
  const Vector none;
  for (Eigen::Index i = 0; i < target.dimension(); ++i) {
    const double sd = invariant_sd(axis(target, stab, delta, none, i), delta, i);
    out.variances[i] = sd * sd;
  }
  return out;
}

double contraction_constant(const GaussianTarget& target, const StabilityFunctions& stab, double delta) {
  check_delta(delta);
  double c = 0.0;
  for (Eigen::Index i = 0; i < target.dimension(); ++i) {
    const double r = stab.r1(-delta / target.variances[i]);
    c = std::max(c, r * r);
  }
  return c;
}

StageStep optimal_stage_and_step(double kappa, double eta, double ell) {
  if (!(kappa >= 1.0)) throw InvalidArgument("kappa must be at least 1");
  if (!(ell > 0.0)) throw InvalidArgument("ell must be positive");
  StageStep r;
  const double raw = std::round(std::sqrt(eta * (kappa - 1.0) / 2.0));
  r.s = static_cast<int>(std::clamp(raw, 1.0, static_cast<double>(kMaxStages)));
  const ChebCoefficients c = make_coefficients(r.s, eta);
  r.delta = (c.omega0 - 1.0) / (ell * c.omega1);
  return r;
}

double em_tuned_step(const GaussianTarget& target, double safety) {
  const double big_l = 1.0 / target.variances.minCoeff();
  const double ell = 1.0 / target.variances.maxCoeff();
  return safety * 2.0 / (big_l + ell);
}

BudgetResult gradient_budget(const GaussianTarget& target, Method method, double epsilon, ConstVectorRef x0,
                             double eta, double em_safety, std::int64_t max_iterations) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  check_dims(target, x0);
  BudgetResult res;
  StabilityFunctions stab = StabilityFunctions::em();
  if (method == Method::em) {
    res.delta = em_tuned_step(target, em_safety);
  } else {
    const StageStep ss = optimal_stage_and_step(target.kappa(), eta, 1.0 / target.variances.maxCoeff());
    res.stages = ss.s;
    res.delta = ss.delta;
    stab = StabilityFunctions::skrock(ss.s, eta);
  }

  const Eigen::Index d = target.dimension();
  std::vector<Axis> axes;
  for (Eigen::Index i = 0; i < d; ++i) axes.push_back(axis(target, stab, res.delta, x0, i));

  double w0 = 0.0;
  for (const Axis& a : axes) w0 += a.offset * a.offset + a.sigma * a.sigma;
  const double threshold = epsilon * epsilon * w0;
  if (w0 < threshold) return res;

  for (Eigen::Index i = 0; i < d; ++i) require_contractive(axes[i].r1, i);
  const double floor = w2_bias(target, stab, res.delta);
  if (floor >= threshold) {
    throw Unreachable("asymptotic bias " + std::to_string(floor) + " is above the target " +
                      std::to_string(threshold));
  }

  // Step n forward with the recursions a^{2n} and g_n = 1 + a^2 g_{n-1}.
  std::vector<double> pow2n(d, 1.0), geo(d, 0.0);
  const double root = std::sqrt(2.0 * res.delta);
  for (std::int64_t n = 1; n <= max_iterations; ++n) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const Axis& a = axes[i];
      const double a2 = a.r1 * a.r1;
      pow2n[i] *= a2;
      geo[i] = 1.0 + a2 * geo[i];
      const double sd = root * std::abs(a.r2) * std::sqrt(geo[i]);
      total += pow2n[i] * a.offset * a.offset + (a.sigma - sd) * (a.sigma - sd);
    }
    if (total < threshold) {
      res.iterations = n;
      res.gradient_evals = n * res.stages;
      return res;
    }
  }
  throw Unreachable("accuracy not reached within " + std::to_string(max_iterations) + " iterations");
}

double ms_amplification(const StabilityFunctions& stab, double p, double q2) {
  const double a = stab.r1(p);
  const double b = stab.r2(p);
  return a * a + b * b * q2;
}

StabilityRegion ms_stability_region(const StabilityFunctions& stab, const Vector& p_grid, const Vector& q2_grid) {
  if (!p_grid.allFinite() || !q2_grid.allFinite()) throw InvalidArgument("stability grids must be finite");
  StabilityRegion r;
  r.p = p_grid;
  r.q2 = q2_grid;
  r.stable.resize(static_cast<std::size_t>(p_grid.size() * q2_grid.size()));
  for (Eigen::Index i = 0; i < p_grid.size(); ++i) {
    const double a = stab.r1(p_grid[i]);
    const double b = stab.r2(p_grid[i]);
    for (Eigen::Index j = 0; j < q2_grid.size(); ++j) {
      r.stable[static_cast<std::size_t>(i * q2_grid.size() + j)] = (a * a + b * b * q2_grid[j]) < 1.0 ? 1 : 0;
    }
  }
  return r;
}

double stable_extent(const StabilityFunctions& stab, double p_min, Eigen::Index resolution) {
  if (!(p_min < 0.0) || resolution < 2) throw InvalidArgument("stable_extent needs p_min < 0 and resolution >= 2");
  double extent = 0.0;
  for (Eigen::Index k = 1; k < resolution; ++k) {
    const double p = p_min * static_cast<double>(k) / static_cast<double>(resolution - 1);
    if (!(ms_amplification(stab, p, 0.0) < 1.0)) break;
    extent = p;
  }
  return extent;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope fit needs at least two matching points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("log-log fit needs positive values");
    lx.push_back(std::log10(x[i]));
    ly.push_back(std::log10(y[i]));
    mx += lx.back() / n;
    my += ly.back() / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw InvalidArgument("log-log fit needs distinct x values");
  return sxy / sxx;
}

}  // namespace skrock
