#include "skrock/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "fft.hpp"
#include "skrock/error.hpp"

namespace skrock {

namespace {

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index m = 1;
  while (m < n) m <<= 1;
  return m;
}

void require_nonconstant(ConstVectorRef series) {
  if (series.size() == 0) throw InvalidArgument("empty series");
  if (!series.allFinite()) throw InvalidArgument("series has non-finite values");
  if (series.maxCoeff() == series.minCoeff()) throw InvalidArgument("series is constant (zero variance)");
}

}  // namespace

Vector autocorrelation(ConstVectorRef series, Eigen::Index max_lag) {
  require_nonconstant(series);
  const Eigen::Index n = series.size();
  if (max_lag < 0 || max_lag >= n) throw InvalidArgument("max_lag must lie in [0, n)");

  const Eigen::Index m = next_pow2(2 * n);
  const double mean = series.mean();
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(m), {0.0, 0.0});
  for (Eigen::Index i = 0; i < n; ++i) buf[i] = {series[i] - mean, 0.0};
  Fft1d fft(m);
  fft.forward(buf.data());
  for (auto& c : buf) c = {std::norm(c), 0.0};
  fft.backward(buf.data());

  const double c0 = buf[0].real();
  Vector acf(max_lag + 1);
  for (Eigen::Index k = 0; k <= max_lag; ++k) acf[k] = buf[k].real() / c0;
  acf[0] = 1.0;
  return acf;
}

EssResult effective_sample_size_detail(ConstVectorRef series) {
  const Eigen::Index n = series.size();
  if (n < 10) throw InvalidArgument("ESS needs at least 10 values");
  const Vector rho = autocorrelation(series, n - 1);

  // Initial monotone sequence: pair sums Gamma_k = rho(2k) + rho(2k+1) are
  // accumulated while positive, each capped by its predecessor.
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  EssResult r;
  for (Eigen::Index k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho[2 * k] + rho[2 * k + 1];
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum += pair;
    r.truncation_lag = 2 * k + 1;
  }
  const double floor = 1.0 / std::log10(static_cast<double>(n));
  r.tau = std::max(-1.0 + 2.0 * sum, floor);
  r.ess = static_cast<double>(n) / r.tau;
  r.supereffective = r.ess > static_cast<double>(n);
  return r;
}

double effective_sample_size(ConstVectorRef series) { return effective_sample_size_detail(series).ess; }

namespace {

double midpoint(const std::function<double(double)>& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int i = 0; i < panels; ++i) s += f(a + (i + 0.5) * h);
  return s * h;
}

double bin_mass(const std::function<double(double)>& f, double a, double b) {
  int panels = 1;
  double prev = midpoint(f, a, b, panels);
  while (panels < (1 << 20)) {
    panels *= 2;
    const double cur = midpoint(f, a, b, panels);
    if (std::abs(cur - prev) <= 1e-8 * std::max(std::abs(cur), 1e-300)) return cur;
    prev = cur;
  }
  return prev;
}

}  // namespace

double kl_vs_target_1d(ConstVectorRef samples, const std::function<double(double)>& density, int n_bins, double lo,
                       double hi) {
  if (n_bins < 10) throw InvalidArgument("KL needs at least 10 bins");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw InvalidArgument("KL range must be finite, lo < hi");
  if (samples.size() == 0) throw InvalidArgument("KL needs samples");
  if (!density) throw InvalidArgument("KL needs a target density");

  const double width = (hi - lo) / n_bins;
  std::vector<double> counts(static_cast<std::size_t>(n_bins), 0.0);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    const double v = samples[i];
    if (std::isnan(v)) throw InvalidArgument("KL samples contain NaN");
    const double pos = std::floor((v - lo) / width);
    const int b = static_cast<int>(std::clamp(pos, 0.0, static_cast<double>(n_bins - 1)));
    counts[b] += 1.0;
  }
  std::vector<double> mass(static_cast<std::size_t>(n_bins));
  double total = 0.0;
  for (int b = 0; b < n_bins; ++b) {
    mass[b] = bin_mass(density, lo + b * width, lo + (b + 1) * width);
    total += mass[b];
  }
  if (!(total > 0.0)) throw InvalidArgument("target density has no mass on the KL range");

  const double n = static_cast<double>(samples.size());
  double kl = 0.0;
  for (int b = 0; b < n_bins; ++b) {
    if (counts[b] == 0.0) continue;
    const double p = counts[b] / n;
    const double q = mass[b] / total;
    if (q <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p * std::log(p / q);
  }
  return std::max(kl, 0.0);
}

namespace {

// Lanczos with full reorthogonalisation on the sample covariance
// C = X^T X / (n - 1), X centred. Both ends of the spectrum come from the same
// Krylov basis; a Ritz pair counts as converged once its residual
// beta_m |y_m| drops below sqrt(tol) times the largest Ritz value.
struct EigenPair {
  Vector vec;
  double value = 0.0;
  bool converged = false;
};

struct ExtremePairs {
  EigenPair top;
  EigenPair bottom;
};

ExtremePairs lanczos_extremes(const Matrix& x, const ComponentOptions& opts) {
  const Eigen::Index d = x.cols();
  const double scale = 1.0 / static_cast<double>(x.rows() - 1);
  const Eigen::Index m_max = std::min<Eigen::Index>(d, std::max(opts.max_iter, 2));

  Matrix v(d, m_max);
  std::vector<double> alpha, beta;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  Vector w(d);
  for (Eigen::Index i = 0; i < d; ++i) w[i] = normal(rng);
  v.col(0) = w.normalized();

  ExtremePairs out;
  for (Eigen::Index j = 0; j < m_max; ++j) {
    w.noalias() = x.transpose() * (x * v.col(j));
    w *= scale;
    alpha.push_back(v.col(j).dot(w));
    for (int pass = 0; pass < 2; ++pass) {
      const Vector h = v.leftCols(j + 1).transpose() * w;
      w.noalias() -= v.leftCols(j + 1) * h;
    }
    const double b = w.norm();
    const Eigen::Index m = j + 1;
    const bool last = m == m_max;
    if (m % 10 != 0 && !last && b > 0.0) {
      beta.push_back(b);
      v.col(j + 1) = w / b;
      continue;
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es;
    Vector diag = Eigen::Map<const Vector>(alpha.data(), m);
    Vector off = m > 1 ? Vector(Eigen::Map<const Vector>(beta.data(), m - 1)) : Vector();
    es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    const double top = es.eigenvalues()[m - 1];
    const double bound = std::sqrt(opts.tol) * std::max(std::abs(top), 1e-300);
    const bool breakdown = b <= 1e-13 * std::max(std::abs(top), 1e-300);
    const double r_top = breakdown ? 0.0 : b * std::abs(es.eigenvectors()(m - 1, m - 1));
    const double r_bot = breakdown ? 0.0 : b * std::abs(es.eigenvectors()(m - 1, 0));
    const bool done = breakdown || (r_top <= bound && r_bot <= bound);
    if (done || last) {
      out.top = {v.leftCols(m) * es.eigenvectors().col(m - 1), top, r_top <= bound};
      out.bottom = {v.leftCols(m) * es.eigenvectors().col(0), es.eigenvalues()[0], r_bot <= bound};
      break;
    }
    beta.push_back(b);
    v.col(j + 1) = w / b;
  }
  return out;
}

void fix_sign(Vector& v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  if (v[idx] < 0.0) v = -v;
}

}  // namespace

Components slow_fast_components(const SampleMatrix& samples, const ComponentOptions& opts) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n < 2) throw InvalidArgument("component extraction needs at least two samples");
  if (d < 2) throw InvalidArgument("component extraction needs dimension >= 2");
  if (!samples.allFinite()) throw InvalidArgument("samples contain non-finite values");

  const Vector mean = samples.colwise().mean().transpose();
  const Matrix x = samples.rowwise() - mean.transpose();

  Components c;
  const ExtremePairs pairs = lanczos_extremes(x, opts);
  const EigenPair& top = pairs.top;
  const EigenPair& bottom = pairs.bottom;

  c.slow = top.vec.normalized();
  fix_sign(c.slow);
  c.fast = bottom.vec.normalized();
  c.fast -= c.fast.dot(c.slow) * c.slow;
  if (c.fast.norm() == 0.0) {
    Eigen::Index j = 0;
    c.slow.cwiseAbs().minCoeff(&j);
    c.fast = Vector::Unit(d, j) - c.slow[j] * c.slow;
  }
  c.fast.normalize();
  fix_sign(c.fast);
  c.slow_sd = std::sqrt(std::max(top.value, 0.0));
  c.fast_sd = std::sqrt(std::max(bottom.value, 0.0));
  c.fast_reliable = bottom.converged && n - 1 >= d && bottom.value > 1e-12 * top.value;
  return c;
}

Vector project(const SampleMatrix& samples, ConstVectorRef direction) {
  if (direction.size() != samples.cols()) throw InvalidArgument("direction has the wrong dimension");
  return samples * direction;
}

MseTrace mse_trace(const SampleMatrix& samples, ConstVectorRef truth, std::int64_t budget_per_sample) {
  if (truth.size() != samples.cols()) throw InvalidArgument("truth has the wrong dimension");
  if (budget_per_sample < 1) throw InvalidArgument("budget_per_sample must be positive");
  MseTrace t;
  const Eigen::Index n = samples.rows();
  const double d = static_cast<double>(samples.cols());
  t.mse.resize(n);
  t.gradient_evals.resize(static_cast<std::size_t>(n));
  Vector sum = Vector::Zero(samples.cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    sum += samples.row(k).transpose();
    t.mse[k] = (sum / static_cast<double>(k + 1) - truth).squaredNorm() / d;
    t.gradient_evals[k] = (k + 1) * budget_per_sample;
  }
  return t;
}

ChainTrace thin(const ChainTrace& trace, std::int64_t k) {
  if (k < 1) throw InvalidArgument("thinning factor must be positive");
  ChainTrace out;
  out.config = trace.config;
  out.config.thinning *= k;
  out.gradient_evals = trace.gradient_evals;
  out.wall_time = trace.wall_time;
  out.init_label = trace.init_label;
  const std::int64_t rows = trace.stored() / k;
  out.samples.resize(rows, trace.samples.cols());
  if (trace.trace_statistic.size()) out.trace_statistic.resize(rows);
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::int64_t src = (r + 1) * k - 1;
    out.samples.row(r) = trace.samples.row(src);
    if (trace.trace_statistic.size()) out.trace_statistic[r] = trace.trace_statistic[src];
    if (static_cast<std::size_t>(src) < trace.iterations.size()) out.iterations.push_back(trace.iterations[src]);
  }
  return out;
}

DiagnosticsReport analyse_trace(const ChainTrace& trace, const AnalysisOptions& opts, const std::string& label) {
  DiagnosticsReport r;
  r.label = label;
  r.budget = trace.post_burn_in_budget();
  r.n_samples = trace.stored();
  r.delta = trace.config.delta;
  r.stages = trace.config.gradients_per_step();
  const Eigen::Index n = trace.stored();
  const Eigen::Index d = trace.samples.cols();
  if (n < 10) throw InvalidArgument("analysis needs at least 10 stored samples");
  const Eigen::Index lag = std::min(opts.max_lag, n - 1);

  if (d == 1) {
    r.slow_direction = r.fast_direction = Vector::Ones(1);
  } else {
    if (!opts.slow_direction || !opts.fast_direction) {
      const Components c = slow_fast_components(trace.samples);
      r.slow_direction = c.slow;
      r.fast_direction = c.fast;
      r.fast_reliable = c.fast_reliable;
    }
    if (opts.slow_direction) r.slow_direction = *opts.slow_direction;
    if (opts.fast_direction) r.fast_direction = *opts.fast_direction;
  }
  const Vector slow = project(trace.samples, r.slow_direction);
  const Vector fast = project(trace.samples, r.fast_direction);
  r.ess_slow = effective_sample_size_detail(slow);
  r.ess_fast = effective_sample_size_detail(fast);
  r.acf_slow = autocorrelation(slow, lag);
  r.acf_fast = autocorrelation(fast, lag);
  if (trace.trace_statistic.size() == n && trace.trace_statistic.maxCoeff() > trace.trace_statistic.minCoeff()) {
    r.ess_statistic = effective_sample_size_detail(trace.trace_statistic);
  }
  if (opts.density && d == 1) {
    r.kl = kl_vs_target_1d(trace.samples.col(0), opts.density, opts.kl_bins, opts.kl_lo, opts.kl_hi);
  }
  if (opts.truth) {
    r.mse = mse_trace(trace.samples, *opts.truth,
                      static_cast<std::int64_t>(trace.config.thinning) * trace.config.gradients_per_step());
  }
  return r;
}

Speedup speedup_report(const DiagnosticsReport& reference, const DiagnosticsReport& candidate) {
  if (reference.budget != candidate.budget) {
    throw BudgetMismatch("gradient budgets differ: " + std::to_string(reference.budget) + " vs " +
                         std::to_string(candidate.budget));
  }
  Speedup s;
  s.slow = candidate.ess_slow.ess / reference.ess_slow.ess;
  s.fast = candidate.ess_fast.ess / reference.ess_fast.ess;
  if (reference.ess_statistic.ess > 0.0) s.statistic = candidate.ess_statistic.ess / reference.ess_statistic.ess;
  return s;
}

}  // namespace skrock
