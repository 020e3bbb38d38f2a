#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "skrock/samplers.hpp"
#include "skrock/types.hpp"

namespace skrock {

/// Biased sample autocorrelation at lags 0..max_lag, normalised so that the
/// lag-0 value is 1. Computed through a zero-padded FFT.
Vector autocorrelation(ConstVectorRef series, Eigen::Index max_lag);

struct EssResult {
  double ess = 0.0;
  double tau = 1.0;                 // integrated autocorrelation time
  Eigen::Index truncation_lag = 0;  // last lag included in the sum
  bool supereffective = false;      // ess > n (antithetic chain)
};

/// n / (1 + 2 sum rho(k)) with Geyer's initial monotone sequence truncation.
/// tau is floored at 1/log10(n) so that antithetic chains stay finite.
EssResult effective_sample_size_detail(ConstVectorRef series);
double effective_sample_size(ConstVectorRef series);

/// Discrete KL(empirical || target) over n_bins equal bins on [lo, hi].
/// Samples outside the range count in the edge bins; target bin masses come
/// from adaptive midpoint quadrature and are renormalised over the range.
double kl_vs_target_1d(ConstVectorRef samples, const std::function<double(double)>& density, int n_bins, double lo,
                       double hi);

struct Components {
  Vector slow;  // leading singular direction of the centred samples
  Vector fast;  // trailing singular direction
  double slow_sd = 0.0;
  double fast_sd = 0.0;
  bool fast_reliable = true;
};

struct ComponentOptions {
  int max_iter = 400;  // largest Krylov dimension
  double tol = 1e-12;  // squared relative Ritz residual
  std::uint64_t seed = 7;
};

Components slow_fast_components(const SampleMatrix& samples, const ComponentOptions& opts = {});

/// Projections of every stored sample onto a direction.
Vector project(const SampleMatrix& samples, ConstVectorRef direction);

struct MseTrace {
  std::vector<std::int64_t> gradient_evals;
  Vector mse;
};

/// Running-mean MSE |mean_k - truth|^2 / d after each stored sample.
MseTrace mse_trace(const SampleMatrix& samples, ConstVectorRef truth, std::int64_t budget_per_sample);

/// Keeps every k-th row of a trace (rows k-1, 2k-1, ...), mirroring a chain
/// thinned on the fly.
ChainTrace thin(const ChainTrace& trace, std::int64_t k);

struct DiagnosticsReport {
  std::string label;
  std::int64_t budget = 0;  // post-burn-in gradient evaluations
  std::int64_t n_samples = 0;
  double delta = 0.0;
  int stages = 1;
  EssResult ess_slow;
  EssResult ess_fast;
  EssResult ess_statistic;
  Vector acf_slow;
  Vector acf_fast;
  Vector slow_direction;
  Vector fast_direction;
  bool fast_reliable = true;
  std::optional<double> kl;
  std::optional<MseTrace> mse;
};

struct AnalysisOptions {
  Eigen::Index max_lag = 100;
  /// When set, both components use these directions instead of the trace's own.
  std::optional<Vector> slow_direction;
  std::optional<Vector> fast_direction;
  /// 1-D targets: density and histogram range for the KL column.
  std::function<double(double)> density;
  int kl_bins = 100;
  double kl_lo = -1.0;
  double kl_hi = 1.0;
  /// Imaging targets: ground truth for the MSE trace.
  std::optional<Vector> truth;
};

DiagnosticsReport analyse_trace(const ChainTrace& trace, const AnalysisOptions& opts, const std::string& label = "");

struct Speedup {
  double slow = 0.0;
  double fast = 0.0;
  double statistic = 0.0;
};

/// candidate ESS / reference ESS per component. Throws BudgetMismatch when the
/// reports were computed at different gradient budgets.
Speedup speedup_report(const DiagnosticsReport& reference, const DiagnosticsReport& candidate);

}  // namespace skrock
