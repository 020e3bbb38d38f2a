#include "skrock/samplers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "skrock/error.hpp"

namespace skrock {

std::string to_string(KernelType k) { return k == KernelType::myula ? "myula" : "skrock"; }

KernelType kernel_from_string(const std::string& name) {
  if (name == "myula" || name == "MYULA" || name == "em") return KernelType::myula;
  if (name == "skrock" || name == "SKROCK" || name == "sk-rock") return KernelType::skrock;
  throw InvalidArgument("unknown kernel '" + name + "'");
}

std::int64_t ChainTrace::post_burn_in_budget() const {
  const std::int64_t kept = std::max<std::int64_t>(0, config.n_iterations - config.burn_in);
  return kept * config.gradients_per_step();
}

double max_stepsize(const PosteriorModel& model, KernelType kernel, int s, double eta) {
  const double lip = model.lipschitz_total();
  if (kernel == KernelType::myula) return 2.0 / lip;
  if (s < 1 || s > kMaxStages) throw InvalidArgument("stages must lie in [1, " + std::to_string(kMaxStages) + "]");
  const double ls = s == 1 ? 2.0 : stability_interval_length(s, eta);
  return ls / lip;
}

void validate(const PosteriorModel& model, const SamplerConfig& c) {
  if (!(c.delta > 0.0) || !std::isfinite(c.delta)) throw InvalidArgument("delta must be positive and finite");
  if (c.n_iterations < 0) throw InvalidArgument("n_iterations must be non-negative");
  if (c.burn_in < 0) throw InvalidArgument("burn_in must be non-negative");
  if (c.thinning < 1) throw InvalidArgument("thinning must be at least 1");
  if (c.kernel == KernelType::skrock) {
    if (c.stages < 1 || c.stages > kMaxStages) {
      throw InvalidArgument("stages must lie in [1, " + std::to_string(kMaxStages) + "]");
    }
    if (!(c.eta >= 0.0)) throw InvalidArgument("eta must be non-negative");
  }
  const double bound = max_stepsize(model, c.kernel, c.stages, c.eta);
  const bool ok = c.kernel == KernelType::myula ? c.delta < bound : c.delta <= bound;
  if (!ok) {
    throw InvalidArgument("delta = " + std::to_string(c.delta) + " violates the " + to_string(c.kernel) +
                          " stability bound " + std::to_string(bound));
  }
}

// MarkovKernel

MarkovKernel::MarkovKernel(const PosteriorModel& model, KernelType type, double delta, int stages, double eta)
    : model_(model), type_(type), delta_(delta) {
  if (type == KernelType::skrock) coeffs_ = make_coefficients(stages, eta);
  const Eigen::Index d = model.dimension();
  grad_.resize(d);
  scratch_.resize(model.scratch_size());
  if (type == KernelType::skrock) {
    k_prev_.resize(d);
    k_prev2_.resize(d);
    k_cur_.resize(d);
  }
}

void MarkovKernel::step(VectorRef x, ConstVectorRef noise) {
  const double root = std::sqrt(2.0 * delta_);
  if (type_ == KernelType::myula) {
    model_.log_gradient(x, grad_, scratch_);
    x += delta_ * grad_ + root * noise;
    if (!x.allFinite()) throw PoisonedChain("non-finite MYULA state");
    return;
  }

  const auto& c = coeffs_;
  // K_0 = X, K_1 = X + mu_1 delta grad(X + nu_1 sqrt(2 delta) Z) + k_1 sqrt(2 delta) Z
  k_prev2_ = x;
  k_cur_ = x + (c.nu[0] * root) * noise;
  model_.log_gradient(k_cur_, grad_, scratch_);
  k_prev_ = x + (c.mu[0] * delta_) * grad_ + (c.k[0] * root) * noise;
  for (int j = 2; j <= c.s; ++j) {
    model_.log_gradient(k_prev_, grad_, scratch_);
    k_cur_ = (c.mu[j - 1] * delta_) * grad_ + c.nu[j - 1] * k_prev_ + c.k[j - 1] * k_prev2_;
    k_prev2_.swap(k_prev_);
    k_prev_.swap(k_cur_);
  }
  if (!k_prev_.allFinite()) throw PoisonedChain("non-finite SK-ROCK stage");
  x = k_prev_;
}

Vector myula_step(const PosteriorModel& model, ConstVectorRef x, double delta, ConstVectorRef noise) {
  MarkovKernel kernel(model, KernelType::myula, delta);
  Vector out = x;
  kernel.step(out, noise);
  return out;
}

Vector skrock_step(const PosteriorModel& model, ConstVectorRef x, const ChebCoefficients& coeffs, double delta,
                   ConstVectorRef noise) {
  MarkovKernel kernel(model, KernelType::skrock, delta, coeffs.s, coeffs.eta);
  Vector out = x;
  kernel.step(out, noise);
  return out;
}

void NormalSource::fill(VectorRef z) {
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal_(engine_);
}

ChainTrace run_chain(const PosteriorModel& model, const SamplerConfig& config, ConstVectorRef x0) {
  validate(model, config);
  const Eigen::Index d = model.dimension();
  if (x0.size() != d) {
    throw InvalidArgument("x0 has " + std::to_string(x0.size()) + " entries, model dimension is " + std::to_string(d));
  }
  if (!x0.allFinite()) throw InvalidArgument("x0 has non-finite entries");

  ChainTrace trace;
  trace.config = config;
  trace.init_label = model.initial_label();
  const std::int64_t kept = std::max<std::int64_t>(0, config.n_iterations - config.burn_in);
  const std::int64_t n_store = kept / config.thinning;
  if (config.store_samples) trace.samples.resize(n_store, d);
  if (config.store_trace_statistic) trace.trace_statistic.resize(n_store);
  trace.iterations.reserve(static_cast<std::size_t>(n_store));

  const auto start = std::chrono::steady_clock::now();
  MarkovKernel kernel(model, config.kernel, config.delta, config.stages, config.eta);
  NormalSource rng(config.seed);
  Vector x = x0;
  Vector z(d);
  std::int64_t row = 0;
  for (std::int64_t it = 1; it <= config.n_iterations; ++it) {
    rng.fill(z);
    try {
      kernel.step(x, z);
    } catch (const PoisonedChain& e) {
      throw PoisonedChain(e.what(), it);
    }
    trace.gradient_evals += kernel.gradients_per_step();
    const std::int64_t after = it - config.burn_in;
    if (after > 0 && after % config.thinning == 0 && row < n_store) {
      if (config.store_samples) trace.samples.row(row) = x.transpose();
      if (config.store_trace_statistic) trace.trace_statistic[row] = model.log_pi_lambda(x);
      trace.iterations.push_back(it);
      ++row;
    }
  }
  trace.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t block) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (block + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<ChainTrace> run_chains(const std::vector<ChainJob>& jobs, unsigned max_threads) {
  std::vector<ChainTrace> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  unsigned n_threads = max_threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : max_threads;
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        if (!jobs[i].model) throw InvalidArgument("chain job without a model");
        out[i] = run_chain(*jobs[i].model, jobs[i].config, jobs[i].x0);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace skrock
