#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "skrock/chebyshev.hpp"
#include "skrock/models.hpp"

namespace skrock {

enum class KernelType { myula, skrock };

std::string to_string(KernelType k);
KernelType kernel_from_string(const std::string& name);

struct SamplerConfig {
  KernelType kernel = KernelType::myula;
  double delta = 0.0;
  int stages = 1;  // SK-ROCK only
  double eta = kDefaultDamping;
  std::uint64_t seed = 0;
  std::int64_t n_iterations = 0;  // total, burn-in included
  std::int64_t burn_in = 0;
  std::int64_t thinning = 1;
  bool store_trace_statistic = true;
  bool store_samples = true;

  int gradients_per_step() const { return kernel == KernelType::skrock ? stages : 1; }
};

/// Samples stored row by row.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ChainTrace {
  SamplerConfig config;
  SampleMatrix samples;          // stored iterations x dimension
  Vector trace_statistic;        // log pi^lambda at each stored iteration
  std::vector<std::int64_t> iterations;  // 1-based iteration index of each stored row
  std::int64_t gradient_evals = 0;       // every iteration, burn-in included
  double wall_time = 0.0;                // seconds
  std::string init_label;

  /// Gradient evaluations spent after burn-in.
  std::int64_t post_burn_in_budget() const;
  std::int64_t stored() const { return samples.rows(); }
};

/// Largest admissible step: 2/L for MYULA (exclusive), l_s/L for SK-ROCK
/// (inclusive), with L = L_f + 1/lambda. For s = 1 the exact interval
/// length 2 replaces the l_s formula.
double max_stepsize(const PosteriorModel& model, KernelType kernel, int s = 1, double eta = kDefaultDamping);

/// Throws InvalidArgument naming the offending field.
void validate(const PosteriorModel& model, const SamplerConfig& config);

/// x - delta grad f(x) - (delta/lambda)(x - prox(x)) + sqrt(2 delta) noise
Vector myula_step(const PosteriorModel& model, ConstVectorRef x, double delta, ConstVectorRef noise);

/// One s-stage SK-ROCK step driven by a single noise vector.
Vector skrock_step(const PosteriorModel& model, ConstVectorRef x, const ChebCoefficients& coeffs, double delta,
                   ConstVectorRef noise);

/// A Markov kernel with preallocated workspace. Not thread-safe; use one per
/// chain.
class MarkovKernel {
 public:
  MarkovKernel(const PosteriorModel& model, KernelType type, double delta, int stages = 1,
               double eta = kDefaultDamping);

  /// Advances x in place using the supplied standard normal noise.
  void step(VectorRef x, ConstVectorRef noise);

  int gradients_per_step() const { return type_ == KernelType::skrock ? coeffs_.s : 1; }
  const ChebCoefficients& coefficients() const { return coeffs_; }

 private:
  const PosteriorModel& model_;
  KernelType type_;
  double delta_;
  ChebCoefficients coeffs_;
  Vector grad_, scratch_, k_prev_, k_prev2_, k_cur_;
};

/// Standard normal draws from a per-chain 64-bit Mersenne twister.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}
  void fill(VectorRef z);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Runs one chain from x0. Deterministic given (model, config, x0). Non-finite
/// states raise PoisonedChain carrying the iteration index.
ChainTrace run_chain(const PosteriorModel& model, const SamplerConfig& config, ConstVectorRef x0);

/// Seed of block i derived from a master seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t block);

struct ChainJob {
  const PosteriorModel* model = nullptr;
  SamplerConfig config;
  Vector x0;
};

/// Runs independent chains concurrently on up to max_threads threads
/// (0 = hardware concurrency). Results come back in job order; the first
/// failure is rethrown after every chain has finished.
std::vector<ChainTrace> run_chains(const std::vector<ChainJob>& jobs, unsigned max_threads = 0);

}  // namespace skrock
