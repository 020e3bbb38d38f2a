#include "skrock/skrock.h"

#include <cstring>
#include <new>
#include <string>

#include "experiments.hpp"
#include "skrock/analysis.hpp"
#include "skrock/diagnostics.hpp"
#include "skrock/error.hpp"

struct skr_model {
  skrock::ModelPtr model;
};

struct skr_trace {
  skrock::ChainTrace trace;
};

namespace {

thread_local std::string g_last_error;

template <class F>
skr_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return SKR_OK;
  } catch (const skrock::InvalidArgument& e) {
    g_last_error = e.what();
    return SKR_INVALID_ARGUMENT;
  } catch (const skrock::PoisonedChain& e) {
    g_last_error = e.what();
    return SKR_POISONED_CHAIN;
  } catch (const skrock::Divergence& e) {
    g_last_error = e.what();
    return SKR_DIVERGENT;
  } catch (const skrock::Unreachable& e) {
    g_last_error = e.what();
    return SKR_UNREACHABLE;
  } catch (const skrock::BudgetMismatch& e) {
    g_last_error = e.what();
    return SKR_BUDGET_MISMATCH;
  } catch (const skrock::IoError& e) {
    g_last_error = e.what();
    return SKR_IO_ERROR;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("malformed JSON: ") + e.what();
    return SKR_INVALID_ARGUMENT;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return SKR_IO_ERROR;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SKR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SKR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SKR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw skrock::InvalidArgument(what);
}

skrock::KernelType kernel_of(skr_kernel k) {
  require(k == SKR_KERNEL_MYULA || k == SKR_KERNEL_SKROCK, "unknown kernel");
  return k == SKR_KERNEL_MYULA ? skrock::KernelType::myula : skrock::KernelType::skrock;
}

skrock::StabilityFunctions stability_of(skr_kernel k, int stages, double eta) {
  return kernel_of(k) == skrock::KernelType::myula ? skrock::StabilityFunctions::em()
                                                    : skrock::StabilityFunctions::skrock(stages, eta);
}

skrock::Vector copy_vector(const double* p, size_t n) {
  require(p != nullptr || n == 0, "null array");
  return n ? skrock::Vector(Eigen::Map<const skrock::Vector>(p, static_cast<Eigen::Index>(n))) : skrock::Vector();
}

void copy_path(const std::filesystem::path& p, char* out, size_t capacity) {
  if (!out) return;
  const std::string s = p.string();
  require(capacity > s.size(), "manifest_out buffer too small");
  std::memcpy(out, s.c_str(), s.size() + 1);
}

skr_model* wrap(skrock::ModelPtr m) { return new skr_model{std::move(m)}; }

}  // namespace

extern "C" {

const char* skr_last_error(void) { return g_last_error.c_str(); }

const char* skr_status_name(skr_status status) {
  switch (status) {
    case SKR_OK: return "ok";
    case SKR_INVALID_ARGUMENT: return "invalid argument";
    case SKR_POISONED_CHAIN: return "poisoned chain";
    case SKR_DIVERGENT: return "divergent";
    case SKR_UNREACHABLE: return "unreachable";
    case SKR_BUDGET_MISMATCH: return "budget mismatch";
    case SKR_IO_ERROR: return "i/o error";
    case SKR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

skr_sampler_config skr_default_config(void) {
  skr_sampler_config c;
  c.kernel = SKR_KERNEL_MYULA;
  c.delta = 0.0;
  c.stages = 1;
  c.eta = skrock::kDefaultDamping;
  c.seed = 0;
  c.n_iterations = 0;
  c.burn_in = 0;
  c.thinning = 1;
  c.store_trace_statistic = 1;
  return c;
}

skr_status skr_model_gaussian(const double* variances, const double* mean, size_t dim, skr_model** out) {
  return guarded([&] {
    require(out && dim > 0, "need an output handle and dim > 0");
    *out = wrap(skrock::model_gaussian(copy_vector(variances, dim), mean ? copy_vector(mean, dim) : skrock::Vector()));
  });
}

skr_status skr_model_laplace_1d(double scale, double lambda, skr_model** out) {
  return guarded([&] {
    require(out, "null output handle");
    *out = wrap(skrock::model_laplace_1d(scale, lambda));
  });
}

skr_status skr_model_uniform_1d(double lambda, skr_model** out) {
  return guarded([&] {
    require(out, "null output handle");
    *out = wrap(skrock::model_uniform_1d(lambda));
  });
}

skr_status skr_model_from_config(const char* config_json, skr_model** out) {
  return guarded([&] {
    require(config_json && out, "null argument");
    const auto resolved = skrock::exp::resolve_config(nlohmann::json::parse(config_json));
    *out = wrap(skrock::exp::build_problem(resolved).model);
  });
}

void skr_model_free(skr_model* model) { delete model; }

size_t skr_model_dimension(const skr_model* model) {
  return model ? static_cast<size_t>(model->model->dimension()) : 0;
}

double skr_model_lipschitz(const skr_model* model) { return model ? model->model->lipschitz_total() : 0.0; }

double skr_model_lambda(const skr_model* model) { return model ? model->model->lambda() : 0.0; }

int64_t skr_model_gradient_evals(const skr_model* model) { return model ? model->model->gradient_evals() : 0; }

skr_status skr_model_log_gradient(const skr_model* model, const double* x, double* out) {
  return guarded([&] {
    require(model && x && out, "null argument");
    const auto d = model->model->dimension();
    const auto g = skrock::regularised_log_gradient(*model->model, Eigen::Map<const skrock::Vector>(x, d));
    std::memcpy(out, g.data(), sizeof(double) * static_cast<size_t>(d));
  });
}

skr_status skr_model_log_density(const skr_model* model, const double* x, double* out) {
  return guarded([&] {
    require(model && x && out, "null argument");
    *out = model->model->log_pi_lambda(Eigen::Map<const skrock::Vector>(x, model->model->dimension()));
  });
}

skr_status skr_max_stepsize(const skr_model* model, skr_kernel kernel, int stages, double eta, double* out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = skrock::max_stepsize(*model->model, kernel_of(kernel), stages, eta);
  });
}

skr_status skr_run_chain(const skr_model* model, const skr_sampler_config* config, const double* x0,
                         skr_trace** out) {
  return guarded([&] {
    require(model && config && out, "null argument");
    skrock::SamplerConfig c;
    c.kernel = kernel_of(config->kernel);
    c.delta = config->delta;
    c.stages = config->stages;
    c.eta = config->eta;
    c.seed = config->seed;
    c.n_iterations = config->n_iterations;
    c.burn_in = config->burn_in;
    c.thinning = config->thinning;
    c.store_trace_statistic = config->store_trace_statistic != 0;
    const auto d = model->model->dimension();
    const skrock::Vector start =
        x0 ? skrock::Vector(Eigen::Map<const skrock::Vector>(x0, d)) : model->model->initial_state();
    *out = new skr_trace{skrock::run_chain(*model->model, c, start)};
  });
}

void skr_trace_free(skr_trace* trace) { delete trace; }

size_t skr_trace_rows(const skr_trace* trace) { return trace ? static_cast<size_t>(trace->trace.samples.rows()) : 0; }

size_t skr_trace_dimension(const skr_trace* trace) {
  return trace ? static_cast<size_t>(trace->trace.samples.cols()) : 0;
}

const double* skr_trace_samples(const skr_trace* trace) { return trace ? trace->trace.samples.data() : nullptr; }

const double* skr_trace_statistic(const skr_trace* trace) {
  return trace && trace->trace.trace_statistic.size() ? trace->trace.trace_statistic.data() : nullptr;
}

int64_t skr_trace_gradient_evals(const skr_trace* trace) { return trace ? trace->trace.gradient_evals : 0; }

skr_status skr_stability(skr_kernel method, int stages, double eta, double z, double* r1, double* r2) {
  return guarded([&] {
    require(r1 && r2, "null argument");
    const auto stab = stability_of(method, stages, eta);
    *r1 = stab.r1(z);
    *r2 = stab.r2(z);
  });
}

skr_status skr_optimal_stage_step(double kappa, double eta, double ell, int* stages, double* delta) {
  return guarded([&] {
    require(stages && delta, "null argument");
    const auto r = skrock::optimal_stage_and_step(kappa, eta, ell);
    *stages = r.s;
    *delta = r.delta;
  });
}

skr_status skr_w2(const double* variances, size_t dim, skr_kernel method, int stages, double eta, double delta,
                  const double* x0, int64_t n, double* out) {
  return guarded([&] {
    require(out && dim > 0, "need an output and dim > 0");
    const auto target = skrock::make_target(copy_vector(variances, dim));
    const skrock::Vector start = x0 ? copy_vector(x0, dim) : skrock::Vector::Zero(static_cast<Eigen::Index>(dim));
    *out = skrock::w2_distance(target, stability_of(method, stages, eta), delta, start, n).total;
  });
}

skr_status skr_gradient_budget(const double* variances, size_t dim, skr_kernel method, double epsilon,
                               const double* x0, double eta, int64_t* evals, int* stages, double* delta) {
  return guarded([&] {
    require(evals && stages && delta && dim > 0, "null argument");
    const auto target = skrock::make_target(copy_vector(variances, dim));
    const skrock::Vector start = x0 ? copy_vector(x0, dim) : skrock::Vector::Zero(static_cast<Eigen::Index>(dim));
    const auto m = kernel_of(method) == skrock::KernelType::myula ? skrock::Method::em : skrock::Method::skrock;
    const auto r = skrock::gradient_budget(target, m, epsilon, start, eta);
    *evals = r.gradient_evals;
    *stages = r.stages;
    *delta = r.delta;
  });
}

skr_status skr_ess(const double* series, size_t n, double* out) {
  return guarded([&] {
    require(out, "null argument");
    *out = skrock::effective_sample_size(copy_vector(series, n));
  });
}

skr_status skr_acf(const double* series, size_t n, size_t max_lag, double* out) {
  return guarded([&] {
    require(out, "null argument");
    const auto acf = skrock::autocorrelation(copy_vector(series, n), static_cast<Eigen::Index>(max_lag));
    std::memcpy(out, acf.data(), sizeof(double) * static_cast<size_t>(acf.size()));
  });
}

skr_status skr_cmd_sample(const char* config_path, char* manifest_out, size_t capacity) {
  return guarded([&] {
    require(config_path, "null path");
    copy_path(skrock::exp::cmd_sample(config_path), manifest_out, capacity);
  });
}

skr_status skr_cmd_analyze(const char* manifest_path, char* manifest_out, size_t capacity) {
  return guarded([&] {
    require(manifest_path, "null path");
    copy_path(skrock::exp::cmd_analyze(manifest_path), manifest_out, capacity);
  });
}

skr_status skr_cmd_w2curves(const char* config_path, char* manifest_out, size_t capacity) {
  return guarded([&] {
    require(config_path, "null path");
    copy_path(skrock::exp::cmd_w2curves(config_path), manifest_out, capacity);
  });
}

skr_status skr_cmd_stability(int stages, double eta, double p_min, double p_max, double q2_max, int resolution,
                             const char* output_dir, char* manifest_out, size_t capacity) {
  return guarded([&] {
    skrock::exp::StabilityGrid g;
    g.s = stages;
    g.eta = eta;
    g.p_min = p_min;
    g.p_max = p_max;
    g.q2_max = q2_max;
    g.resolution = resolution;
    if (output_dir) g.output_dir = output_dir;
    copy_path(skrock::exp::cmd_stability(g), manifest_out, capacity);
  });
}

}  // extern "C"
