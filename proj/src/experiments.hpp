#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skrock/diagnostics.hpp"
#include "skrock/models.hpp"
#include "skrock/samplers.hpp"

namespace skrock::exp {

using json = nlohmann::json;

/// Names accepted by the "preset" field.
std::vector<std::string> preset_names();
/// Fully populated configuration for a named preset.
json preset(const std::string& name);

/// Applies the preset named in j (if any), then j itself as a merge patch,
/// then fills defaults. Throws InvalidArgument naming the offending field.
json resolve_config(const json& j);

struct SamplerBlock {
  std::string label;
  SamplerConfig config;
};

/// Model plus everything needed to analyse chains drawn from it.
struct Problem {
  ModelPtr model;
  std::optional<Vector> truth;
  std::function<double(double)> density;  // 1-D targets only
  double kl_lo = -1.0;
  double kl_hi = 1.0;
  Vector observation;
};

Problem build_problem(const json& resolved);

/// Turns the resolved sampler list into validated configs (steps, iteration
/// counts and seeds filled in).
std::vector<SamplerBlock> build_samplers(const json& resolved, const PosteriorModel& model);

/// Starting point named by the "init" field of a resolved config.
Vector initial_state(const json& resolved, const Problem& problem);

// Synthetic scenes.

/// Piecewise-smooth photographer-like scene in grey levels [0, 255].
Matrix cameraman_phantom(Eigen::Index rows, Eigen::Index cols);
/// Modified Shepp-Logan phantom with values in [0, 1].
Matrix shepp_logan(Eigen::Index rows, Eigen::Index cols);

struct UnmixingScene {
  Matrix endmembers;  // bands x materials
  Vector abundances;  // materials maps stacked, each rows x cols column-major
};
UnmixingScene synthetic_unmixing(Eigen::Index rows, Eigen::Index cols, Eigen::Index materials, Eigen::Index bands,
                                 std::uint64_t seed);

/// Noise level giving the requested blurred signal-to-noise ratio in dB.
double sigma_from_snr(ConstVectorRef clean, double snr_db);

// Commands. Each returns the manifest path it wrote and throws on failure.

std::filesystem::path output_root(const json& resolved);

std::filesystem::path cmd_sample(const std::filesystem::path& config_path);
std::filesystem::path cmd_analyze(const std::filesystem::path& manifest_path);
std::filesystem::path cmd_w2curves(const std::filesystem::path& config_path);

struct StabilityGrid {
  int s = 10;
  double eta = kDefaultDamping;
  double p_min = -200.0;
  double p_max = 0.0;
  double q2_max = 50.0;
  int resolution = 200;
  std::filesystem::path output_dir = "stability";
};
std::filesystem::path cmd_stability(const StabilityGrid& grid);

// Pieces of cmd_analyze that the acceptance suite reuses.

struct Comparison {
  DiagnosticsReport reference;  // MYULA thinned 1-in-s
  DiagnosticsReport candidate;  // SK-ROCK
  Speedup speedup;
};

/// Thins the MYULA trace to one sample per SK-ROCK step (taking any in-chain
/// thinning into account) and analyses both at equal budget.
Comparison compare(const ChainTrace& myula, const ChainTrace& skrock, const AnalysisOptions& opts);

}  // namespace skrock::exp
