#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <set>

#include "io.hpp"
#include "skrock/analysis.hpp"
#include "skrock/error.hpp"
#include "skrock/operators.hpp"

namespace skrock::exp {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kExperiments = {"gaussian2d",   "laplace1d", "uniform1d", "deconvolution",
                                            "unmixing",     "tomography", "w2curves", "stability"};

// Stream indices for seeds that are not sampler blocks.
constexpr std::uint64_t kNoiseStream = 1000;
constexpr std::uint64_t kMaskStream = 2000;
constexpr std::uint64_t kSceneStream = 3000;

json sampler(const std::string& label, const std::string& kernel, int stages, json delta, std::int64_t thinning = 1) {
  json s{{"label", label}, {"kernel", kernel}, {"stages", stages}, {"thinning", thinning}};
  if (!delta.is_null()) s["delta"] = delta;
  return s;
}

json fraction(double f) { return json{{"fraction", f}}; }

json model_defaults(const std::string& experiment) {
  if (experiment == "gaussian2d") return {{"variances", {1e-2, 1.0}}};
  if (experiment == "laplace1d") return {{"scale", 1.0}, {"lambda", 1e-5}};
  if (experiment == "uniform1d") return {{"lambda", 1e-5}};
  if (experiment == "deconvolution") {
    return {{"rows", 64},      {"cols", 64},           {"kernel_size", 5}, {"sigma", 0.47},
            {"snr_db", nullptr}, {"beta", 0.047},      {"lambda", nullptr}, {"image", nullptr},
            {"tv_tol", 1e-4},  {"tv_max_iter", 100}};
  }
  if (experiment == "tomography") {
    return {{"rows", 32},  {"cols", 32},      {"keep_fraction", 0.15}, {"mask", "radial"}, {"sigma", 1e-2},
            {"beta", 1e2}, {"lambda", 2e-5},  {"image", nullptr},      {"tv_tol", 1e-4},   {"tv_max_iter", 100}};
  }
  if (experiment == "unmixing") {
    return {{"rows", 16},        {"cols", 16},     {"materials", 3},   {"bands", 224},
            {"sigma", 8.4e-4},   {"alpha", 25.0},  {"beta", 185.0},    {"lambda", 7.08e-7},
            {"prox_order", {"tv", "l1", "nonnegative"}},               {"endmembers_csv", nullptr},
            {"tv_tol", 1e-4},    {"tv_max_iter", 100}};
  }
  return json::object();
}

json analysis_defaults() { return {{"max_lag", 100}, {"kl_bins", 100}, {"kl_range", nullptr}}; }

[[noreturn]] void field_error(const std::string& field, const std::string& why) {
  throw InvalidArgument("config field '" + field + "': " + why);
}

double number(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key) || !j.at(key).is_number()) field_error(path + key, "expected a number");
  return j.at(key).get<double>();
}

double positive(const json& j, const std::string& key, const std::string& path) {
  const double v = number(j, key, path);
  if (!(v > 0.0) || !std::isfinite(v)) field_error(path + key, "must be positive");
  return v;
}

Eigen::Index count(const json& j, const std::string& key, const std::string& path, Eigen::Index min = 1) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) field_error(path + key, "expected an integer");
  const auto v = j.at(key).get<Eigen::Index>();
  if (v < min) field_error(path + key, "must be at least " + std::to_string(min));
  return v;
}

TvSolverOptions tv_options(const json& m) {
  TvSolverOptions o;
  o.tol = positive(m, "tv_tol", "model.");
  o.max_iter = static_cast<int>(count(m, "tv_max_iter", "model."));
  return o;
}

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Vector gaussian_noise(Eigen::Index n, std::uint64_t seed) {
  Vector z(n);
  NormalSource(seed).fill(z);
  return z;
}

}  // namespace

// Presets

std::vector<std::string> preset_names() {
  return {"gaussian_fig1", "laplace_table1", "uniform_table2", "cameraman_sec42", "unmixing_sec43",
          "tomography_sec44", "w2curves_fig3"};
}

json preset(const std::string& name) {
  if (name == "gaussian_fig1") {
    return {{"experiment", "gaussian2d"},
            {"seed", 1},
            {"output_dir", "gaussian_fig1"},
            {"model", {{"variances", {1e-2, 1.0}}}},
            {"budget", {{"gradient_evals", 1000}, {"burn_in", 0}}},
            {"samplers", {sampler("myula", "myula", 1, 1.98e-2), sampler("skrock_s2", "skrock", 2, nullptr)}}};
  }
  if (name == "laplace_table1" || name == "uniform_table2") {
    const bool laplace = name == "laplace_table1";
    json m = laplace ? json{{"scale", 1.0}, {"lambda", 1e-5}} : json{{"lambda", 1e-5}};
    return {{"experiment", laplace ? "laplace1d" : "uniform1d"},
            {"seed", laplace ? 11 : 12},
            {"output_dir", name},
            {"model", m},
            {"budget", {{"gradient_evals", 15000000}, {"burn_in", 150000}}},
            {"samplers",
             {sampler("myula", "myula", 1, 1e-5, 5), sampler("skrock_s10", "skrock", 10, 1.7e-3),
              sampler("skrock_s15", "skrock", 15, 4.0e-3)}},
            {"analysis", {{"kl_range", laplace ? json{-10.0, 10.0} : json{-1.0, 1.0}}}}};
  }
  if (name == "cameraman_sec42") {
    return {{"experiment", "deconvolution"},
            {"seed", 42},
            {"output_dir", name},
            {"model", {{"rows", 64}, {"cols", 64}, {"kernel_size", 5}, {"sigma", 0.47}, {"beta", 0.047}, {"lambda", 0.21}}},
            {"budget", {{"gradient_evals", 100005}, {"burn_in", 15000}}},
            {"samplers", {sampler("myula", "myula", 1, 0.106, 15), sampler("skrock_s15", "skrock", 15, 34.30)}}};
  }
  if (name == "tomography_sec44") {
    return {{"experiment", "tomography"},
            {"seed", 44},
            {"output_dir", name},
            {"model", {{"rows", 32}, {"cols", 32}, {"keep_fraction", 0.15}, {"sigma", 1e-2}, {"beta", 1e2}, {"lambda", 2e-5}}},
            {"budget", {{"gradient_evals", 200000}, {"burn_in", 20000}}},
            {"samplers", {sampler("myula", "myula", 1, 1.67e-5, 10), sampler("skrock_s10", "skrock", 10, 2.30e-3)}}};
  }
  if (name == "unmixing_sec43") {
    return {{"experiment", "unmixing"},
            {"seed", 43},
            {"output_dir", name},
            {"model",
             {{"rows", 16}, {"cols", 16}, {"materials", 3}, {"bands", 224}, {"sigma", 8.4e-4}, {"alpha", 25.0},
              {"beta", 185.0}, {"lambda", 7.08e-7}}},
            {"budget", {{"gradient_evals", 150000}, {"burn_in", 15000}}},
            {"samplers",
             {sampler("myula", "myula", 1, fraction(0.5), 15), sampler("skrock_s15", "skrock", 15, fraction(0.8))}}};
  }
  if (name == "w2curves_fig3") {
    return {{"experiment", "w2curves"},
            {"output_dir", name},
            {"dimension", 100},
            {"kappas", {1e2, 1e3, 1e4}},
            {"epsilons2", {1e-1}},
            {"eta", kDefaultDamping},
            {"em_safety", 1.0}};
  }
  throw InvalidArgument("unknown preset '" + name + "'");
}

json resolve_config(const json& j) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  json r = json::object();
  if (j.contains("preset") && !j.at("preset").is_null()) {
    if (!j.at("preset").is_string()) field_error("preset", "expected a string");
    r = preset(j.at("preset").get<std::string>());
  }
  r.merge_patch(j);

  if (!r.contains("experiment") || !r.at("experiment").is_string()) field_error("experiment", "missing");
  const std::string e = r.at("experiment").get<std::string>();
  if (!kExperiments.count(e)) field_error("experiment", "unknown experiment '" + e + "'");
  if (!r.contains("output_dir")) r["output_dir"] = e;
  if (!r.at("output_dir").is_string()) field_error("output_dir", "expected a string");
  if (!r.contains("seed")) r["seed"] = 0;
  if (!r.at("seed").is_number_unsigned() && !(r.at("seed").is_number_integer() && r.at("seed").get<long long>() >= 0)) {
    field_error("seed", "expected a non-negative integer");
  }

  if (e == "w2curves") {
    json d{{"dimension", 100}, {"kappas", {1e2, 1e3, 1e4}}, {"epsilons2", {1e-1}}, {"eta", kDefaultDamping},
           {"em_safety", 1.0}};
    d.merge_patch(r);
    count(d, "dimension", "");
    for (const char* key : {"kappas", "epsilons2"}) {
      if (!d.at(key).is_array() || d.at(key).empty()) field_error(key, "expected a non-empty array");
      for (const auto& v : d.at(key)) {
        if (!v.is_number() || !(v.get<double>() > 0.0)) field_error(key, "entries must be positive numbers");
      }
    }
    for (const auto& k : d.at("kappas")) {
      if (k.get<double>() < 1.0) field_error("kappas", "entries must be at least 1");
    }
    if (number(d, "eta", "") < 0.0) field_error("eta", "must be non-negative");
    positive(d, "em_safety", "");
    return d;
  }
  if (e == "stability") {
    json d{{"s", 10}, {"eta", kDefaultDamping}, {"pmin", -200.0}, {"pmax", 0.0}, {"q2max", 50.0}, {"resolution", 200}};
    d.merge_patch(r);
    return d;
  }

  json model = model_defaults(e);
  if (r.contains("model")) {
    if (!r.at("model").is_object()) field_error("model", "expected an object");
    model.merge_patch(r.at("model"));
    // merge_patch drops nulls; keep the documented keys present.
    const json defaults = model_defaults(e);
    for (auto& [k, v] : defaults.items()) {
      if (!model.contains(k)) model[k] = v;
    }
    for (auto& [k, v] : r.at("model").items()) {
      if (v.is_null()) model[k] = nullptr;
    }
  }
  r["model"] = model;

  json analysis = analysis_defaults();
  if (r.contains("analysis")) analysis.merge_patch(r.at("analysis"));
  if (!analysis.contains("kl_range")) analysis["kl_range"] = nullptr;
  r["analysis"] = analysis;
  if (!r.contains("init")) r["init"] = "default";
  if (!r.contains("budget")) r["budget"] = json::object();
  if (!r.at("budget").contains("burn_in")) r["budget"]["burn_in"] = 0;
  if (!r.contains("samplers") || !r.at("samplers").is_array() || r.at("samplers").empty()) {
    field_error("samplers", "expected a non-empty array of sampler blocks");
  }
  return r;
}

// Scenes

Matrix cameraman_phantom(Eigen::Index rows, Eigen::Index cols) {
  if (rows < 8 || cols < 8) throw InvalidArgument("phantom needs at least 8x8 pixels");
  Matrix img(rows, cols);
  auto inside_ellipse = [](double u, double v, double cu, double cv, double ru, double rv) {
    const double a = (u - cu) / ru;
    const double b = (v - cv) / rv;
    return a * a + b * b <= 1.0;
  };
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double u = (i + 0.5) / rows;  // vertical, 0 at the top
      const double v = (j + 0.5) / cols;
      // Bright sky with a soft vertical gradient, grass below the horizon.
      double val = u < 0.62 ? 190.0 + 30.0 * u : 120.0 - 40.0 * (u - 0.62);
      // Distant building on the right.
      if (v > 0.72 && v < 0.9 && u > 0.45 && u < 0.62) val = 160.0;
      // Coat and body.
      if (v > 0.28 && v < 0.58 && u > 0.32 && u < 0.8) val = 25.0;
      // Head.
      if (inside_ellipse(u, v, 0.24, 0.45, 0.09, 0.07)) val = 40.0;
      // Camera on its tripod head.
      if (v > 0.55 && v < 0.7 && u > 0.28 && u < 0.38) val = 15.0;
      // Tripod legs.
      const double leg = std::abs(v - (0.62 + 0.25 * (u - 0.38)));
      if (u > 0.38 && u < 0.95 && leg < 0.015) val = 10.0;
      const double leg2 = std::abs(v - (0.62 - 0.2 * (u - 0.38)));
      if (u > 0.38 && u < 0.95 && leg2 < 0.015) val = 10.0;
      img(i, j) = val;
    }
  }
  return img;
}

Matrix shepp_logan(Eigen::Index rows, Eigen::Index cols) {
  if (rows < 8 || cols < 8) throw InvalidArgument("phantom needs at least 8x8 pixels");
  // value, semi-axis a (x), semi-axis b (y), centre x, centre y, angle (degrees)
  static const double ellipses[10][6] = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},         {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
      {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},     {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
      {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},        {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
      {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},      {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
      {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0}};
  Matrix img = Matrix::Zero(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double x = -1.0 + (2.0 * j + 1.0) / cols;
      const double y = 1.0 - (2.0 * i + 1.0) / rows;
      for (const auto& e : ellipses) {
        const double t = e[5] * std::numbers::pi / 180.0;
        const double xr = (x - e[3]) * std::cos(t) + (y - e[4]) * std::sin(t);
        const double yr = -(x - e[3]) * std::sin(t) + (y - e[4]) * std::cos(t);
        if ((xr * xr) / (e[1] * e[1]) + (yr * yr) / (e[2] * e[2]) <= 1.0) img(i, j) += e[0];
      }
    }
  }
  return img.cwiseMax(0.0).cwiseMin(1.0);
}

UnmixingScene synthetic_unmixing(Eigen::Index rows, Eigen::Index cols, Eigen::Index materials, Eigen::Index bands,
                                 std::uint64_t seed) {
  if (rows < 2 || cols < 2 || materials < 1 || bands < materials) {
    throw InvalidArgument("unmixing scene needs >= 2x2 pixels, >= 1 material and bands >= materials");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Smooth reflectance spectra in (0, 1): a baseline plus a few Gaussian bumps.
  UnmixingScene scene;
  scene.endmembers.resize(bands, materials);
  for (Eigen::Index m = 0; m < materials; ++m) {
    const double base = 0.1 + 0.3 * unif(rng);
    std::vector<std::array<double, 3>> bumps(3);
    for (auto& b : bumps) b = {0.15 + 0.45 * unif(rng), unif(rng), 0.05 + 0.15 * unif(rng)};
    for (Eigen::Index b = 0; b < bands; ++b) {
      const double t = bands == 1 ? 0.0 : static_cast<double>(b) / (bands - 1);
      double v = base;
      for (const auto& bump : bumps) {
        const double d = (t - bump[1]) / bump[2];
        v += bump[0] * std::exp(-0.5 * d * d);
      }
      scene.endmembers(b, m) = std::min(v, 0.95);
    }
  }

  // Abundances: each material dominates a seeded region with smooth
  // transitions; pixels far from every centre stay sparse.
  std::vector<std::pair<double, double>> centres;
  for (Eigen::Index m = 0; m < materials; ++m) centres.emplace_back(unif(rng), unif(rng));
  const Eigen::Index n = rows * cols;
  scene.abundances.resize(materials * n);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double u = (i + 0.5) / rows;
      const double v = (j + 0.5) / cols;
      std::vector<double> w(materials);
      double total = 0.0;
      for (Eigen::Index m = 0; m < materials; ++m) {
        const double du = u - centres[m].first;
        const double dv = v - centres[m].second;
        w[m] = std::exp(-(du * du + dv * dv) / 0.02);
        if (w[m] < 0.05) w[m] = 0.0;
        total += w[m];
      }
      if (total == 0.0) {
        Eigen::Index best = 0;
        double best_d = 1e300;
        for (Eigen::Index m = 0; m < materials; ++m) {
          const double d = std::hypot(u - centres[m].first, v - centres[m].second);
          if (d < best_d) best_d = d, best = m;
        }
        w[best] = total = 1.0;
      }
      for (Eigen::Index m = 0; m < materials; ++m) scene.abundances[m * n + i + j * rows] = w[m] / total;
    }
  }
  return scene;
}

double sigma_from_snr(ConstVectorRef clean, double snr_db) {
  const double mean = clean.mean();
  const double var = (clean.array() - mean).square().mean();
  if (!(var > 0.0)) throw InvalidArgument("SNR is undefined for a constant signal");
  return std::sqrt(var / std::pow(10.0, snr_db / 10.0));
}

// Problems

Problem build_problem(const json& r) {
  const std::string e = r.at("experiment").get<std::string>();
  const json& m = r.at("model");
  const auto seed = r.at("seed").get<std::uint64_t>();
  Problem p;

  if (e == "gaussian2d") {
    if (!m.at("variances").is_array()) field_error("model.variances", "expected an array");
    const auto v = m.at("variances").get<std::vector<double>>();
    for (double x : v) {
      if (!(x > 0.0)) field_error("model.variances", "entries must be positive");
    }
    p.model = model_gaussian(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    return p;
  }
  if (e == "laplace1d") {
    const double scale = positive(m, "scale", "model.");
    p.model = model_laplace_1d(scale, positive(m, "lambda", "model."));
    p.density = [scale](double x) { return std::exp(-std::abs(x) / scale) / (2.0 * scale); };
    p.kl_lo = -10.0 * scale;
    p.kl_hi = 10.0 * scale;
  } else if (e == "uniform1d") {
    p.model = model_uniform_1d(positive(m, "lambda", "model."));
    p.density = [](double x) { return std::abs(x) <= 1.0 ? 0.5 : 0.0; };
  } else if (e == "deconvolution") {
    Matrix image = m.at("image").is_string() ? io::read_image(m.at("image").get<std::string>())
                                             : cameraman_phantom(count(m, "rows", "model."), count(m, "cols", "model."));
    const ImageShape shape{image.rows(), image.cols(), 1};
    const Eigen::Index k = count(m, "kernel_size", "model.");
    if (k % 2 == 0) field_error("model.kernel_size", "must be odd");
    auto blur = make_blur(uniform_kernel(k), shape.rows, shape.cols);
    const Vector truth = flatten(image);
    const Vector clean = blur->apply(truth);
    const double sigma = m.at("snr_db").is_number() ? sigma_from_snr(clean, m.at("snr_db").get<double>())
                                                    : positive(m, "sigma", "model.");
    p.observation = clean + sigma * gaussian_noise(clean.size(), derive_seed(seed, kNoiseStream));
    const double beta = positive(m, "beta", "model.");
    const double lambda = m.at("lambda").is_number() ? positive(m, "lambda", "model.")
                                                     : default_lambda(blur->operator_norm_sq() / (sigma * sigma));
    p.model = model_deconvolution(p.observation, shape, blur, sigma, beta, lambda, tv_options(m));
    p.truth = truth;
  } else if (e == "tomography") {
    Matrix image = m.at("image").is_string() ? io::read_image(m.at("image").get<std::string>())
                                             : shepp_logan(count(m, "rows", "model."), count(m, "cols", "model."));
    const ImageShape shape{image.rows(), image.cols(), 1};
    const double keep = positive(m, "keep_fraction", "model.");
    if (keep > 1.0) field_error("model.keep_fraction", "must lie in (0, 1]");
    const std::string pattern = m.at("mask").get<std::string>();
    if (pattern != "radial" && pattern != "uniform") field_error("model.mask", "expected 'radial' or 'uniform'");
    auto mask = make_fourier_mask(shape.rows, shape.cols, keep, derive_seed(seed, kMaskStream),
                                  pattern == "radial" ? MaskPattern::radial : MaskPattern::uniform);
    const Vector truth = flatten(image);
    const double sigma = positive(m, "sigma", "model.");
    const Vector clean = mask->apply(truth);
    p.observation = clean + sigma * gaussian_noise(clean.size(), derive_seed(seed, kNoiseStream));
    p.model = model_tomography(p.observation, shape, mask, sigma, positive(m, "beta", "model."),
                               positive(m, "lambda", "model."), tv_options(m));
    p.truth = truth;
  } else if (e == "unmixing") {
    const Eigen::Index rows = count(m, "rows", "model.");
    const Eigen::Index cols = count(m, "cols", "model.");
    UnmixingScene scene = synthetic_unmixing(rows, cols, count(m, "materials", "model."), count(m, "bands", "model."),
                                             derive_seed(seed, kSceneStream));
    if (m.at("endmembers_csv").is_string()) {
      Matrix a = io::read_csv_matrix(m.at("endmembers_csv").get<std::string>());
      if (a.cols() != scene.endmembers.cols()) field_error("model.endmembers_csv", "column count must equal materials");
      scene.endmembers = std::move(a);
    }
    const ImageShape shape{rows, cols, scene.endmembers.cols()};
    auto mixing = make_mixing(scene.endmembers, shape.pixels());
    std::vector<PenaltyTerm> order;
    for (const auto& t : m.at("prox_order")) {
      const std::string s = t.get<std::string>();
      if (s == "tv") order.push_back(PenaltyTerm::tv);
      else if (s == "l1") order.push_back(PenaltyTerm::l1);
      else if (s == "nonnegative") order.push_back(PenaltyTerm::nonnegative);
      else field_error("model.prox_order", "unknown term '" + s + "'");
    }
    const double sigma = positive(m, "sigma", "model.");
    const Vector clean = mixing->apply(scene.abundances);
    p.observation = clean + sigma * gaussian_noise(clean.size(), derive_seed(seed, kNoiseStream));
    p.model = model_unmixing(p.observation, shape, mixing, sigma, positive(m, "alpha", "model."),
                             positive(m, "beta", "model."), positive(m, "lambda", "model."), order, tv_options(m));
    p.truth = scene.abundances;
  } else {
    throw InvalidArgument("experiment '" + e + "' does not define a posterior");
  }

  const json& range = r.at("analysis").at("kl_range");
  if (range.is_array()) {
    if (range.size() != 2 || !(range[0].get<double>() < range[1].get<double>())) {
      field_error("analysis.kl_range", "expected [lo, hi] with lo < hi");
    }
    p.kl_lo = range[0].get<double>();
    p.kl_hi = range[1].get<double>();
  }
  return p;
}

std::vector<SamplerBlock> build_samplers(const json& r, const PosteriorModel& model) {
  const auto seed = r.at("seed").get<std::uint64_t>();
  const json& budget = r.at("budget");
  std::vector<SamplerBlock> blocks;
  std::set<std::string> labels;
  std::size_t index = 0;
  for (const json& s : r.at("samplers")) {
    const std::string path = "samplers[" + std::to_string(index) + "].";
    SamplerBlock b;
    if (!s.contains("kernel") || !s.at("kernel").is_string()) field_error(path + "kernel", "missing");
    b.config.kernel = kernel_from_string(s.at("kernel").get<std::string>());
    b.config.stages = b.config.kernel == KernelType::skrock ? static_cast<int>(count(s, "stages", path)) : 1;
    b.config.eta = s.value("eta", kDefaultDamping);
    b.config.thinning = s.value("thinning", std::int64_t{1});
    b.config.store_trace_statistic = s.value("store_trace_statistic", true);
    b.config.seed = s.contains("seed") ? s.at("seed").get<std::uint64_t>() : derive_seed(seed, index);
    b.label = s.value("label", to_string(b.config.kernel) + (b.config.kernel == KernelType::skrock
                                                                 ? "_s" + std::to_string(b.config.stages)
                                                                 : std::string()));
    if (!labels.insert(b.label).second) field_error(path + "label", "duplicate label '" + b.label + "'");

    const double bound = max_stepsize(model, b.config.kernel, b.config.stages, b.config.eta);
    if (!s.contains("delta") || s.at("delta").is_null()) {
      // 1/L for MYULA, 95% of the stability bound for SK-ROCK.
      b.config.delta = (b.config.kernel == KernelType::myula ? 0.5 : 0.95) * bound;
    } else if (s.at("delta").is_object()) {
      const double f = positive(s.at("delta"), "fraction", path + "delta.");
      b.config.delta = f * bound;
    } else {
      b.config.delta = positive(s, "delta", path);
    }

    const std::int64_t per_step = b.config.gradients_per_step();
    if (s.contains("n_iterations")) {
      b.config.n_iterations = count(s, "n_iterations", path, 0);
      b.config.burn_in = s.contains("burn_in") ? count(s, "burn_in", path, 0) : 0;
    } else {
      const std::int64_t evals = count(budget, "gradient_evals", "budget.", 0);
      const std::int64_t burn = count(budget, "burn_in", "budget.", 0);
      if (evals % per_step != 0 || burn % per_step != 0) {
        field_error("budget", "gradient budgets must be divisible by the " + std::to_string(per_step) +
                                  " stages of sampler '" + b.label + "'");
      }
      b.config.n_iterations = (evals + burn) / per_step;
      b.config.burn_in = burn / per_step;
    }
    try {
      validate(model, b.config);
    } catch (const InvalidArgument& err) {
      field_error(path + "delta", err.what());
    }
    blocks.push_back(b);
    ++index;
  }
  return blocks;
}

Vector initial_state(const json& r, const Problem& p) {
  const std::string init = r.at("init").get<std::string>();
  if (init == "default" || init == "adjoint") return p.model->initial_state();
  if (init == "zeros") return Vector::Zero(p.model->dimension());
  field_error("init", "expected 'default', 'adjoint' or 'zeros'");
}

// Commands

fs::path output_root(const json& r) {
  fs::path dir = r.at("output_dir").get<std::string>();
  if (const char* env = std::getenv("SKROCK_OUTPUT_ROOT"); env && *env && dir.is_relative()) dir = fs::path(env) / dir;
  return dir;
}

namespace {

json file_entry(const fs::path& root, const fs::path& file) {
  return {{"path", fs::relative(file, root).generic_string()}, {"sha256", io::sha256_file(file)}};
}

std::string stem_for(const std::string& experiment, const DiagnosticsReport& rep, KernelType k) {
  return experiment + "_" + to_string(k) + "_" + std::to_string(rep.stages);
}

json ess_json(const EssResult& e) {
  return {{"ess", e.ess}, {"tau", e.tau}, {"truncation_lag", e.truncation_lag}, {"supereffective", e.supereffective}};
}

json report_json(const DiagnosticsReport& r) {
  json j{{"label", r.label},
         {"budget", r.budget},
         {"n_samples", r.n_samples},
         {"delta", r.delta},
         {"stages", r.stages},
         {"ess_slow", ess_json(r.ess_slow)},
         {"ess_fast", ess_json(r.ess_fast)},
         {"ess_logpi", ess_json(r.ess_statistic)},
         {"slow_direction", std::vector<double>(r.slow_direction.data(), r.slow_direction.data() + r.slow_direction.size())},
         {"fast_direction", std::vector<double>(r.fast_direction.data(), r.fast_direction.data() + r.fast_direction.size())},
         {"fast_reliable", r.fast_reliable}};
  if (r.kl) j["kl"] = *r.kl;
  return j;
}

AnalysisOptions analysis_options(const json& r, const Problem& p) {
  AnalysisOptions o;
  o.max_lag = r.at("analysis").at("max_lag").get<Eigen::Index>();
  o.kl_bins = r.at("analysis").at("kl_bins").get<int>();
  o.density = p.density;
  o.kl_lo = p.kl_lo;
  o.kl_hi = p.kl_hi;
  o.truth = p.truth;
  return o;
}

}  // namespace

fs::path cmd_sample(const fs::path& config_path) {
  const json r = resolve_config(io::read_json(config_path));
  const std::string e = r.at("experiment").get<std::string>();
  if (e == "w2curves" || e == "stability") throw InvalidArgument("experiment '" + e + "' has no sampler; use its own command");
  const Problem p = build_problem(r);
  const std::vector<SamplerBlock> blocks = build_samplers(r, *p.model);
  const Vector x0 = initial_state(r, p);

  std::vector<ChainJob> jobs;
  for (const auto& b : blocks) jobs.push_back({p.model.get(), b.config, x0});
  const std::vector<ChainTrace> traces = run_chains(jobs);

  const fs::path root = output_root(r);
  fs::create_directories(root);
  json manifest{{"command", "sample"}, {"config", r}, {"files", json::array()}, {"traces", json::array()}};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto files = io::write_trace(root, e + "_" + blocks[i].label, traces[i], {{"label", blocks[i].label}});
    manifest["traces"].push_back({{"label", blocks[i].label}, {"header", files.header.filename().string()}});
    for (const auto& f : {files.header, files.samples, files.statistic}) manifest["files"].push_back(file_entry(root, f));
  }
  if (p.truth) {
    const fs::path t = root / "truth.bin";
    io::write_doubles(t, p.truth->data(), static_cast<std::size_t>(p.truth->size()));
    manifest["files"].push_back(file_entry(root, t));
  }
  if (p.observation.size()) {
    const fs::path o = root / "observation.bin";
    io::write_doubles(o, p.observation.data(), static_cast<std::size_t>(p.observation.size()));
    manifest["files"].push_back(file_entry(root, o));
  }
  const fs::path path = root / "manifest.json";
  io::write_json(path, manifest);
  return path;
}

Comparison compare(const ChainTrace& myula, const ChainTrace& skrock, const AnalysisOptions& opts) {
  if (myula.config.kernel != KernelType::myula || skrock.config.kernel != KernelType::skrock) {
    throw InvalidArgument("compare expects a MYULA trace and an SK-ROCK trace");
  }
  const std::int64_t s = skrock.config.stages * skrock.config.thinning;
  if (s % myula.config.thinning != 0) {
    throw InvalidArgument("MYULA in-chain thinning " + std::to_string(myula.config.thinning) +
                          " does not divide the SK-ROCK spacing " + std::to_string(s));
  }
  Comparison c;
  c.reference = analyse_trace(thin(myula, s / myula.config.thinning), opts, "myula");
  c.candidate = analyse_trace(skrock, opts, "skrock_s" + std::to_string(skrock.config.stages));
  c.speedup = speedup_report(c.reference, c.candidate);
  return c;
}

fs::path cmd_analyze(const fs::path& manifest_path) {
  const json manifest = io::read_json(manifest_path);
  if (manifest.value("command", std::string()) != "sample") throw InvalidArgument("not a sample manifest");
  const json& r = manifest.at("config");
  const std::string e = r.at("experiment").get<std::string>();
  const Problem p = build_problem(r);
  const AnalysisOptions opts = analysis_options(r, p);
  const fs::path root = manifest_path.parent_path();

  std::vector<ChainTrace> traces;
  std::vector<std::string> labels;
  for (const auto& t : manifest.at("traces")) {
    traces.push_back(io::read_trace(root / t.at("header").get<std::string>()));
    labels.push_back(t.at("label").get<std::string>());
  }
  const auto ref = std::find_if(traces.begin(), traces.end(),
                                [](const ChainTrace& t) { return t.config.kernel == KernelType::myula; });
  const bool with_speedup = traces.size() > 1 && ref != traces.end();

  json out{{"command", "analyze"}, {"manifest", manifest_path.filename().string()}, {"files", json::array()}};
  std::vector<std::string> header{"label", "method", "stages", "stepsize", "ess_slow", "ess_fast", "ess_logpi"};
  const bool one_d = p.model->dimension() == 1 && p.density;
  if (one_d) header.push_back("kl");
  if (with_speedup) {
    header.push_back("speedup_slow");
    header.push_back("speedup_fast");
  }
  io::CsvWriter table(root / (e + ".table.csv"), header);

  for (std::size_t i = 0; i < traces.size(); ++i) {
    const ChainTrace& t = traces[i];
    const DiagnosticsReport rep = analyse_trace(t, opts, labels[i]);
    const std::string stem = stem_for(e, rep, t.config.kernel);

    io::CsvWriter acf(root / (stem + ".acf.csv"), {"lag", "acf_slow", "acf_fast"});
    for (Eigen::Index k = 0; k < rep.acf_slow.size(); ++k) acf.cell(static_cast<std::int64_t>(k)).cell(rep.acf_slow[k]).cell(rep.acf_fast[k]).end_row();
    acf.close();
    out["files"].push_back(file_entry(root, root / (stem + ".acf.csv")));
    if (rep.mse) {
      io::CsvWriter mse(root / (stem + ".mse.csv"), {"gradient_evals", "mse"});
      for (Eigen::Index k = 0; k < rep.mse->mse.size(); ++k) mse.cell(rep.mse->gradient_evals[k]).cell(rep.mse->mse[k]).end_row();
      mse.close();
      out["files"].push_back(file_entry(root, root / (stem + ".mse.csv")));
    }

    json rj = report_json(rep);
    table.cell(labels[i]).cell(to_string(t.config.kernel)).cell(rep.stages).cell(rep.delta);
    table.cell(rep.ess_slow.ess).cell(rep.ess_fast.ess).cell(rep.ess_statistic.ess);
    if (one_d) table.cell(rep.kl ? io::fmt(*rep.kl) : std::string());
    if (with_speedup) {
      if (t.config.kernel == KernelType::skrock) {
        const Comparison c = compare(*ref, t, opts);
        table.cell(c.speedup.slow).cell(c.speedup.fast);
        rj["speedup"] = {{"slow", c.speedup.slow}, {"fast", c.speedup.fast}, {"logpi", c.speedup.statistic},
                         {"reference_thinned", report_json(c.reference)}};
      } else {
        table.cell(std::string("-")).cell(std::string("-"));
      }
    }
    table.end_row();
    io::write_json(root / (stem + ".report.json"), rj);
    out["files"].push_back(file_entry(root, root / (stem + ".report.json")));
  }
  table.close();
  out["files"].push_back(file_entry(root, root / (e + ".table.csv")));
  const fs::path path = root / "analysis.json";
  io::write_json(path, out);
  return path;
}

fs::path cmd_w2curves(const fs::path& config_path) {
  json j = io::read_json(config_path);
  if (!j.contains("experiment")) j["experiment"] = "w2curves";
  const json r = resolve_config(j);
  if (r.at("experiment") != "w2curves") throw InvalidArgument("config is not a w2curves experiment");
  const auto d = r.at("dimension").get<Eigen::Index>();
  const double eta = r.at("eta").get<double>();
  const double safety = r.at("em_safety").get<double>();
  const fs::path root = output_root(r);
  fs::create_directories(root);

  io::CsvWriter curves(root / "w2curves.budget.csv",
                       {"kappa", "epsilon2", "method", "stages", "delta", "gradient_evals", "status"});
  io::CsvWriter slopes(root / "w2curves.slope.csv", {"epsilon2", "method", "slope", "points"});
  bool any_slope = false;
  for (const auto& eps_j : r.at("epsilons2")) {
    const double eps2 = eps_j.get<double>();
    for (Method m : {Method::em, Method::skrock}) {
      const std::string name = m == Method::em ? "em" : "skrock";
      std::vector<double> ks, gs;
      for (const auto& k_j : r.at("kappas")) {
        const double kappa = k_j.get<double>();
        const GaussianTarget target = spread_target(d, kappa);
        curves.cell(kappa).cell(eps2).cell(name);
        try {
          const BudgetResult b = gradient_budget(target, m, std::sqrt(eps2), Vector::Zero(d), eta, safety);
          curves.cell(b.stages).cell(b.delta).cell(b.gradient_evals).cell(std::string("ok"));
          if (b.gradient_evals > 0) {
            ks.push_back(kappa);
            gs.push_back(static_cast<double>(b.gradient_evals));
          }
        } catch (const Unreachable&) {
          curves.cell(std::string()).cell(std::string()).cell(std::string()).cell(std::string("unreachable"));
        } catch (const Divergence&) {
          curves.cell(std::string()).cell(std::string()).cell(std::string()).cell(std::string("divergent"));
        }
        curves.end_row();
      }
      if (ks.size() >= 2) {
        slopes.cell(eps2).cell(name).cell(loglog_slope(ks, gs)).cell(static_cast<std::int64_t>(ks.size())).end_row();
        any_slope = true;
      }
    }
  }
  curves.close();
  json manifest{{"command", "w2curves"}, {"config", r}, {"files", json::array()}};
  manifest["files"].push_back(file_entry(root, root / "w2curves.budget.csv"));
  if (any_slope) {
    slopes.close();
    manifest["files"].push_back(file_entry(root, root / "w2curves.slope.csv"));
  }
  const fs::path path = root / "manifest.json";
  io::write_json(path, manifest);
  return path;
}

fs::path cmd_stability(const StabilityGrid& g) {
  if (!std::isfinite(g.p_min) || !std::isfinite(g.p_max) || !std::isfinite(g.q2_max) || !(g.p_min < g.p_max) ||
      !(g.q2_max > 0.0) || g.resolution < 2) {
    throw InvalidArgument("stability grid needs finite pmin < pmax, q2max > 0 and resolution >= 2");
  }
  fs::path root = g.output_dir;
  if (const char* env = std::getenv("SKROCK_OUTPUT_ROOT"); env && *env && root.is_relative()) root = fs::path(env) / root;
  fs::create_directories(root);

  const Vector p = Vector::LinSpaced(g.resolution, g.p_min, g.p_max);
  const Vector q2 = Vector::LinSpaced(g.resolution, 0.0, g.q2_max);
  json manifest{{"command", "stability"},
                {"config",
                 {{"s", g.s}, {"eta", g.eta}, {"pmin", g.p_min}, {"pmax", g.p_max}, {"q2max", g.q2_max},
                  {"resolution", g.resolution}}},
                {"files", json::array()}};
  for (const StabilityFunctions& stab : {StabilityFunctions::em(), StabilityFunctions::skrock(g.s, g.eta)}) {
    const StabilityRegion region = ms_stability_region(stab, p, q2);
    const fs::path file = root / ("stability_" + stab.label() + ".region.csv");
    io::CsvWriter csv(file, {"p", "q2", "stable"});
    for (Eigen::Index i = 0; i < p.size(); ++i)
      for (Eigen::Index j = 0; j < q2.size(); ++j) csv.cell(p[i]).cell(q2[j]).cell(region.at(i, j) ? 1 : 0).end_row();
    csv.close();
    manifest["files"].push_back(file_entry(root, file));
  }
  // Upper boundary of the exact domain 2p + q^2 < 0.
  const fs::path boundary = root / "stability.boundary.csv";
  io::CsvWriter csv(boundary, {"p", "q2"});
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0 && -2.0 * p[i] <= g.q2_max) csv.cell(p[i]).cell(-2.0 * p[i]).end_row();
  }
  csv.close();
  manifest["files"].push_back(file_entry(root, boundary));
  const fs::path path = root / "manifest.json";
  io::write_json(path, manifest);
  return path;
}

}  // namespace skrock::exp
