#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "skrock/skrock.h"

namespace fs = std::filesystem;

TEST(CApi, ModelLifecycleAndGradient) {
  const double var[2] = {1.0, 0.25};
  skr_model* m = nullptr;
  ASSERT_EQ(skr_model_gaussian(var, nullptr, 2, &m), SKR_OK);
  EXPECT_EQ(skr_model_dimension(m), 2u);
  EXPECT_DOUBLE_EQ(skr_model_lipschitz(m), 4.0);
  const double x[2] = {1.0, 1.0};
  double g[2];
  ASSERT_EQ(skr_model_log_gradient(m, x, g), SKR_OK);
  EXPECT_DOUBLE_EQ(g[0], -1.0);
  EXPECT_DOUBLE_EQ(g[1], -4.0);
  EXPECT_EQ(skr_model_gradient_evals(m), 1);
  double lp = 0.0;
  ASSERT_EQ(skr_model_log_density(m, x, &lp), SKR_OK);
  EXPECT_DOUBLE_EQ(lp, -0.5 - 2.0);
  skr_model_free(m);
  skr_model_free(nullptr);
}

TEST(CApi, ErrorsMapToStatusCodes) {
  const double bad[2] = {1.0, -1.0};
  skr_model* m = nullptr;
  EXPECT_EQ(skr_model_gaussian(bad, nullptr, 2, &m), SKR_INVALID_ARGUMENT);
  EXPECT_EQ(m, nullptr);
  EXPECT_NE(std::string(skr_last_error()), "");
  EXPECT_EQ(skr_model_laplace_1d(1.0, 1e-5, nullptr), SKR_INVALID_ARGUMENT);
  EXPECT_STREQ(skr_status_name(SKR_DIVERGENT), "divergent");

  double r = 0.0;
  const double var[1] = {1.0};
  const double x0[1] = {1.0};
  EXPECT_EQ(skr_w2(var, 1, SKR_KERNEL_MYULA, 1, 0.05, 2.5, x0, 3, &r), SKR_DIVERGENT);
  std::int64_t evals = 0;
  int s = 0;
  double d = 0.0;
  const double spread[3] = {1.0, 0.1, 0.01};
  EXPECT_EQ(skr_gradient_budget(spread, 3, SKR_KERNEL_MYULA, 1e-6, nullptr, 0.05, &evals, &s, &d), SKR_UNREACHABLE);
  EXPECT_EQ(skr_model_from_config("{not json", &m), SKR_INVALID_ARGUMENT);
}

TEST(CApi, RunChainMatchesContract) {
  skr_model* m = nullptr;
  ASSERT_EQ(skr_model_laplace_1d(1.0, 1e-5, &m), SKR_OK);
  double bound = 0.0;
  ASSERT_EQ(skr_max_stepsize(m, SKR_KERNEL_MYULA, 1, 0.05, &bound), SKR_OK);
  EXPECT_NEAR(bound, 2e-5, 1e-18);

  skr_sampler_config c = skr_default_config();
  c.kernel = SKR_KERNEL_SKROCK;
  c.stages = 15;
  c.delta = 4e-3;
  c.seed = 3;
  c.n_iterations = 200;
  c.burn_in = 20;
  c.thinning = 2;
  skr_trace* a = nullptr;
  skr_trace* b = nullptr;
  ASSERT_EQ(skr_run_chain(m, &c, nullptr, &a), SKR_OK);
  ASSERT_EQ(skr_run_chain(m, &c, nullptr, &b), SKR_OK);
  ASSERT_EQ(skr_trace_rows(a), 90u);
  EXPECT_EQ(skr_trace_dimension(a), 1u);
  EXPECT_EQ(skr_trace_gradient_evals(a), 200 * 15);
  for (size_t i = 0; i < 90; ++i) EXPECT_EQ(skr_trace_samples(a)[i], skr_trace_samples(b)[i]);
  EXPECT_NE(skr_trace_statistic(a), nullptr);
  skr_trace_free(a);
  skr_trace_free(b);

  c.delta = 1.0;
  skr_trace* t = nullptr;
  EXPECT_EQ(skr_run_chain(m, &c, nullptr, &t), SKR_INVALID_ARGUMENT);
  EXPECT_EQ(t, nullptr);
  skr_model_free(m);
}

TEST(CApi, AnalysisEntryPoints) {
  double r1 = 0.0, r2 = 0.0;
  ASSERT_EQ(skr_stability(SKR_KERNEL_MYULA, 1, 0.05, -0.5, &r1, &r2), SKR_OK);
  EXPECT_DOUBLE_EQ(r1, 0.5);
  EXPECT_DOUBLE_EQ(r2, 1.0);
  ASSERT_EQ(skr_stability(SKR_KERNEL_SKROCK, 10, 0.05, 0.0, &r1, &r2), SKR_OK);
  EXPECT_NEAR(r1, 1.0, 1e-14);

  int s = 0;
  double delta = 0.0;
  ASSERT_EQ(skr_optimal_stage_step(1e4, 0.05, 1.0, &s, &delta), SKR_OK);
  EXPECT_EQ(s, 16);

  const double var[1] = {1.0};
  const double x0[1] = {0.0};
  double w = 0.0;
  ASSERT_EQ(skr_w2(var, 1, SKR_KERNEL_MYULA, 1, 0.05, 0.5, x0, 500, &w), SKR_OK);
  EXPECT_NEAR(w, std::pow(1.0 - std::sqrt(4.0 / 3.0), 2), 1e-12);

  std::vector<double> series(4000);
  double prev = 0.0;
  unsigned state = 1;
  for (auto& v : series) {
    state = state * 1103515245u + 12345u;
    prev = 0.5 * prev + (static_cast<double>(state >> 8) / (1u << 24) - 0.5);
    v = prev;
  }
  double ess = 0.0;
  ASSERT_EQ(skr_ess(series.data(), series.size(), &ess), SKR_OK);
  EXPECT_GT(ess, 0.0);
  std::vector<double> acf(11);
  ASSERT_EQ(skr_acf(series.data(), series.size(), 10, acf.data()), SKR_OK);
  EXPECT_DOUBLE_EQ(acf[0], 1.0);
  EXPECT_EQ(skr_ess(series.data(), 5, &ess), SKR_INVALID_ARGUMENT);
}

namespace {

class Commands : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("skrock_capi_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path config(const std::string& body) {
    const fs::path p = dir_ / "config.json";
    std::ofstream(p) << body;
    return p;
  }

  fs::path dir_;
};

const char* kSmallLaplace = R"({
  "experiment": "laplace1d", "seed": 2, "output_dir": "%OUT%",
  "model": {"scale": 1.0, "lambda": 1e-5},
  "budget": {"gradient_evals": 3000, "burn_in": 0},
  "samplers": [{"label": "myula", "kernel": "myula", "delta": 1e-5},
               {"label": "skrock_s10", "kernel": "skrock", "stages": 10, "delta": 1.7e-3}]
})";

std::string with_out(const fs::path& out) {
  std::string s = kSmallLaplace;
  s.replace(s.find("%OUT%"), 5, out.string());
  return s;
}

int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_F(Commands, SampleAndAnalyzeThroughCApi) {
  char manifest[4096];
  ASSERT_EQ(skr_cmd_sample(config(with_out(dir_ / "out")).c_str(), manifest, sizeof manifest), SKR_OK)
      << skr_last_error();
  EXPECT_TRUE(fs::exists(manifest));
  char analysis[4096];
  ASSERT_EQ(skr_cmd_analyze(manifest, analysis, sizeof analysis), SKR_OK) << skr_last_error();
  EXPECT_TRUE(fs::exists(dir_ / "out" / "laplace1d.table.csv"));
  char tiny[4];
  EXPECT_EQ(skr_cmd_analyze(manifest, tiny, sizeof tiny), SKR_INVALID_ARGUMENT);
  EXPECT_EQ(skr_cmd_sample((dir_ / "missing.json").c_str(), nullptr, 0), SKR_IO_ERROR);
  EXPECT_EQ(skr_cmd_stability(10, 0.05, -200, 0, 10, 21, (dir_ / "stab").c_str(), nullptr, 0), SKR_OK);
  EXPECT_TRUE(fs::exists(dir_ / "stab" / "stability_skrock_s10.region.csv"));
}

TEST_F(Commands, CliExitCodes) {
  const char* cli = std::getenv("SKROCK_CLI");
  if (!cli) GTEST_SKIP() << "SKROCK_CLI not set";
  const std::string quiet = " > /dev/null 2>&1";
  const std::string good = config(with_out(dir_ / "cli")).string();
  EXPECT_EQ(run(std::string(cli) + " sample " + good + quiet), 0);
  EXPECT_EQ(run(std::string(cli) + " analyze " + (dir_ / "cli" / "manifest.json").string() + quiet), 0);

  std::string bad = with_out(dir_ / "bad");
  bad.replace(bad.find("1.7e-3"), 6, "1.0");
  const fs::path bad_path = dir_ / "bad.json";
  std::ofstream(bad_path) << bad;
  EXPECT_EQ(run(std::string(cli) + " sample " + bad_path.string() + quiet), 1);
  EXPECT_EQ(run(std::string(cli) + " frobnicate" + quiet), 1);
  EXPECT_EQ(run(std::string(cli) + " analyze " + (dir_ / "nothing.json").string() + quiet), 2);
  EXPECT_EQ(run(std::string(cli) + " stability --s 5 --resolution 11 --out " + (dir_ / "st").string() + quiet), 0);
}
