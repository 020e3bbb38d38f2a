// Command-line front end over the C API.
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "skrock/skrock.h"

namespace {

int finish(skr_status status, const char* manifest) {
  if (status == SKR_OK) {
    std::printf("%s\n", manifest);
    return 0;
  }
  std::fprintf(stderr, "skrock: %s: %s\n", skr_status_name(status), skr_last_error());
  return status == SKR_INVALID_ARGUMENT ? 1 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SK-ROCK and MYULA samplers for log-concave posteriors"};
  app.require_subcommand(1);

  std::string path;
  auto* sample = app.add_subcommand("sample", "Run the samplers described by a JSON config");
  sample->add_option("config", path, "Config file")->required();
  auto* analyze = app.add_subcommand("analyze", "Compute diagnostics for a sample manifest");
  analyze->add_option("manifest", path, "manifest.json written by sample")->required();
  auto* w2 = app.add_subcommand("w2curves", "Closed-form Wasserstein budgets on Gaussian targets");
  w2->add_option("config", path, "Config file")->required();

  int s = 10;
  double eta = 0.05, pmin = -200.0, pmax = 0.0, q2max = 50.0;
  int resolution = 200;
  std::string out = "stability";
  auto* stab = app.add_subcommand("stability", "Mean-square stability regions");
  stab->add_option("--s", s, "Stages")->check(CLI::Range(1, 100));
  stab->add_option("--eta", eta, "Damping")->check(CLI::NonNegativeNumber);
  stab->add_option("--pmin", pmin, "Smallest p");
  stab->add_option("--pmax", pmax, "Largest p");
  stab->add_option("--q2max", q2max, "Largest q^2");
  stab->add_option("--resolution", resolution, "Grid points per axis")->check(CLI::Range(2, 100000));
  stab->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  char manifest[4096] = {0};
  skr_status status = SKR_OK;
  if (*sample) status = skr_cmd_sample(path.c_str(), manifest, sizeof manifest);
  else if (*analyze) status = skr_cmd_analyze(path.c_str(), manifest, sizeof manifest);
  else if (*w2) status = skr_cmd_w2curves(path.c_str(), manifest, sizeof manifest);
  else status = skr_cmd_stability(s, eta, pmin, pmax, q2max, resolution, out.c_str(), manifest, sizeof manifest);
  return finish(status, manifest);
}
