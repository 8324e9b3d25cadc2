#include <CLI11.hpp>
#include <string>
#include <vector>

#include "run_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Periodic-strip Helmholtz solver and inverse medium reconstruction"};
  std::string config;
  std::vector<std::string> overrides;
  bool diagnostics = false;
  int workers = 0;
  std::string out;
  app.add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "Override a key, e.g. --set M=5 or --set inverse.epsilon=0.02");
  app.add_flag("--diagnostics", diagnostics, "Per-block and per-iteration progress on stderr");
  app.add_option("--workers", workers, "Worker threads for alpha blocks")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : blochfem::app::kConfigError;
  }
  return blochfem::app::run_from_file(config, overrides, diagnostics, workers, out);
}
