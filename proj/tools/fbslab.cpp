// fbslab: config-driven experiment runner.
//
//   fbslab run <config> [key=value ...]
//   fbslab validate <config> [key=value ...]
//   fbslab report <bundle-dir>
//
// Exit codes: 0 all invariants passed, 1 invariant failure, 2 config error,
// 3 pipeline error.

#include <CLI11.hpp>
#include <iostream>

#include "fbs/experiment.hpp"

namespace {

enum Exit { kOk = 0, kInvariant = 1, kConfig = 2, kPipeline = 3 };

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const fbs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const fbs::PipelineError& e) {
    std::cerr << "pipeline error: " << e.what() << "\n";
    return kPipeline;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPipeline;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fbslab: numerical lab for the variable-exponent Alt-Phillips functional"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string bundle_dir;

  auto* run = app.add_subcommand("run", "run an experiment and write its report bundle");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("overrides", overrides, "key=value overrides, e.g. grid.nodes=129");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config_path, "experiment config (JSON)")->required();
  validate->add_option("overrides", overrides, "key=value overrides");

  auto* report = app.add_subcommand("report", "re-print the summary of a report bundle");
  report->add_option("bundle", bundle_dir, "bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*run) {
    return guarded([&] {
      const fbs::ExperimentConfig cfg = fbs::load_config(config_path, overrides);
      const fbs::RunSummary s = fbs::run_experiment(cfg);
      std::cout << fbs::format_summary(s);
      return s.all_passed() ? kOk : kInvariant;
    });
  }
  if (*validate) {
    return guarded([&] {
      const fbs::ExperimentConfig cfg = fbs::load_config(config_path, overrides);
      std::cout << "ok: " << cfg.kind << " experiment, schema " << cfg.schema << ", output " << cfg.output << "\n";
      return kOk;
    });
  }
  return guarded([&] {
    const fbs::RunSummary s = fbs::read_bundle(bundle_dir);
    std::cout << fbs::format_summary(s);
    if (!s.complete) return kPipeline;
    return s.all_passed() ? kOk : kInvariant;
  });
}
