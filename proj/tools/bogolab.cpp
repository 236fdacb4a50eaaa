#include <CLI11.hpp>
#include <iostream>

#include "bogolab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bogovskii operator numerical lab"};
  app.require_subcommand(1);

  bogolab::RunRequest req;
  std::string experiment, config, out, seed, a, eps;
  int resolution = 0;

  auto* run = app.add_subcommand("run", "run an experiment and write <out>/<experiment>-<hash>.{csv,json}");
  std::string names;
  for (const auto& n : bogolab::experiment_names()) names += (names.empty() ? "" : ", ") + n;
  run->add_option("experiment", experiment, "one of: " + names + " (overrides run.experiment)");
  run->add_option("--config", config, "config file")->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory (run.out)");
  run->add_option("--seed", seed, "seed (run.seed)");
  run->add_option("--resolution", resolution,
                  "quadrature order for Bogovskii experiments; 1/h for grid experiments");
  run->add_option("--a", a, "domain.a");
  run->add_option("--eps", eps, "domain.eps");
  run->add_flag("--dry-run", req.dry_run, "print the resolved plan without computing");
  run->add_option("--threads", req.threads, "worker threads (default: BOGOLAB_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  auto* keys = app.add_subcommand("keys", "list every config key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return bogolab::kExitInputError;
  }

  if (keys->parsed()) {
    for (const auto& k : bogolab::config_schema())
      std::cout << k.key << " = " << (k.fallback.empty() ? "(no default)" : k.fallback) << "    # " << k.help
                << "\n";
    return 0;
  }

  if (!config.empty()) req.config_path = config;
  auto flag = [&](const char* key, const std::string& v) {
    if (!v.empty()) req.overrides.emplace_back(key, v);
  };
  flag("run.experiment", experiment);
  flag("run.out", out);
  flag("run.seed", seed);
  flag("domain.a", a);
  flag("domain.eps", eps);
  if (run->count("--resolution")) req.resolution = resolution;
  return bogolab::run(req);
}
