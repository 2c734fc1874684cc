// wpnlab: run a registered experiment and write its CSV, metadata and summary artifacts.
#include "wpn/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

enum Exit { ok = 0, certificate_failed = 1, usage_error = 2, io_failure = 3, runtime_failure = 4 };

std::string registry_list() {
  std::string s;
  for (const auto& n : wpn::experiment_names()) s += "  " + n + "\n";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run weak-entropy / noise-regularization experiments and write artifacts."};
  std::string name, config_path, out_dir;
  long long seed = -1;
  int threads = 0;
  bool smoke = false, list = false;
  app.add_option("experiment", name, "experiment name (see --list)");
  app.add_option("--config", config_path, "key = value config file; overrides registry defaults");
  app.add_option("--out", out_dir, "output directory (default: $WPN_OUTPUT_ROOT/<experiment> or ./out/<experiment>)");
  app.add_option("--seed", seed, "base seed for path sampling")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", threads, "worker threads (results do not depend on this)")->check(CLI::PositiveNumber);
  app.add_flag("--smoke", smoke, "small, fast profile");
  app.add_flag("--list", list, "print the experiment registry and exit");
  app.footer("experiments:\n" + registry_list());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage_error;
  }
  if (list) {
    std::cout << registry_list();
    return ok;
  }
  if (name.empty() && config_path.empty()) {
    std::cerr << "error: no experiment given\nexperiments:\n" << registry_list();
    return usage_error;
  }

  try {
    wpn::ExperimentConfig cfg;
    if (!config_path.empty()) {
      wpn::Config c = wpn::Config::load(config_path);
      if (!name.empty()) {
        if (c.has("experiment") && c.get("experiment") != name)
          throw wpn::Error(wpn::ErrorCode::usage, "config names experiment '" + c.get("experiment") +
                                                      "' but '" + name + "' was requested");
        c.set("experiment", name);
      }
      if (c.has("experiment") && !wpn::is_registered(c.get("experiment")))
        throw wpn::Error(wpn::ErrorCode::usage, "unknown experiment '" + c.get("experiment") + "'");
      // Registry defaults for the chosen profile, overridden by the file.
      wpn::Config base = wpn::default_config(c.get("experiment"), smoke).to_config();
      for (const auto& [k, v] : c.entries()) base.set(k, v);
      cfg = wpn::ExperimentConfig::from_config(base);
    } else {
      cfg = wpn::default_config(name, smoke);
    }
    if (seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(seed);
    if (threads > 0) cfg.threads = threads;

    if (out_dir.empty()) {
      const char* root = std::getenv("WPN_OUTPUT_ROOT");
      out_dir = std::string(root && *root ? root : "out") + "/" + cfg.experiment;
    }
    const wpn::ExperimentResult res = wpn::run_experiment(cfg);
    wpn::write_artifacts(cfg, res, out_dir);
    std::cout << cfg.experiment << ": " << (res.certificate.passed() ? "PASS" : "FAIL") << "\n"
              << res.certificate.to_text() << "artifacts: " << out_dir << "\n";
    return res.certificate.passed() ? ok : certificate_failed;
  } catch (const wpn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == wpn::ErrorCode::usage) {
      std::cerr << "experiments:\n" << registry_list();
      return usage_error;
    }
    if (e.code() == wpn::ErrorCode::io_error) return io_failure;
    return runtime_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return runtime_failure;
  }
}
