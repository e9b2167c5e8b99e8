#include "martrace/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"martingale trace analysis of integral operators"};
  app.set_version_flag("--version", martrace::version_string());
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string out_dir;
  int threads = 1;
  auto* run = app.add_subcommand("run", "run the study described by a JSON config");
  run->add_option("config", config_path, "path to the experiment config")->required();
  run->add_option("--out", out_dir, "output directory (default: config's out_dir)");
  run->add_option("--threads", threads, "worker thread budget");

  std::string filter;
  auto* catalog = app.add_subcommand("catalog", "list kernels, spaces and studies");
  catalog->add_option("--filter", filter, "only lines containing this tag");

  CLI11_PARSE(app, argc, argv);

  if (catalog->parsed()) {
    std::cout << martrace::catalog_text(filter);
    return 0;
  }
  if (!run->parsed()) {
    std::cout << app.help();
    return 0;
  }

  try {
    const auto cfg = martrace::parse_config_file(config_path);
    const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
    return martrace::run_experiment(cfg, dir, threads);
  } catch (const martrace::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const martrace::SpaceError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
