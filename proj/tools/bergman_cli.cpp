#include <csignal>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "bergman/experiment.hpp"
#include "bergman/parallel.hpp"

namespace {

extern "C" void on_sigint(int) { bergman::request_interrupt(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bergman kernel / information geometry experiment runner"};
  app.set_version_flag("--version", std::string(BERGMAN_VERSION));
  app.require_subcommand(1);

  std::string out;
  int threads = 0;
  std::string config_dir = bergman::default_config_dir();
  bool quiet = false;
  app.add_option("--out", out, "Report file (run) or report directory (suite)");
  app.add_option("--threads", threads, "Worker threads (default: $BERGMAN_THREADS or 1)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--config-dir", config_dir, "Directory holding the paper/ configs")->capture_default_str();
  app.add_flag("-q,--quiet", quiet, "Only print the final summary");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();

  std::string suite;
  auto* suite_cmd = app.add_subcommand("suite", "Run a named suite: smoke or paper");
  suite_cmd->add_option("name", suite, "smoke | paper")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::signal(SIGINT, on_sigint);
  if (threads > 0) bergman::set_default_thread_count(threads);

  bergman::RunOptions opts;
  opts.threads = threads;
  opts.config_dir = config_dir;
  opts.log = quiet ? nullptr : &std::cerr;

  if (*run) return bergman::run_config_file(config_path, out, opts);
  return bergman::run_suite(suite, out, opts);
}
