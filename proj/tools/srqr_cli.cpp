#include <CLI11.hpp>

#include "srqr/srqr.hpp"

int main(int argc, char** argv) {
  CLI::App app{"srqr: sub-Riemannian quasiregular dynamics laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  unsigned threads = 0;
  bool verbose = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file (JSON)")
        ->envname("SRQR_CONFIG")
        ->required();
    cmd->add_option("--out", out_dir, "output directory")->envname("SRQR_OUT");
    cmd->add_option("--threads", threads, "worker threads (0 = hardware)")
        ->envname("SRQR_THREADS");
    cmd->add_flag("--verbose", verbose, "chatty progress")->envname("SRQR_VERBOSE");
  };

  auto* run_cmd = app.add_subcommand("run", "execute the experiment named in the config");
  add_common(run_cmd);
  auto* certify_cmd =
      app.add_subcommand("certify", "run the acceptance criteria and write a report");
  add_common(certify_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return srqr::run_experiment(config_path, out_dir, threads, verbose);
    if (certify_cmd->parsed())
      return srqr::run_certification(config_path, out_dir, threads, verbose);
  } catch (const srqr::SchemaError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
