// hkflow_cli: drive, resume, solve and check scalar parabolic Monge-Ampere
// flows on flat tori.
//
//   hkflow_cli run <config> [--out DIR] [--max-steps N] [--quiet]
//   hkflow_cli resume <snapshot> <config> [--out DIR] ...
//   hkflow_cli oracle <config>
//   hkflow_cli verify <config>
//
// Exit codes: 0 ok, 1 verify failure, 2 config error, 3 I/O or format error,
// 4 numerical failure.

#include <iostream>

#include "CLI11.hpp"
#include "hkflow/cli_io.hpp"

namespace {

void add_common(CLI::App* sub, std::string& out, long& max_steps, bool& quiet) {
  sub->add_option("--out", out, "output directory (overrides the config)");
  sub->add_option("--max-steps", max_steps, "step budget (overrides the config)")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--quiet,-q", quiet, "only write files");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scalar parabolic Monge-Ampere flows on flat tori"};
  app.require_subcommand(1);

  std::string config, snapshot, out;
  long max_steps = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "integrate the configured flow");
  run->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  add_common(run, out, max_steps, quiet);

  auto* resume = app.add_subcommand("resume", "continue a run from a snapshot");
  resume->add_option("snapshot", snapshot, "snapshot file")->required()->check(CLI::ExistingFile);
  resume->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  add_common(resume, out, max_steps, quiet);

  auto* oracle = app.add_subcommand("oracle", "Newton solve of the stationary equation");
  oracle->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  add_common(oracle, out, max_steps, quiet);

  auto* verify = app.add_subcommand("verify", "run the invariant probes");
  verify->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
  add_common(verify, out, max_steps, quiet);

  CLI11_PARSE(app, argc, argv);

  try {
    hkflow::RunConfig cfg = hkflow::parse_config(config);
    hkflow::CommandOptions opts;
    if (!out.empty()) opts.out_dir = out;
    if (max_steps > 0) opts.max_steps = max_steps;
    opts.quiet = quiet;

    if (*run) return hkflow::run_command(std::move(cfg), opts);
    if (*resume) return hkflow::resume_command(snapshot, std::move(cfg), opts);
    if (*oracle) return hkflow::oracle_command(std::move(cfg), opts);
    return hkflow::verify_command(std::move(cfg), opts);
  } catch (const hkflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const hkflow::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const hkflow::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return 3;
  } catch (const hkflow::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
