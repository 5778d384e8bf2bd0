// Command-line front end: one YAML config describes a run; flags only choose where it goes.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "cavity/config.hpp"
#include "cavity/error.hpp"

namespace {

constexpr int kChecksFailed = 1;
constexpr int kInternal = 70;

std::string command_list() {
  std::string s;
  for (const auto& name : cavity::command_names()) s += (s.empty() ? "" : " | ") + name;
  return s;
}

std::string usage_footer() {
  return "\nThe config file selects the command: " + command_list() +
         "\nExit codes: 0 ok, 1 checks failed, 2 config, 3 mesh, 4 solver, 5 io, 6 analysis, 70 internal.\n"
         "File formats: docs/formats.md\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maxwell cavity eigenvalue stability toolkit", "cavity"};
  app.footer(usage_footer());
  std::string config_path, out_dir;
  int threads = 1;
  bool verbose = false, emit = false;
  app.add_option("--config", config_path, "run config (YAML)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--threads", threads, "worker threads")->envname("CAVITY_THREADS")->check(CLI::Range(1, 1024));
  app.add_flag("--verbose,-v", verbose, "echo progress to stdout");
  app.add_flag("--emit-config", emit, "print the canonical form of the config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cavity::exit_code(cavity::ErrorKind::config);
  }

  try {
    const cavity::RunConfig config = cavity::load_config(config_path);
    if (emit) {
      std::cout << cavity::emit_config(config);
      return 0;
    }
    cavity::RunOptions opts;
    opts.out_dir = out_dir;
    opts.verbose = verbose;
    opts.threads = threads;
    opts.console = &std::cout;
    const cavity::RunResult result = cavity::run(config, opts);
    if (verbose)
      for (const auto& path : result.artifacts) std::cout << "wrote " << path << "\n";
    return result.checks_passed ? 0 : kChecksFailed;
  } catch (const cavity::Error& e) {
    std::cerr << "cavity: " << to_string(e.code()) << ": " << e.what() << "\n";
    if (e.kind() == cavity::ErrorKind::config) std::cerr << app.help();
    return cavity::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "cavity: internal error: " << e.what() << "\n";
    return kInternal;
  }
}
