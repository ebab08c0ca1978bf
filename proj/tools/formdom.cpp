#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "formdom/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = formdom::cli;

  CLI::App app{"Domination, positivity and capacity checks for discretized forms"};
  app.set_version_flag("--version", std::string(formdom::kToolVersion));

  cli::CommandLine cl;
  std::string config_path, out, times;
  std::uint64_t seed = 0;
  double tol = 0.0;

  std::string command_help = "one of:";
  for (const auto& c : cli::commands()) command_help += " " + c;
  app.add_option("command", cl.command, command_help)->check(CLI::IsMember(cli::commands()));
  auto* config_opt = app.add_option("--config", config_path, "sectioned key-value or JSON config file");
  auto* seed_opt = app.add_option("--seed", seed, "seed for all Monte-Carlo substreams");
  auto* out_opt = app.add_option("--out", out, "output directory for reports and artifacts");
  auto* times_opt = app.add_option("--times", times, "time grid, e.g. log:1e-3:10:50 or a list");
  auto* tol_opt = app.add_option("--tol", tol, "entrywise tolerance")->check(CLI::NonNegativeNumber);
  app.add_flag("--fixed-clock", cl.fixed_clock, "pin report timestamps for byte-identical output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kUsageError;
  }
  if (*config_opt) cl.config_path = config_path;
  if (*seed_opt) cl.seed = seed;
  if (*out_opt) cl.out = out;
  if (*times_opt) cl.times = times;
  if (*tol_opt) cl.tol = tol;
  return cli::run(cl, std::cerr);
}
