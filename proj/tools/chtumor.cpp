// chtumor: command-line driver for the tumor-growth toolkit.
//
//   chtumor check-params --config run.cfg
//   chtumor run          --config run.cfg [--out dir] [--seed n]
//   chtumor ode          --config run.cfg [--out dir] [--seed n]
//   chtumor sweep        --config sweep.cfg [--out dir] [--threads n]

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "chtumor/commands.hpp"

namespace {

void apply_overrides(chtumor::RunConfig& cfg, const std::optional<std::string>& out,
                     const std::optional<std::uint64_t>& seed) {
  if (out) cfg.out_dir = *out;
  if (seed)
    if (auto* r = std::get_if<chtumor::RandomInitial>(&cfg.initial)) r->seed = *seed;
}

chtumor::RunConfig load_run(const std::string& path) {
  std::istringstream is(chtumor::read_file(path));
  return chtumor::parse_run_config(is);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cahn-Hilliard / nutrient tumor-growth simulation and analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--out", out, "output directory (overrides [output] dir)");
    sub->add_option("--seed", seed, "seed for random initial data");
  };
  auto* check = app.add_subcommand("check-params", "certify dissipativity of a parameter set");
  check->add_option("--config", config_path, "configuration file")->required();
  auto* run = app.add_subcommand("run", "integrate the PDE system");
  add_common(run);
  auto* ode = app.add_subcommand("ode", "integrate the spatially homogeneous system");
  add_common(ode);
  auto* sweep = app.add_subcommand("sweep", "regime map over one or two parameters");
  add_common(sweep);
  sweep->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : chtumor::kExitUsage;
  }

  try {
    if (*check) return chtumor::cmd_check_params(load_run(config_path), std::cout);
    if (*run || *ode) {
      auto cfg = load_run(config_path);
      apply_overrides(cfg, out, seed);
      return *run ? chtumor::cmd_run(cfg, std::cout) : chtumor::cmd_ode(cfg, std::cout);
    }
    std::istringstream is(chtumor::read_file(config_path));
    auto sw = chtumor::parse_sweep_config(is);
    apply_overrides(sw.base, out, seed);
    return chtumor::cmd_sweep(sw, threads, std::cout);
  } catch (const chtumor::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return chtumor::kExitUsage;
}
