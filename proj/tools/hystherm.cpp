#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "hystherm/io.hpp"

namespace {

int run(const std::string& command, const std::string& config_path,
        const std::string& out_dir, const std::string& mode_name, long seed_override) {
  hystherm::ExperimentConfig cfg = hystherm::parse_config(config_path);
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);

  std::optional<hystherm::DerivativeMode> mode;
  if (mode_name == "bouligand") mode = hystherm::DerivativeMode::bouligand;
  if (mode_name == "newton") mode = hystherm::DerivativeMode::newton;

  const int rc = hystherm::run_subcommand(command, cfg, out_dir, mode);
  std::cout << "wrote " << out_dir << "/summary.json\n";
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hystherm: heat equation with a pointwise play-hysteresis forcing"};
  app.require_subcommand(1);

  std::string config_path, out_dir, mode_name;
  long seed_override = -1;

  const char* commands[] = {"simulate",  "first-order",   "verify",
                            "estimates", "max-principle", "newton-solve"};
  for (const char* name : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "config JSON path")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--mode", mode_name, "bouligand|newton")
        ->check(CLI::IsMember({"bouligand", "newton"}));
    sub->add_option("--seed", seed_override, "override the config seed");
  }

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, config_path, out_dir, mode_name, seed_override);
  } catch (const std::exception& e) {
    nlohmann::ordered_json err;
    err["error"] = {{"command", command}, {"message", e.what()}};
    std::cout << err.dump() << '\n';
    return 1;
  }
}
