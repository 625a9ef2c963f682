#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fracest/cli/commands.hpp"

namespace {

using fracest::cli::Command;

struct Subcommand {
  Command command;
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> given;
};

void add_key_options(Subcommand& sub) {
  sub.app->add_option("--config", sub.config_path, "flat 'key = value' config file; flags override it");
  for (const auto& key : fracest::cli::key_schema()) {
    if (!(key.commands & fracest::cli::bit(sub.command))) continue;
    std::string help = key.help;
    if (!key.default_value.empty() && !key.flag) help += " [default: " + key.default_value + "]";
    const std::string name = key.name;
    if (key.flag) {
      sub.app->add_flag_callback("--" + name, [&sub, name] { sub.given[name] = "true"; }, help);
    } else {
      sub.app->add_option_function<std::string>(
          "--" + name, [&sub, name](const std::string& v) { sub.given[name] = v; }, help);
    }
  }
}

fracest::cli::RunConfig build_config(Command command, const std::string& config_path,
                                     const std::map<std::string, std::string>& given) {
  fracest::cli::RunConfig cfg(command);
  if (!config_path.empty()) {
    const auto file = fracest::cli::load_config(config_path);
    if (file.command && fracest::cli::parse_command(*file.command) != command) {
      throw fracest::ValidationError("config file is for '" + *file.command + "', not '" +
                                     std::string(fracest::cli::to_string(command)) + "'");
    }
    for (const auto& [k, v] : file.entries) cfg.set(k, v);
  }
  for (const auto& [k, v] : given) cfg.set(k, v);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hurst exponent estimation: fractional process generation, classical estimators and an "
               "LSTM regressor"};
  app.require_subcommand(0, 1);
  std::string top_config;
  app.add_option("--config", top_config, "run a config file whose 'command' key names the subcommand");

  std::vector<std::unique_ptr<Subcommand>> subs;
  const std::pair<Command, const char*> defs[] = {
      {Command::generate, "generate fBm, fOU or lfsm trajectories"},
      {Command::train, "train the LSTM estimator on streamed synthetic paths"},
      {Command::estimate, "estimate H for series in a CSV file"},
      {Command::evaluate, "evaluate estimators on synthetic or saved paths"},
  };
  for (const auto& [command, description] : defs) {
    auto sub = std::make_unique<Subcommand>();
    sub->command = command;
    sub->app = app.add_subcommand(std::string(fracest::cli::to_string(command)), description);
    add_key_options(*sub);
    subs.push_back(std::move(sub));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fracest::cli::kExitValidation;
  }

  try {
    std::optional<fracest::cli::RunConfig> cfg;
    for (const auto& sub : subs) {
      if (sub->app->parsed()) cfg = build_config(sub->command, sub->config_path, sub->given);
    }
    if (!cfg) {
      if (top_config.empty()) {
        std::cerr << app.help();
        return fracest::cli::kExitValidation;
      }
      const auto file = fracest::cli::load_config(top_config);
      if (!file.command) throw fracest::ValidationError(top_config + ": missing 'command' key");
      cfg = build_config(fracest::cli::parse_command(*file.command), top_config, {});
    }
    fracest::cli::run(*cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return fracest::cli::exit_code_for(e);
  }
  return fracest::cli::kExitOk;
}
