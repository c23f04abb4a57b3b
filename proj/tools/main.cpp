#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "app.hpp"

namespace app = h2dft::app;

int main(int argc, char** argv) {
  CLI::App cli{"Spin-polarized exchange-only LDA stationary points of H2"};
  cli.require_subcommand(1);
  struct Options {
    std::string config, name, init;
    std::vector<std::string> sets;
    std::optional<double> alpha, R, bond;
    bool print_defaults = false, dry_run = false;
  };
  std::map<std::string, Options> opts;
  for (const auto& name : app::command_names()) {
    auto* sub = cli.add_subcommand(name);
    auto& o = opts[name];
    sub->add_option("-c,--config", o.config, "JSON config file or run manifest");
    sub->add_option("-s,--set", o.sets, "Override a config key: dotted.key=value");
    sub->add_option("-n,--name", o.name, "Run name (output subdirectory)");
    sub->add_option("--alpha", o.alpha, "system.alpha");
    sub->add_option("--R", o.R, "system.R (nuclei at +-R e1)");
    sub->add_option("--bond-length", o.bond, "system.bond_length = 2R");
    sub->add_option("--init", o.init, "system.init");
    sub->add_flag("--print-defaults", o.print_defaults, "Print the default config and exit");
    sub->add_flag("--dry-run", o.dry_run, "Validate and print the resolved config, then exit");
  }
  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : app::kConfigError;
  }
  const std::string command = cli.get_subcommands().front()->get_name();
  const Options& o = opts[command];
  if (o.print_defaults) {
    std::cout << app::default_config().dump(2) << '\n';
    return app::kOk;
  }

  app::RunSettings settings;
  try {
    app::json cfg = app::merge_config(o.config.empty() ? app::json::object() : app::read_config_file(o.config, command));
    auto set = [&](const std::string& key, const app::json& v) { app::apply_override(cfg, key + "=" + v.dump()); };
    if (!o.name.empty()) set("name", o.name);
    if (o.alpha) set("system.alpha", *o.alpha);
    if (o.R) set("system.R", *o.R);
    if (o.bond) set("system.bond_length", *o.bond);
    if (!o.init.empty()) set("system.init", o.init);
    for (const auto& a : o.sets) app::apply_override(cfg, a);
    settings = app::resolve(command, cfg);
  } catch (const app::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return app::kConfigError;
  }
  const auto out = app::output_directory(settings);
  if (o.dry_run) {
    std::cout << settings.config.dump(2) << '\n';
    std::cerr << "[" << command << "] config valid, outputs would go to " << out.string() << '\n';
    return app::kOk;
  }
  try {
    const int code = app::run(settings, out, std::cerr);
    std::cerr << "[" << command << "] outputs in " << out.string() << ", exit " << code << '\n';
    return code;
  } catch (const app::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return app::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return app::kSolverFailure;
  }
}
