#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "commands.hpp"
#include "shearflame/error.hpp"

using namespace shearflame;

int main(int argc, char** argv) {
  CLI::App app{"Effective burning velocity of curvature G-equations in shear flows"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::pair<std::string, std::string>> flags;
  auto flag = [&](const char* name, const char* key, const char* help) {
    app.add_option_function<std::string>(
        name, [&flags, key](const std::string& v) { flags.emplace_back(key, v); }, help);
  };
  app.add_option("--config", config_path, "flat key = value config file");
  flag("--grid-n", "grid_N", "cells per axis");
  flag("--A", "A", "flow intensity");
  flag("--A-range", "A_range", "lo:hi:k intensity range");
  flag("--d", "d", "Markstein number");
  flag("--P", "P", "direction p1,...,pn,p_last");
  flag("--profile", "profile", "cellular | constant:C | counterexample[:a] | csv:PATH");
  flag("--cutoff", "cutoff", "on | off | both");
  flag("--out", "out", "output directory");
  flag("--jobs", "jobs", "worker threads");
  std::vector<std::string> sets;
  app.add_option("--set", sets, "extra key=value overrides (any config key)");

  for (const auto& name : cli::subcommands()) app.add_subcommand(name, "run " + name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitConfig;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  std::string out_dir = "out";
  try {
    std::vector<std::pair<std::string, std::string>> entries;
    if (!config_path.empty()) {
      for (auto& kv : cli::read_config_file(config_path)) entries.emplace_back(kv);
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::kConfig, "--set expects key=value, got " + s);
      entries.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    // Flags win over the file and over --set.
    entries.insert(entries.end(), flags.begin(), flags.end());
    for (const auto& [k, v] : entries) {
      if (k == "out") out_dir = v;
    }
    const auto config = cli::make_config(entries);
    return cli::run_command(sub, config, std::cout);
  } catch (const std::exception& e) {
    const std::string body = cli::error_json(e);
    std::cerr << body << '\n';
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!ec) std::ofstream(std::filesystem::path(out_dir) / "error.json") << body << '\n';
    return cli::exit_code_for(e);
  }
}
