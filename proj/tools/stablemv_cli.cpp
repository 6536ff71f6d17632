// stablemv: sampling, distances, simulation, Picard iteration, regularity
// probes and the counterexample lab from the command line.
//
// Exit status: 0 success, 1 a recipe failed, 2 invalid configuration,
// 3 runtime error.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stablemv/experiments.hpp"
#include "stablemv/io.hpp"
#include "stablemv/recipes.hpp"

namespace {

using stablemv::ConfigError;
using stablemv::Json;

// Flag text to JSON, typed by the default value at the same key.
Json flag_value(const std::string& key, const Json& def, const std::string& text, bool number_or_string) {
  auto parse_number = [&](const std::string& s) -> std::optional<Json> {
    try {
      Json j = Json::parse(s);
      if (j.is_number()) return j;
    } catch (const Json::parse_error&) {
    }
    return std::nullopt;
  };
  if (number_or_string) return parse_number(text).value_or(Json(text));
  if (def.is_string()) return text;
  if (def.is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError(key, "expected true or false, got '" + text + "'");
  }
  if (def.is_number()) {
    if (auto j = parse_number(text)) return *j;
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  if (def.is_array()) {
    const std::string s = text.front() == '[' ? text : "[" + text + "]";
    try {
      return Json::parse(s);
    } catch (const Json::parse_error&) {
      throw ConfigError(key, "expected a comma-separated list of numbers, got '" + text + "'");
    }
  }
  throw ConfigError(key, "set this field in the config file");
}

struct SubcommandFlags {
  CLI::App* app = nullptr;
  std::string config_path;
  std::string output_root;
  std::map<std::string, std::string> values;
};

int run_subcommand(const stablemv::Subcommand& sc, const SubcommandFlags& f) {
  Json file;
  if (!f.config_path.empty()) file = stablemv::load_config_file(f.config_path);
  Json flags = Json::object();
  for (const auto& [key, text] : f.values) {
    if (f.app->count("--" + key) == 0) continue;
    flags[key] = flag_value(key, sc.defaults[key], text, sc.number_or_string.count(key) != 0);
  }
  const Json resolved = stablemv::resolve_config(sc.name, file, flags);
  stablemv::RunDirectory dir(stablemv::resolve_output_root(f.output_root), resolved);
  const Json printed = stablemv::run_subcommand(resolved, dir);
  const auto path = dir.commit();
  if (!printed.is_null()) std::cout << printed.dump(2) << "\n";
  std::cout << path.string() << "\n";
  return 0;
}

int run_recipes(const std::string& which, const std::string& output_root, std::uint64_t seed) {
  std::vector<std::string> names;
  if (which == "all")
    names = stablemv::recipe_names();
  else
    names.push_back(which);
  const auto root = stablemv::resolve_output_root(output_root);
  bool all_passed = true;
  for (const auto& n : names) {
    const auto o = stablemv::run_recipe(n, root, seed);
    std::cout << (o.passed ? "PASS " : "FAIL ") << o.name << ": " << o.detail << " [" << o.run_path.string()
              << "]" << std::endl;
    all_passed = all_passed && o.passed;
  }
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable-driven McKean-Vlasov toolkit"};
  app.set_version_flag("--version", std::string(STABLEMV_VERSION));
  app.require_subcommand(0, 1);

  std::string recipe, output_root;
  std::uint64_t seed = 1;
  bool list = false;
  app.add_option("--recipe", recipe, "run a named acceptance recipe, or 'all'");
  app.add_flag("--list-recipes", list, "list recipe names");
  app.add_option("--seed", seed, "recipe seed");
  app.add_option("--output-root", output_root,
                 std::string("output root (default: $") + stablemv::kOutputRootEnv + " or ./runs)");

  std::vector<std::pair<const stablemv::Subcommand*, SubcommandFlags>> subs;
  subs.reserve(stablemv::subcommands().size());
  for (const auto& sc : stablemv::subcommands()) {
    subs.emplace_back(&sc, SubcommandFlags{});
    auto& f = subs.back().second;
    f.app = app.add_subcommand(sc.name, "run the " + sc.name + " experiment");
    f.app->add_option("--config", f.config_path, "JSON config file");
    f.app->add_option("--output-root", f.output_root, "output root");
    for (const auto& [key, def] : sc.defaults.items()) {
      if (def.is_object()) continue;
      f.values[key];
      f.app->add_option("--" + key, f.values[key], "default: " + def.dump());
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (list) {
      for (const auto& r : stablemv::recipes::all()) std::cout << r.name << "  " << r.description << "\n";
      return 0;
    }
    if (!recipe.empty()) return run_recipes(recipe, output_root, seed);
    for (const auto& [sc, f] : subs)
      if (f.app->parsed()) return run_subcommand(*sc, f);
    std::cout << app.help();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const stablemv::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
