#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "harvest/commands.hpp"
#include "harvest/config.hpp"

namespace {

using nlohmann::json;

/// "a.b=value" -> {"a": {"b": value}}; values parse as JSON, else as strings.
void apply_setting(json& overrides, const std::string& setting) {
  const auto eq = setting.find('=');
  if (eq == std::string::npos || eq == 0) throw harvest::ConfigError("--set expects key=value, got '" + setting + "'");
  const std::string key = setting.substr(0, eq);
  const std::string text = setting.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  std::string pointer = "/" + key;
  for (auto& ch : pointer)
    if (ch == '.') ch = '/';
  overrides[json::json_pointer(pointer)] = value;
}

const std::map<std::string, std::string> kDescriptions = {
    {"simulate", "Run episodes under a policy (zero mortality by default) and record trajectories"},
    {"bifurcation", "Equilibria of the single-species model over a predation-strength grid"},
    {"tune-cesc", "Grid search for the best constant escapement"},
    {"tune-cmort", "Grid search for the best constant mortality"},
    {"train-ppo", "Train a PPO policy network"},
    {"smooth-gp", "Refit a network policy with a Gaussian process over its visited window"},
    {"evaluate", "Evaluate a stored policy over seeded episodes"},
    {"tradeoff", "Evaluate fractions of the optimal constant mortality"},
    {"project-policy", "Slice a policy along one state axis"},
    {"compare", "Tune, train, smooth and evaluate every strategy on several models"},
    {"stability", "Repeat the pipeline on randomly perturbed parameters"}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harvest policy experiments: simulation, tuning, PPO training, GP smoothing and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int jobs = 0;
  int model = 0;
  std::string policy;
  std::vector<std::string> settings;

  for (const auto& name : harvest::subcommand_names()) {
    auto* sub = app.add_subcommand(name, kDescriptions.at(name));
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "Root seed (overrides the config)");
    sub->add_option("--out", out_dir, "Output directory (default: $HARVEST_OUT/<subcommand>)");
    sub->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--model", model, "Model 1-4 (overrides the config)")->check(CLI::Range(1, 4));
    sub->add_option("--policy", policy, "Policy JSON file");
    sub->add_option("--set", settings, "Config override key=value; dotted keys address nested fields");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommands().front();

  try {
    json overrides = json::object();
    for (const auto& s : settings) apply_setting(overrides, s);
    if (sub->count("--seed")) overrides["seed"] = seed;
    if (sub->count("--model")) overrides["model"] = model;
    if (sub->count("--jobs")) overrides["jobs"] = jobs;
    if (sub->count("--policy")) overrides["policy"] = policy;

    const harvest::RunConfig config =
        config_path.empty() ? harvest::resolve_config(overrides) : harvest::load_config(config_path, overrides);

    std::filesystem::path dir;
    if (!out_dir.empty()) {
      dir = out_dir;
    } else {
      const char* root = std::getenv("HARVEST_OUT");
      dir = std::filesystem::path(root && *root ? root : config.output_dir) / name;
    }
    harvest::run_subcommand(name, config, dir, std::cerr);
    std::cout << dir.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
