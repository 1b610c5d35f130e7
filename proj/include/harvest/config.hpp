#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "harvest/dynamics.hpp"
#include "harvest/harness.hpp"
#include "harvest/policy.hpp"
#include "harvest/ppo.hpp"

namespace harvest {

inline constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProjectionOptions {
  std::string dense_axis = "X";
  std::string color_axis = "Y";
  int dense_points = 100;
  int sparse_points = 5;
  int window_episodes = 100;
  double q_lo = 0.05;
  double q_hi = 0.95;
};

struct BifurcationOptions {
  double beta_h_min = 0.10;
  double beta_h_max = 0.60;
  double beta_h_step = 0.01;
};

/// Fully resolved run configuration. Every field has a value after loading.
struct RunConfig {
  ModelSpec model;
  std::uint64_t seed = 0;
  int bounds_episodes = 100;
  /// Inline policy (path or object); required by evaluate, smooth-gp and
  /// project-policy, optional for simulate (default: no harvest).
  std::optional<nlohmann::json> policy;
  TuneOptions tuning;
  TrainConfig training;
  int eval_episodes = 100;
  bool emit_trajectories = false;
  std::vector<double> tradeoff_fractions{0.8, 0.9, 0.95, 1.0};
  std::optional<std::vector<double>> tradeoff_mortality;
  ProjectionOptions projection;
  GpSmoothOptions gp;
  StabilityOptions stability;
  BifurcationOptions bifurcation;
  int simulate_episodes = 1;
  std::vector<int> compare_models;
  std::string output_dir = "harvest-out";
  int jobs = 1;
};

/// Fills defaults and validates. Unknown keys are rejected by name; a
/// failed constraint throws ConfigError naming the field.
RunConfig resolve_config(const nlohmann::json& raw);

/// Reads a JSON config file and applies `overrides` as a JSON merge patch.
/// Parse errors report line and column.
RunConfig load_config(const std::filesystem::path& path, const nlohmann::json& overrides = nlohmann::json::object());

/// Complete config; resolve_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);

nlohmann::json model_spec_to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

/// Resolves the policy entry (a path or an inline object) to a PolicySpec.
PolicySpec resolve_policy(const RunConfig& config);

}  // namespace harvest
