#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "harvest/dynamics.hpp"
#include "harvest/gp.hpp"
#include "harvest/mlp.hpp"

namespace harvest {

/// Harvest everything above a fixed escapement level, per species.
struct ConstantEscapement {
  Action escapement;
};

/// Fixed mortality per harvested species regardless of state.
struct ConstantMortality {
  Action mortality;
};

/// `factor` times a base mortality vector (e.g. 80% of the tuned optimum).
struct ScaledMortality {
  Action base;
  double factor = 1.0;
};

/// Neural policy acting on states normalized by `obs_bounds`.
struct MlpPolicy {
  MlpParams params;
  Pops obs_bounds;
};

/// GP-smoothed policy: one output per harvested species, clamped to [0, 1].
struct GpPolicy {
  GpRegressor regressor;
  Pops obs_bounds;
};

using PolicySpec = std::variant<ConstantEscapement, ConstantMortality, ScaledMortality, MlpPolicy, GpPolicy>;

std::string family_name(const PolicySpec& policy);

/// Throws std::invalid_argument when a field violates its range or the
/// vector lengths disagree with `n_harvested` (skipped when negative).
void validate_policy(const PolicySpec& policy, int n_harvested = -1);

/// Mortality (p - S)/p above escapement S, zero at or below it (and at p = 0).
Action cesc_act(const Pops& pops, const std::vector<int>& harvested, const Action& escapement);

Action cmort_act(const ConstantMortality& policy);
Action cmort_act(const ScaledMortality& policy);

/// Componentwise pops / bounds, clamped to [0, 1].
template <typename Derived, typename DerivedB>
Eigen::VectorXd normalize_state(const Eigen::MatrixBase<Derived>& pops, const Eigen::MatrixBase<DerivedB>& bounds) {
  return pops.cwiseQuotient(bounds).cwiseMax(0.0).cwiseMin(1.0).template cast<double>();
}

/// Per-species predictive mean at each normalized query column, clamped to
/// [0, 1]; result has one row per species.
Eigen::MatrixXd gp_predict(const GpPolicy& policy, const Eigen::Ref<const Eigen::MatrixXd>& obs);

/// Deterministic mortality vector for a state; MLP policies return their mean.
Action act(const PolicySpec& policy, const SimState& state, const ModelSpec& spec);

/// Versioned JSON text; MLP weights are stored as flat column-major arrays
/// with shape metadata, GP training sets inline.
std::string serialize_policy(const PolicySpec& policy);
PolicySpec parse_policy(std::string_view text);
void save_policy(const PolicySpec& policy, const std::filesystem::path& path);
PolicySpec load_policy(const std::filesystem::path& path);

}  // namespace harvest
