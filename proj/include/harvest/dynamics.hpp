#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "harvest/random.hpp"

namespace harvest {

/// Population vector of at most three species, stored inline.
template <typename Scalar>
using PopVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using Pops = PopVector<double>;
/// Mortality per harvested species, each in [0, 1].
using Action = PopVector<double>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Logistic growth increment r x (1 - x/K).
template <typename Scalar>
constexpr Scalar logistic(Scalar x, Scalar r, Scalar K) {
  return r * x * (Scalar(1) - x / K);
}

/// Holling type-III consumption beta h x^2 / (c^2 + x^2).
template <typename Scalar>
constexpr Scalar predation(Scalar x, Scalar h, Scalar beta, Scalar c) {
  const Scalar x2 = x * x;
  return beta * h * x2 / (c * c + x2);
}

/// Single prey species under a fixed predator population H.
struct ParamSet1 {
  double r = 1.0;
  double K = 1.0;
  double beta = 0.25;
  double H = 1.0;
  double c = 0.1;
  double sigma2 = 0.05;

  void validate() const;
  bool operator==(const ParamSet1&) const = default;
};

/// Two competing prey (X, Y) and a shared predator Z.
struct ParamSet3 {
  double r_X = 1.0;
  double K_X = 1.0;
  double r_Y = 1.0;
  double K_Y = 1.0;
  double c_XY = 0.1;
  double beta = 0.3;
  double c = 0.3;
  double D = 1.1;
  double b = 0.1;
  double d_Z = 0.1;
  double sigma2_X = 0.05;
  double sigma2_Y = 0.05;
  double sigma2_Z = 0.05;

  void validate() const;
  bool operator==(const ParamSet3&) const = default;
};

using ModelParams = std::variant<ParamSet1, ParamSet3>;

template <typename Scalar>
Scalar may_increment(const ParamSet1& p, Scalar x) {
  return logistic<Scalar>(x, Scalar(p.r), Scalar(p.K)) -
         predation<Scalar>(x, Scalar(p.H), Scalar(p.beta), Scalar(p.c));
}

/// Deterministic increment of the three-species system with an explicit
/// growth rate for X (which drifts in the non-stationary model).
template <typename Derived>
PopVector<typename Derived::Scalar> three_species_increment(
    const ParamSet3& p, const Eigen::MatrixBase<Derived>& n, typename Derived::Scalar r_x) {
  using Scalar = typename Derived::Scalar;
  const Scalar x = n[0], y = n[1], z = n[2];
  const Scalar competition = Scalar(p.c_XY) * x * y;
  PopVector<Scalar> out(3);
  out[0] = logistic<Scalar>(x, r_x, Scalar(p.K_X)) -
           predation<Scalar>(x, z, Scalar(p.beta), Scalar(p.c)) - competition;
  out[1] = logistic<Scalar>(y, Scalar(p.r_Y), Scalar(p.K_Y)) -
           Scalar(p.D) * predation<Scalar>(y, z, Scalar(p.beta), Scalar(p.c)) - competition;
  out[2] = (Scalar(p.b) * (x + Scalar(p.D) * y) - Scalar(p.d_Z)) * z;
  return out;
}

/// Multiplicative drift applied to r_X: 1 at t = 0, falling linearly to
/// `end_factor` at t = `ramp_steps`, constant afterwards.
struct RxSchedule {
  bool enabled = false;
  double end_factor = 0.5;
  int ramp_steps = 100;

  double factor(int t) const;
  bool operator==(const RxSchedule&) const = default;
};

/// Growth rate of X in the drifting model: 1 - t/200 up to t = 100, then 1/2.
double rx_at(int t);

struct ModelSpec {
  int model_id = 1;
  ModelParams params = ParamSet1{};
  std::vector<int> harvested{0};
  RxSchedule rx_schedule;
  Pops thresholds;
  int horizon = 200;
  Pops initial_state;
  Pops obs_bounds;

  int dim() const { return std::holds_alternative<ParamSet1>(params) ? 1 : 3; }
  int n_harvested() const { return static_cast<int>(harvested.size()); }
  Pops noise_variances() const;
  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
  bool operator==(const ModelSpec& other) const;
};

/// Default spec for models 1-4 without obs_bounds (see default_model_spec).
ModelSpec base_model_spec(int model_id);
/// Default spec with obs_bounds derived from simulated unharvested episodes.
ModelSpec default_model_spec(int model_id);

struct SimState {
  Pops pops;
  int t = 0;
};

SimState initial_state(const ModelSpec& spec);

enum class Cause { none, near_extinction, horizon };
const char* to_string(Cause cause);

struct StepRecord {
  SimState before;
  Action action;
  double harvest_reward = 0.0;
  double penalty = 0.0;
  SimState after;
  bool terminated = false;
  Cause cause = Cause::none;
  /// Index of the first species found at or below its threshold, else -1.
  int extinct_species = -1;

  double reward() const { return harvest_reward + penalty; }
};

/// f evaluated at the state (no noise, no harvest).
Pops natural_increment(const ModelSpec& spec, const SimState& state);

/// True when the state may not be stepped any further.
bool is_terminal(const ModelSpec& spec, const SimState& state);

/// One harvest-then-recruitment transition. A harvest that leaves a species
/// at or below its threshold ends the step before recruitment. Throws std::invalid_argument
/// for an action outside [0,1], DimensionError for a wrong action length, and
/// std::logic_error when stepping a terminal state.
StepRecord step(const ModelSpec& spec, const SimState& state, const Action& action, Rng& rng);

struct Trajectory {
  std::vector<StepRecord> steps;

  int length() const { return static_cast<int>(steps.size()); }
  double total_reward() const;
};

struct EpisodeResult {
  double total_reward = 0.0;
  int length = 0;
  Cause cause = Cause::none;
};

/// Runs one episode from the fixed initial state until termination. `act`
/// maps a SimState to an Action. When `record` is non-null every step is
/// appended to it.
template <typename PolicyFn>
EpisodeResult run_episode(const ModelSpec& spec, PolicyFn&& act, Rng& rng, Trajectory* record = nullptr) {
  EpisodeResult result;
  SimState state = initial_state(spec);
  for (;;) {
    const Action a = act(state);
    StepRecord rec = step(spec, state, a, rng);
    result.total_reward += rec.reward();
    result.length = rec.after.t;
    state = rec.after;
    const bool done = rec.terminated;
    result.cause = rec.cause;
    if (record) record->steps.push_back(std::move(rec));
    if (done) return result;
  }
}

/// Bounds for state normalization: 1.25 x the componentwise maximum seen in
/// `n_episodes` unharvested episodes, rounded up to two decimals.
Pops natural_range_bounds(const ModelSpec& spec, int n_episodes, Rng& rng);

struct Equilibrium {
  double x = 0.0;
  bool stable = false;
};

struct BifurcationRow {
  double beta_h = 0.0;
  std::vector<Equilibrium> equilibria;  // ascending in x
};

/// Real roots of x^3 + a x^2 + b x + c, ascending. Near-double roots are
/// reported once per distinct value.
std::vector<double> solve_cubic(double a, double b, double c);

/// Interior equilibria of the unharvested single-species model for each
/// value of the combined predation pressure beta*H.
std::vector<BifurcationRow> fixed_points_model1(const ParamSet1& params, const std::vector<double>& beta_h_grid);

}  // namespace harvest
