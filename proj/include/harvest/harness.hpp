#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "harvest/dynamics.hpp"
#include "harvest/gp_smooth.hpp"
#include "harvest/policy.hpp"
#include "harvest/ppo.hpp"

namespace harvest {

/// Monte Carlo outcome of a policy. `std_dev` is the sample (n - 1)
/// standard deviation of the per-episode totals.
struct EvalSummary {
  std::vector<double> rewards;
  std::vector<int> lengths;
  int horizon = 0;
  double mean = 0.0;
  double std_dev = 0.0;
  double full_fraction = 0.0;

  std::size_t episodes() const { return rewards.size(); }
  double std_error() const;
};

EvalSummary summarize(std::vector<double> rewards, std::vector<int> lengths, int horizon);

/// Runs `n_episodes` episodes with the deterministic policy. Episode i draws
/// its noise from derive_seed(seed, "episode", i), so two policies evaluated
/// with the same seed face the same noise realizations.
EvalSummary evaluate(const ModelSpec& spec, const PolicySpec& policy, int n_episodes, std::uint64_t seed, int jobs = 1,
                     std::vector<Trajectory>* trajectories = nullptr);

struct TuneOptions {
  int episodes = 100;
  /// Grid points per axis; <= 0 selects 101 for one harvested species, 51 for two.
  int points = 0;
  double ridge_tolerance = 0.01;
  int jobs = 1;
};

struct TuneReport {
  std::string family;  // "cesc" or "cmort"
  std::vector<std::vector<double>> axes;
  /// Row-major over the axes (first axis slowest).
  std::vector<double> means;
  std::vector<double> std_errors;
  std::vector<double> full_fractions;
  std::size_t argmax = 0;
  Action best;
  double best_mean = 0.0;
  /// Grid points whose mean is within ridge_tolerance * |best_mean| of the best.
  std::vector<std::size_t> ridge;
  bool ridge_connected = true;
  double ridge_tolerance = 0.01;
  int episodes = 0;

  std::size_t size() const { return means.size(); }
  Action point(std::size_t flat_index) const;
};

/// Evenly spaced grid on [0, upper] with `points` values.
std::vector<double> linspace(double lo, double hi, int points);

TuneReport tune_cmort(const ModelSpec& spec, std::uint64_t seed, const TuneOptions& options = {});
TuneReport tune_cesc(const ModelSpec& spec, std::uint64_t seed, const TuneOptions& options = {});

struct TradeoffRow {
  double fraction = 1.0;
  Action mortality;
  EvalSummary summary;
};

/// Evaluates ScaledMortality(optimal, f) for each fraction (ascending).
std::vector<TradeoffRow> mortality_tradeoff(const ModelSpec& spec, const Action& optimal_cmort,
                                            std::vector<double> fractions, int n_episodes, std::uint64_t seed,
                                            int jobs = 1);

/// Axis index for "X", "Y" or "Z"; throws std::invalid_argument otherwise or
/// when the axis does not exist in a model of dimension `dim`.
int parse_axis(const std::string& name, int dim);

struct ProjectionRow {
  Eigen::VectorXd obs;   // normalized state
  Eigen::VectorXd pops;  // state in biomass units
  Eigen::VectorXd mortality;
};

struct ProjectionTable {
  int dense_axis = 0;
  int color_axis = -1;
  std::vector<ProjectionRow> rows;
};

/// Sweeps `dense_axis` over `dense_points` values on [0, 1] while every other
/// axis takes `sparse_points` values inside its window.
ProjectionTable policy_projection(const PolicySpec& policy, const ModelSpec& spec, const PopularWindow& windows,
                                  int dense_axis, int color_axis, int dense_points = 100, int sparse_points = 5);

/// Multiplies each dynamic parameter by (1 + g), g ~ N(0, sigma^2), redrawing
/// g until the result is positive. Noise variances are left alone unless
/// `perturb_variances` is set.
ParamSet3 perturb_params(const ParamSet3& params, double sigma, Rng& rng, bool perturb_variances = false);
ParamSet1 perturb_params(const ParamSet1& params, double sigma, Rng& rng, bool perturb_variances = false);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  /// One-sided p-value for H1: mean(a) > mean(b).
  double p_greater = 1.0;
  double diff = 0.0;
  /// 95% two-sided confidence interval of mean(a) - mean(b).
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

WelchResult welch_test(const std::vector<double>& a, const std::vector<double>& b);

struct GpSmoothOptions {
  RbfWhiteKernel kernel;
  int window_episodes = 100;
  double q_lo = 0.05;
  double q_hi = 0.95;
  int dense_points = 51;
  int sparse_points = 5;
};

struct PipelineOptions {
  TuneOptions tune;
  TrainConfig train;
  GpSmoothOptions gp;
  int eval_episodes = 100;
  bool include_cmort = true;
  int jobs = 1;
};

/// Everything needed for one column of the strategy comparison.
struct PipelineResult {
  ModelSpec spec;
  TuneReport cesc_tune;
  std::optional<TuneReport> cmort_tune;
  TrainResult ppo;
  GpPolicy ppo_gp;
  PopularWindow window;
  EvalSummary cesc;
  std::optional<EvalSummary> cmort;
  EvalSummary ppo_eval;
  EvalSummary ppo_gp_eval;
};

/// Tunes CEsc (and CMort), trains PPO, smooths it with a GP fitted on grids
/// placed by the PPO policy's popular window, and evaluates every strategy
/// with a shared evaluation seed. The training seed in options.train is
/// replaced by one derived from `seed`.
PipelineResult run_pipeline(const ModelSpec& spec, const PipelineOptions& options, std::uint64_t seed);

struct StabilityOptions {
  std::vector<double> strengths{0.04, 0.08, 0.12, 0.16, 0.20};
  int samples = 5;
  int bounds_episodes = 100;
  bool perturb_variances = false;
  PipelineOptions pipeline;

  StabilityOptions();
};

struct StabilitySample {
  double strength = 0.0;
  int sample = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  ParamSet3 params;
  Action cesc_escapement;
  double cesc_mean = 0.0;
  double ppo_mean = 0.0;
  double ppo_gp_mean = 0.0;
  double diff_ppo = 0.0;
  double diff_ppo_gp = 0.0;
};

struct StabilityAggregate {
  double strength = 0.0;
  int n_ok = 0;
  double mean_diff_ppo = 0.0;
  double std_diff_ppo = 0.0;
  double mean_diff_ppo_gp = 0.0;
  double std_diff_ppo_gp = 0.0;
};

struct StabilityReport {
  std::vector<StabilitySample> samples;
  std::vector<StabilityAggregate> aggregates;
};

/// Seed of sample `index` at noise strength `strength`; independent of the
/// order in which samples are processed.
std::uint64_t stability_sample_seed(std::uint64_t root, double strength, int index);

/// Perturbs the three-species parameters, re-derives normalization bounds
/// and runs the pipeline (without CMort) for one realization.
StabilitySample run_stability_sample(const ModelSpec& base, double strength, int index, std::uint64_t root_seed,
                                     const StabilityOptions& options);

StabilityAggregate aggregate_samples(double strength, const std::vector<StabilitySample>& samples);

StabilityReport stability_analysis(const ModelSpec& base, const StabilityOptions& options, std::uint64_t seed);

struct ComparisonCell {
  int model_id = 0;
  std::string strategy;
  double mean = 0.0;
  double normalized = 0.0;
  double full_fraction = 0.0;
};

/// Column-normalized (per model) mean rewards paired with full-horizon
/// fractions, in strategy order CEsc, CMort, PPO, PPO+GP.
std::vector<ComparisonCell> comparison_matrix(const std::vector<PipelineResult>& columns);

}  // namespace harvest
