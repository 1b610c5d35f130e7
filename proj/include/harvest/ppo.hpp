#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "harvest/dynamics.hpp"
#include "harvest/mlp.hpp"

namespace harvest {

struct TrainConfig {
  int iterations = 300;
  int steps_per_iteration = 4000;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  double learning_rate = 3e-4;
  int minibatch_size = 128;
  int epochs_per_iteration = 10;
  double entropy_coefficient = 0.0;
  double value_coefficient = 0.5;
  /// Global gradient-norm limit; 0 disables clipping.
  double max_grad_norm = 0.0;
  int hidden = 64;
  double log_std_init = 0.0;
  int checkpoint_every = 10;
  std::uint64_t seed = 0;

  /// Iteration budget used for model 1 (the three-species models use 300).
  static TrainConfig for_model(int model_id);
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Transitions aligned by index. `values` has one extra trailing entry: the
/// bootstrap value of the state after the last transition (0 if terminal).
struct RolloutBatch {
  Eigen::MatrixXd observations;  // obs_dim x T
  Eigen::MatrixXd actions;       // action_dim x T, unclamped draws
  Eigen::VectorXd log_probs;
  Eigen::VectorXd rewards;
  Eigen::VectorXd values;        // T + 1
  std::vector<bool> dones;
  std::vector<double> episode_returns;  // undiscounted, completed episodes only
  std::vector<int> episode_lengths;

  Eigen::Index size() const { return rewards.size(); }
};

/// Simulates the stochastic MLP policy for exactly `n_steps` transitions,
/// restarting from the fixed initial state whenever an episode ends.
RolloutBatch collect_rollouts(const ModelSpec& spec, const MlpParams& params, int n_steps, Rng& rng);

struct AdvantageEstimate {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

/// Generalized advantage estimation by backward recursion. `values` must
/// have rewards.size() + 1 entries.
AdvantageEstimate gae(const Eigen::Ref<const Eigen::VectorXd>& rewards, const Eigen::Ref<const Eigen::VectorXd>& values,
                      const std::vector<bool>& dones, double gamma, double lambda);

/// Shifts and scales to zero mean and unit (population) variance.
Eigen::VectorXd normalize_advantages(const Eigen::Ref<const Eigen::VectorXd>& advantages);

struct PpoLoss {
  double total = 0.0;
  double surrogate = 0.0;  // mean clipped surrogate (maximized)
  double value = 0.0;      // mean squared value error
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

/// Minibatch view passed to the loss.
struct PpoSamples {
  Eigen::MatrixXd observations;
  Eigen::MatrixXd actions;
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

/// Total loss -surrogate + c_v * value_error - c_e * entropy and, when
/// `grad` is non-null, its gradient with respect to every parameter.
PpoLoss ppo_loss(const MlpParams& params, const PpoSamples& samples, const TrainConfig& cfg, MlpParams* grad);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void apply(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad, double lr);
};

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Epochs of shuffled-minibatch gradient steps on the clipped objective.
/// Advantages are expected to be normalized already. Returns the losses
/// averaged over the final epoch; throws NonFiniteLoss on NaN/Inf.
PpoLoss ppo_update(MlpParams& params, AdamState& adam, const PpoSamples& batch, const TrainConfig& cfg, Rng& rng);

struct TrainCurveRow {
  int iteration = 0;
  double mean_return = 0.0;
  double mean_length = 0.0;
  int episodes = 0;
  PpoLoss loss;
};

using TrainCurve = std::vector<TrainCurveRow>;

struct TrainResult {
  MlpParams params;
  TrainCurve curve;
};

using CheckpointFn = std::function<void(int iteration, const MlpParams& params)>;

/// Full training loop: collect -> GAE -> normalize -> update, repeated
/// cfg.iterations times. A pure function of (spec, cfg); `checkpoint` is
/// called every cfg.checkpoint_every iterations.
TrainResult train(const ModelSpec& spec, const TrainConfig& cfg, const CheckpointFn& checkpoint = {});

}  // namespace harvest
