#include "harvest/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "harvest/policy.hpp"

namespace harvest {

TrainConfig TrainConfig::for_model(int model_id) {
  TrainConfig cfg;
  cfg.iterations = model_id == 1 ? 100 : 300;
  return cfg;
}

void TrainConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("training config: ") + what); };
  if (iterations < 0) fail("iterations must be >= 0");
  if (steps_per_iteration < 1) fail("steps_per_iteration must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must lie in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must lie in [0, 1]");
  if (!(clip_epsilon >= 0.0 && clip_epsilon < 1.0)) fail("clip_epsilon must lie in [0, 1)");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (minibatch_size < 1) fail("minibatch_size must be >= 1");
  if (epochs_per_iteration < 1) fail("epochs_per_iteration must be >= 1");
  if (!(entropy_coefficient >= 0.0)) fail("entropy_coefficient must be >= 0");
  if (!(value_coefficient > 0.0)) fail("value_coefficient must be > 0");
  if (!(max_grad_norm >= 0.0)) fail("max_grad_norm must be >= 0");
  if (hidden < 1) fail("hidden must be >= 1");
  if (!std::isfinite(log_std_init)) fail("log_std_init must be finite");
  if (checkpoint_every < 0) fail("checkpoint_every must be >= 0");
}

RolloutBatch collect_rollouts(const ModelSpec& spec, const MlpParams& params, int n_steps, Rng& rng) {
  if (n_steps < 1) throw std::invalid_argument("collect_rollouts: n_steps must be >= 1");
  if (spec.obs_bounds.size() != spec.dim()) throw DimensionError("collect_rollouts: spec has no obs_bounds");
  const int d = spec.dim();
  const int a = spec.n_harvested();
  RolloutBatch batch;
  batch.observations.resize(d, n_steps);
  batch.actions.resize(a, n_steps);
  batch.log_probs.resize(n_steps);
  batch.rewards.resize(n_steps);
  batch.values.resize(n_steps + 1);
  batch.dones.assign(static_cast<std::size_t>(n_steps), false);

  SimState state = initial_state(spec);
  double episode_return = 0.0;
  for (int t = 0; t < n_steps; ++t) {
    const Eigen::VectorXd obs = normalize_state(state.pops, spec.obs_bounds);
    const MlpOutput out = mlp_forward(params, obs);
    const ActionSample sample = sample_action(out.mean.col(0), out.log_std, rng);
    const StepRecord rec = step(spec, state, Action(sample.action), rng);

    batch.observations.col(t) = obs;
    batch.actions.col(t) = sample.raw;
    batch.log_probs[t] = sample.log_prob;
    batch.values[t] = out.value[0];
    batch.rewards[t] = rec.reward();
    episode_return += rec.reward();
    if (rec.terminated) {
      batch.dones[static_cast<std::size_t>(t)] = true;
      batch.episode_returns.push_back(episode_return);
      batch.episode_lengths.push_back(rec.after.t);
      episode_return = 0.0;
      state = initial_state(spec);
    } else {
      state = rec.after;
    }
  }
  if (batch.dones.back()) {
    batch.values[n_steps] = 0.0;
  } else {
    const Eigen::VectorXd obs = normalize_state(state.pops, spec.obs_bounds);
    batch.values[n_steps] = mlp_forward(params, obs).value[0];
  }
  return batch;
}

AdvantageEstimate gae(const Eigen::Ref<const Eigen::VectorXd>& rewards, const Eigen::Ref<const Eigen::VectorXd>& values,
                      const std::vector<bool>& dones, double gamma, double lambda) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n + 1 || static_cast<Eigen::Index>(dones.size()) != n)
    throw DimensionError("gae: values must have one more entry than rewards, dones exactly as many");
  AdvantageEstimate est;
  est.advantages.resize(n);
  double running = 0.0;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double live = dones[static_cast<std::size_t>(t)] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * values[t + 1] * live - values[t];
    running = delta + gamma * lambda * live * running;
    est.advantages[t] = running;
  }
  est.returns = est.advantages + values.head(n);
  return est;
}

Eigen::VectorXd normalize_advantages(const Eigen::Ref<const Eigen::VectorXd>& advantages) {
  const double mean = advantages.mean();
  Eigen::VectorXd centered = advantages.array() - mean;
  const double std = std::sqrt(centered.squaredNorm() / static_cast<double>(advantages.size()));
  if (std > 0.0) centered /= std;
  // A second centering pass removes the rounding residue of the first.
  centered.array() -= centered.mean();
  return centered;
}

PpoLoss ppo_loss(const MlpParams& params, const PpoSamples& s, const TrainConfig& cfg, MlpParams* grad) {
  const Eigen::Index n = s.advantages.size();
  if (n == 0) throw std::invalid_argument("ppo_loss: empty batch");
  MlpCache cache;
  const MlpOutput out = mlp_forward(params, s.observations, grad ? &cache : nullptr);
  const Eigen::ArrayXd inv_var = (-2.0 * out.log_std.array()).exp();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double lo = 1.0 - cfg.clip_epsilon, hi = 1.0 + cfg.clip_epsilon;

  PpoLoss loss;
  Eigen::MatrixXd d_mean(out.mean.rows(), n);
  Eigen::VectorXd d_log_std = Eigen::VectorXd::Zero(out.log_std.size());
  Eigen::RowVectorXd d_value(n);
  int clipped = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double adv = s.advantages[j];
    const double logp = gaussian_log_prob(s.actions.col(j), out.mean.col(j), out.log_std);
    const double ratio = std::exp(logp - s.old_log_probs[j]);
    const double unclipped = ratio * adv;
    const double clipped_term = std::clamp(ratio, lo, hi) * adv;
    loss.surrogate += std::min(unclipped, clipped_term) * inv_n;
    if (ratio < lo || ratio > hi) ++clipped;
    // d(-surrogate)/d(logp); zero where the clipped branch binds.
    const double d_logp = unclipped <= clipped_term ? -adv * ratio * inv_n : 0.0;
    const Eigen::ArrayXd diff = (s.actions.col(j) - out.mean.col(j)).array();
    d_mean.col(j) = (d_logp * diff * inv_var).matrix();
    d_log_std.array() += d_logp * (diff.square() * inv_var - 1.0);

    const double err = out.value[j] - s.returns[j];
    loss.value += err * err * inv_n;
    d_value[j] = cfg.value_coefficient * 2.0 * err * inv_n;
  }
  loss.entropy = (out.log_std.array() + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e)).sum();
  d_log_std.array() -= cfg.entropy_coefficient;
  loss.total = -loss.surrogate + cfg.value_coefficient * loss.value - cfg.entropy_coefficient * loss.entropy;
  loss.clip_fraction = clipped * inv_n;
  if (grad) *grad = mlp_backward(params, cache, out, d_mean, d_value, d_log_std);
  return loss;
}

void AdamState::apply(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad, double lr) {
  if (m.size() != params.size()) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
    step = 0;
  }
  ++step;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

namespace {

PpoSamples gather(const PpoSamples& batch, const std::vector<Eigen::Index>& order, std::size_t begin, std::size_t end) {
  const auto n = static_cast<Eigen::Index>(end - begin);
  PpoSamples mb;
  mb.observations.resize(batch.observations.rows(), n);
  mb.actions.resize(batch.actions.rows(), n);
  mb.old_log_probs.resize(n);
  mb.advantages.resize(n);
  mb.returns.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = order[begin + static_cast<std::size_t>(k)];
    mb.observations.col(k) = batch.observations.col(j);
    mb.actions.col(k) = batch.actions.col(j);
    mb.old_log_probs[k] = batch.old_log_probs[j];
    mb.advantages[k] = batch.advantages[j];
    mb.returns[k] = batch.returns[j];
  }
  return mb;
}

}  // namespace

PpoLoss ppo_update(MlpParams& params, AdamState& adam, const PpoSamples& batch, const TrainConfig& cfg, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(batch.advantages.size());
  if (n == 0) throw std::invalid_argument("ppo_update: empty batch");
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::VectorXd flat = params.flatten();
  const std::size_t mb_size = static_cast<std::size_t>(cfg.minibatch_size);

  PpoLoss last;
  for (int epoch = 0; epoch < cfg.epochs_per_iteration; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    PpoLoss sum;
    int minibatches = 0;
    for (std::size_t begin = 0; begin < n; begin += mb_size) {
      const std::size_t end = std::min(n, begin + mb_size);
      const PpoSamples mb = gather(batch, order, begin, end);
      MlpParams grad;
      const PpoLoss loss = ppo_loss(params, mb, cfg, &grad);
      Eigen::VectorXd g = grad.flatten();
      if (!std::isfinite(loss.total) || !g.allFinite()) {
        std::ostringstream msg;
        msg << "ppo_update: non-finite loss or gradient at epoch " << epoch << ", minibatch " << minibatches
            << " (surrogate=" << loss.surrogate << ", value=" << loss.value << ", entropy=" << loss.entropy << ")";
        throw NonFiniteLoss(msg.str());
      }
      if (cfg.max_grad_norm > 0.0) {
        const double norm = g.norm();
        if (norm > cfg.max_grad_norm) g *= cfg.max_grad_norm / norm;
      }
      adam.apply(flat, g, cfg.learning_rate);
      params.assign(flat);
      sum.total += loss.total;
      sum.surrogate += loss.surrogate;
      sum.value += loss.value;
      sum.entropy += loss.entropy;
      sum.clip_fraction += loss.clip_fraction;
      ++minibatches;
    }
    last.total = sum.total / minibatches;
    last.surrogate = sum.surrogate / minibatches;
    last.value = sum.value / minibatches;
    last.entropy = sum.entropy / minibatches;
    last.clip_fraction = sum.clip_fraction / minibatches;
  }
  return last;
}

TrainResult train(const ModelSpec& spec, const TrainConfig& cfg, const CheckpointFn& checkpoint) {
  cfg.validate();
  spec.validate();
  Rng init_rng = make_rng(cfg.seed, "init");
  TrainResult result;
  result.params = MlpParams::random(spec.dim(), spec.n_harvested(), init_rng, cfg.hidden, cfg.log_std_init);
  AdamState adam;
  for (int it = 0; it < cfg.iterations; ++it) {
    Rng rollout_rng = make_rng(cfg.seed, "rollout", static_cast<std::uint64_t>(it));
    const RolloutBatch batch = collect_rollouts(spec, result.params, cfg.steps_per_iteration, rollout_rng);
    const AdvantageEstimate est = gae(batch.rewards, batch.values, batch.dones, cfg.gamma, cfg.gae_lambda);

    PpoSamples samples{batch.observations, batch.actions, batch.log_probs, normalize_advantages(est.advantages),
                       est.returns};
    Rng shuffle_rng = make_rng(cfg.seed, "shuffle", static_cast<std::uint64_t>(it));
    TrainCurveRow row;
    row.iteration = it + 1;
    row.loss = ppo_update(result.params, adam, samples, cfg, shuffle_rng);
    row.episodes = static_cast<int>(batch.episode_returns.size());
    if (row.episodes > 0) {
      row.mean_return = std::accumulate(batch.episode_returns.begin(), batch.episode_returns.end(), 0.0) / row.episodes;
      row.mean_length =
          std::accumulate(batch.episode_lengths.begin(), batch.episode_lengths.end(), 0.0) / row.episodes;
    } else {
      row.mean_return = std::numeric_limits<double>::quiet_NaN();
      row.mean_length = std::numeric_limits<double>::quiet_NaN();
    }
    result.curve.push_back(row);
    if (checkpoint && cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0) checkpoint(it + 1, result.params);
  }
  return result;
}

}  // namespace harvest
