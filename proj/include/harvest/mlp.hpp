#pragma once

#include <Eigen/Dense>

#include "harvest/random.hpp"

namespace harvest {

/// Actor-critic network: obs -> tanh(64) -> tanh(64) -> {policy head, value head}.
/// The policy head's output is squashed by a logistic onto [0, 1]; the
/// log standard deviation is a free, state-independent vector.
struct MlpParams {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  Eigen::MatrixXd w_pi;
  Eigen::VectorXd b_pi;
  Eigen::VectorXd log_std;
  Eigen::RowVectorXd w_v;
  double b_v = 0.0;

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden() const { return static_cast<int>(w1.rows()); }
  int action_dim() const { return static_cast<int>(w_pi.rows()); }

  static MlpParams zeros(int input_dim, int action_dim, int hidden = 64);
  /// Scaled-Gaussian initialization; the policy head starts near zero so
  /// every state initially maps to mortality ~0.5.
  static MlpParams random(int input_dim, int action_dim, Rng& rng, int hidden = 64, double log_std_init = 0.0);

  Eigen::Index size() const;
  Eigen::VectorXd flatten() const;
  /// Inverse of flatten on a params object of the same shape.
  void assign(const Eigen::Ref<const Eigen::VectorXd>& flat);
  bool all_finite() const;
  bool operator==(const MlpParams& other) const;
};

struct MlpOutput {
  Eigen::MatrixXd mean;      // action_dim x batch, in [0, 1]
  Eigen::VectorXd log_std;   // action_dim
  Eigen::RowVectorXd value;  // batch
};

/// Intermediate activations kept for the backward pass.
struct MlpCache {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd h1;
  Eigen::MatrixXd h2;
};

/// Batched forward pass; `obs` holds one observation per column. Throws
/// DimensionError when obs.rows() differs from the input layer width.
MlpOutput mlp_forward(const MlpParams& params, const Eigen::Ref<const Eigen::MatrixXd>& obs,
                      MlpCache* cache = nullptr);

/// Gradient of a scalar loss given its partials with respect to the
/// squashed means, the values and the log standard deviations.
MlpParams mlp_backward(const MlpParams& params, const MlpCache& cache, const MlpOutput& out,
                       const Eigen::Ref<const Eigen::MatrixXd>& d_mean,
                       const Eigen::Ref<const Eigen::RowVectorXd>& d_value,
                       const Eigen::Ref<const Eigen::VectorXd>& d_log_std);

struct ActionSample {
  Eigen::VectorXd raw;     // unclamped draw
  Eigen::VectorXd action;  // clamped to [0, 1]
  double log_prob = 0.0;   // of the unclamped draw
};

double gaussian_log_prob(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& mean,
                         const Eigen::Ref<const Eigen::VectorXd>& log_std);

/// Diagonal-Gaussian draw around `mean`. Deterministic mode returns the mean.
ActionSample sample_action(const Eigen::Ref<const Eigen::VectorXd>& mean,
                           const Eigen::Ref<const Eigen::VectorXd>& log_std, Rng& rng, bool deterministic = false);

}  // namespace harvest
