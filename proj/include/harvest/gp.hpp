#pragma once

#include <Eigen/Dense>

#include <stdexcept>

namespace harvest {

/// k(a, b) = exp(-|a - b|^2 / (2 l^2)) + noise_level * [a is b].
struct RbfWhiteKernel {
  double length_scale = 10.0;
  double noise_level = 0.1;

  bool operator==(const RbfWhiteKernel&) const = default;
};

/// Dense RBF gram matrix between the columns of `a` and `b`.
Eigen::MatrixXd rbf_gram(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                         double length_scale);

class GpFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Zero-prior-mean Gaussian-process regressor with any number of outputs
/// sharing one set of training inputs (and hence one factorization).
class GpRegressor {
 public:
  GpRegressor() = default;

  /// `inputs` holds one training point per column; `targets` one row per
  /// point and one column per output. Jitter starting at 1e-10 is added to
  /// the diagonal when the factorization fails, escalating tenfold up to
  /// 1e-4 before GpFitError is thrown.
  static GpRegressor fit(Eigen::MatrixXd inputs, Eigen::MatrixXd targets, RbfWhiteKernel kernel);

  /// Rebuilds a fitted regressor from stored weights without refactoring.
  static GpRegressor from_parts(Eigen::MatrixXd inputs, Eigen::MatrixXd targets, RbfWhiteKernel kernel,
                                Eigen::MatrixXd alpha, double jitter);

  bool fitted() const { return fitted_; }
  /// Predictive means, one row per output and one column per query.
  Eigen::MatrixXd predict(const Eigen::Ref<const Eigen::MatrixXd>& queries) const;

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::MatrixXd& targets() const { return targets_; }
  const Eigen::MatrixXd& alpha() const { return alpha_; }
  const RbfWhiteKernel& kernel() const { return kernel_; }
  double jitter() const { return jitter_; }
  int input_dim() const { return static_cast<int>(inputs_.rows()); }
  int output_dim() const { return static_cast<int>(targets_.cols()); }

 private:
  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd targets_;
  Eigen::MatrixXd alpha_;  // (K + noise I)^-1 targets
  RbfWhiteKernel kernel_;
  double jitter_ = 0.0;
  bool fitted_ = false;
};

}  // namespace harvest
