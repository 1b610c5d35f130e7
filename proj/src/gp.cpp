#include "harvest/gp.hpp"

#include "harvest/dynamics.hpp"

namespace harvest {

Eigen::MatrixXd rbf_gram(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b,
                         double length_scale) {
  if (a.rows() != b.rows()) throw DimensionError("rbf_gram: point dimensions differ");
  const Eigen::VectorXd a2 = a.colwise().squaredNorm().transpose();
  const Eigen::RowVectorXd b2 = b.colwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * a.transpose() * b;
  d2.colwise() += a2;
  d2.rowwise() += b2;
  const double scale = -0.5 / (length_scale * length_scale);
  return (d2.array().max(0.0) * scale).exp().matrix();
}

GpRegressor GpRegressor::fit(Eigen::MatrixXd inputs, Eigen::MatrixXd targets, RbfWhiteKernel kernel) {
  if (inputs.cols() == 0) throw std::invalid_argument("GpRegressor::fit: no training points");
  if (targets.rows() != inputs.cols()) throw DimensionError("GpRegressor::fit: one target row per input column");
  if (!(kernel.length_scale > 0.0) || !(kernel.noise_level >= 0.0))
    throw std::invalid_argument("GpRegressor::fit: invalid kernel hyperparameters");

  Eigen::MatrixXd gram = rbf_gram(inputs, inputs, kernel.length_scale);
  gram.diagonal().array() += kernel.noise_level;

  GpRegressor gp;
  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd work = gram;
    if (jitter > 0.0) work.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      gp.alpha_ = llt.solve(targets);
      if (gp.alpha_.allFinite()) break;
    }
    jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    if (jitter > 1e-4) throw GpFitError("GpRegressor::fit: kernel matrix not positive definite after jitter escalation");
  }
  gp.inputs_ = std::move(inputs);
  gp.targets_ = std::move(targets);
  gp.kernel_ = kernel;
  gp.jitter_ = jitter;
  gp.fitted_ = true;
  return gp;
}

GpRegressor GpRegressor::from_parts(Eigen::MatrixXd inputs, Eigen::MatrixXd targets, RbfWhiteKernel kernel,
                                    Eigen::MatrixXd alpha, double jitter) {
  if (targets.rows() != inputs.cols() || alpha.rows() != inputs.cols() || alpha.cols() != targets.cols())
    throw DimensionError("GpRegressor::from_parts: inconsistent shapes");
  GpRegressor gp;
  gp.inputs_ = std::move(inputs);
  gp.targets_ = std::move(targets);
  gp.alpha_ = std::move(alpha);
  gp.kernel_ = kernel;
  gp.jitter_ = jitter;
  gp.fitted_ = true;
  return gp;
}

Eigen::MatrixXd GpRegressor::predict(const Eigen::Ref<const Eigen::MatrixXd>& queries) const {
  if (!fitted_) throw std::logic_error("GpRegressor::predict: regressor has not been fitted");
  if (queries.cols() == 0) return Eigen::MatrixXd(alpha_.cols(), 0);
  if (queries.rows() != inputs_.rows()) throw DimensionError("GpRegressor::predict: query dimension mismatch");
  return alpha_.transpose() * rbf_gram(inputs_, queries, kernel_.length_scale);
}

}  // namespace harvest
