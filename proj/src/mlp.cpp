#include "harvest/mlp.hpp"

#include <cmath>
#include <numbers>

#include "harvest/dynamics.hpp"

namespace harvest {

namespace {

template <typename P, typename Fn>
void for_each_block(P& p, Fn&& fn) {
  fn(p.w1.data(), p.w1.size());
  fn(p.b1.data(), p.b1.size());
  fn(p.w2.data(), p.w2.size());
  fn(p.b2.data(), p.b2.size());
  fn(p.w_pi.data(), p.w_pi.size());
  fn(p.b_pi.data(), p.b_pi.size());
  fn(p.log_std.data(), p.log_std.size());
  fn(p.w_v.data(), p.w_v.size());
  fn(&p.b_v, Eigen::Index{1});
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

}  // namespace

MlpParams MlpParams::zeros(int input_dim, int action_dim, int hidden) {
  MlpParams p;
  p.w1 = Eigen::MatrixXd::Zero(hidden, input_dim);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.w2 = Eigen::MatrixXd::Zero(hidden, hidden);
  p.b2 = Eigen::VectorXd::Zero(hidden);
  p.w_pi = Eigen::MatrixXd::Zero(action_dim, hidden);
  p.b_pi = Eigen::VectorXd::Zero(action_dim);
  p.log_std = Eigen::VectorXd::Zero(action_dim);
  p.w_v = Eigen::RowVectorXd::Zero(hidden);
  p.b_v = 0.0;
  return p;
}

MlpParams MlpParams::random(int input_dim, int action_dim, Rng& rng, int hidden, double log_std_init) {
  MlpParams p = zeros(input_dim, action_dim, hidden);
  p.w1 = gaussian_matrix(hidden, input_dim, std::sqrt(2.0 / input_dim), rng);
  p.w2 = gaussian_matrix(hidden, hidden, std::sqrt(1.0 / hidden), rng);
  p.w_pi = gaussian_matrix(action_dim, hidden, 0.01 / std::sqrt(hidden), rng);
  p.w_v = gaussian_matrix(1, hidden, std::sqrt(1.0 / hidden), rng);
  p.log_std.setConstant(log_std_init);
  return p;
}

Eigen::Index MlpParams::size() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + w_pi.size() + b_pi.size() + log_std.size() + w_v.size() + 1;
}

Eigen::VectorXd MlpParams::flatten() const {
  Eigen::VectorXd flat(size());
  Eigen::Index offset = 0;
  for_each_block(*this, [&](const double* data, Eigen::Index n) {
    flat.segment(offset, n) = Eigen::Map<const Eigen::VectorXd>(data, n);
    offset += n;
  });
  return flat;
}

void MlpParams::assign(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (flat.size() != size()) throw DimensionError("flat parameter vector has the wrong length");
  Eigen::Index offset = 0;
  for_each_block(*this, [&](double* data, Eigen::Index n) {
    Eigen::Map<Eigen::VectorXd>(data, n) = flat.segment(offset, n);
    offset += n;
  });
}

bool MlpParams::all_finite() const { return flatten().allFinite(); }

bool MlpParams::operator==(const MlpParams& o) const {
  return w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() && w_pi.rows() == o.w_pi.rows() &&
         flatten() == o.flatten();
}

MlpOutput mlp_forward(const MlpParams& p, const Eigen::Ref<const Eigen::MatrixXd>& obs, MlpCache* cache) {
  if (obs.rows() != p.input_dim()) throw DimensionError("observation width does not match the network input");
  Eigen::MatrixXd h1 = ((p.w1 * obs).colwise() + p.b1).array().tanh().matrix();
  Eigen::MatrixXd h2 = ((p.w2 * h1).colwise() + p.b2).array().tanh().matrix();
  MlpOutput out;
  out.mean = (1.0 + (-((p.w_pi * h2).colwise() + p.b_pi).array()).exp()).inverse().matrix();
  out.log_std = p.log_std;
  out.value = (p.w_v * h2).array() + p.b_v;
  if (cache) {
    cache->obs = obs;
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
  }
  return out;
}

MlpParams mlp_backward(const MlpParams& p, const MlpCache& cache, const MlpOutput& out,
                       const Eigen::Ref<const Eigen::MatrixXd>& d_mean, const Eigen::Ref<const Eigen::RowVectorXd>& d_value,
                       const Eigen::Ref<const Eigen::VectorXd>& d_log_std) {
  MlpParams g;
  const Eigen::MatrixXd d_zp = (d_mean.array() * out.mean.array() * (1.0 - out.mean.array())).matrix();
  g.w_pi = d_zp * cache.h2.transpose();
  g.b_pi = d_zp.rowwise().sum();
  g.w_v = d_value * cache.h2.transpose();
  g.b_v = d_value.sum();
  g.log_std = d_log_std;

  const Eigen::MatrixXd d_h2 = p.w_pi.transpose() * d_zp + p.w_v.transpose() * d_value;
  const Eigen::MatrixXd d_z2 = (d_h2.array() * (1.0 - cache.h2.array().square())).matrix();
  g.w2 = d_z2 * cache.h1.transpose();
  g.b2 = d_z2.rowwise().sum();

  const Eigen::MatrixXd d_h1 = p.w2.transpose() * d_z2;
  const Eigen::MatrixXd d_z1 = (d_h1.array() * (1.0 - cache.h1.array().square())).matrix();
  g.w1 = d_z1 * cache.obs.transpose();
  g.b1 = d_z1.rowwise().sum();
  return g;
}

double gaussian_log_prob(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& mean,
                         const Eigen::Ref<const Eigen::VectorXd>& log_std) {
  const Eigen::ArrayXd z = (x - mean).array() * (-log_std.array()).exp();
  return (-0.5 * z.square() - log_std.array() - 0.5 * std::log(2.0 * std::numbers::pi)).sum();
}

ActionSample sample_action(const Eigen::Ref<const Eigen::VectorXd>& mean, const Eigen::Ref<const Eigen::VectorXd>& log_std,
                           Rng& rng, bool deterministic) {
  ActionSample s;
  s.raw = mean;
  if (!deterministic) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < mean.size(); ++i) s.raw[i] += std::exp(log_std[i]) * normal(rng);
  }
  s.action = s.raw.cwiseMax(0.0).cwiseMin(1.0);
  s.log_prob = gaussian_log_prob(s.raw, mean, log_std);
  return s;
}

}  // namespace harvest
