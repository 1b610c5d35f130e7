#include "harvest/gp_smooth.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace harvest {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

PopularWindow popular_window(const std::vector<Trajectory>& episodes, const Pops& obs_bounds, double q_lo,
                             double q_hi) {
  if (episodes.empty()) throw std::invalid_argument("popular_window: no episodes");
  if (!(q_lo <= q_hi)) throw std::invalid_argument("popular_window: lower quantile exceeds upper");
  const auto d = static_cast<std::size_t>(obs_bounds.size());
  std::vector<std::vector<double>> visited(d);
  auto visit = [&](const SimState& s) {
    const Eigen::VectorXd obs = normalize_state(s.pops, obs_bounds);
    for (std::size_t i = 0; i < d; ++i) visited[i].push_back(obs[static_cast<Eigen::Index>(i)]);
  };
  for (const auto& ep : episodes) {
    for (const auto& rec : ep.steps) visit(rec.before);
    if (!ep.steps.empty()) visit(ep.steps.back().after);
  }
  if (visited.front().empty()) throw std::invalid_argument("popular_window: episodes contain no states");
  PopularWindow window(d);
  for (std::size_t i = 0; i < d; ++i) window[i] = {quantile(visited[i], q_lo), quantile(visited[i], q_hi)};
  return window;
}

std::vector<double> window_values(const Interval& window, int n) {
  if (!(0.0 <= window.lo && window.lo <= window.hi && window.hi <= 1.0))
    throw std::invalid_argument("window must satisfy 0 <= lo <= hi <= 1");
  if (n < 1) throw std::invalid_argument("window_values: n must be >= 1");
  std::vector<double> values;
  for (int k = 0; k < n; ++k) {
    const double v = n == 1 ? window.lo : window.lo + (window.hi - window.lo) * k / (n - 1);
    if (values.empty() || v != values.back()) values.push_back(v);
  }
  return values;
}

Eigen::Index PolicyGrid::total_points() const {
  Eigen::Index n = 0;
  for (const auto& g : grids) n += g.points.cols();
  return n;
}

Eigen::MatrixXd PolicyGrid::all_points() const {
  if (grids.empty()) return {};
  Eigen::MatrixXd all(grids.front().points.rows(), total_points());
  Eigen::Index offset = 0;
  for (const auto& g : grids) {
    all.middleCols(offset, g.points.cols()) = g.points;
    offset += g.points.cols();
  }
  return all;
}

PolicyGrid build_grids(const PopularWindow& windows, int dense_points, int sparse_points) {
  if (windows.empty()) throw std::invalid_argument("build_grids: no windows");
  const auto d = static_cast<int>(windows.size());
  const std::vector<double> dense = window_values({0.0, 1.0}, dense_points);
  std::vector<std::vector<double>> sparse;
  for (const auto& w : windows) sparse.push_back(window_values(w, sparse_points));

  PolicyGrid out;
  for (int axis = 0; axis < d; ++axis) {
    std::vector<const std::vector<double>*> axes(static_cast<std::size_t>(d));
    Eigen::Index count = 1;
    for (int i = 0; i < d; ++i) {
      axes[static_cast<std::size_t>(i)] = i == axis ? &dense : &sparse[static_cast<std::size_t>(i)];
      count *= static_cast<Eigen::Index>(axes[static_cast<std::size_t>(i)]->size());
    }
    LabeledGrid grid{axis, Eigen::MatrixXd(d, count)};
    // Mixed-radix enumeration; the first axis varies slowest.
    for (Eigen::Index k = 0; k < count; ++k) {
      Eigen::Index rem = k;
      for (int i = d - 1; i >= 0; --i) {
        const auto& values = *axes[static_cast<std::size_t>(i)];
        const auto n = static_cast<Eigen::Index>(values.size());
        grid.points(i, k) = values[static_cast<std::size_t>(rem % n)];
        rem /= n;
      }
    }
    out.grids.push_back(std::move(grid));
  }
  return out;
}

Eigen::MatrixXd unique_columns(const Eigen::Ref<const Eigen::MatrixXd>& points) {
  std::map<std::vector<double>, Eigen::Index> seen;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    std::vector<double> key(points.col(j).data(), points.col(j).data() + points.rows());
    if (seen.emplace(std::move(key), j).second) keep.push_back(j);
  }
  Eigen::MatrixXd out(points.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = points.col(keep[k]);
  return out;
}

BatchPolicyFn mlp_mean_fn(const MlpParams& params) {
  return [params](const Eigen::Ref<const Eigen::MatrixXd>& obs) { return mlp_forward(params, obs).mean; };
}

GpPolicy fit_policy_gp(const BatchPolicyFn& policy, const PolicyGrid& grids, const Pops& obs_bounds,
                       RbfWhiteKernel kernel) {
  if (grids.total_points() == 0) throw std::invalid_argument("fit_policy_gp: empty grids");
  Eigen::MatrixXd inputs = unique_columns(grids.all_points());
  Eigen::MatrixXd targets = policy(inputs).transpose();
  targets = targets.cwiseMax(0.0).cwiseMin(1.0);
  return GpPolicy{GpRegressor::fit(std::move(inputs), std::move(targets), kernel), obs_bounds};
}

GpPolicy fit_ppo_gp(const MlpParams& mlp, const PolicyGrid& grids, const Pops& obs_bounds, RbfWhiteKernel kernel) {
  return fit_policy_gp(mlp_mean_fn(mlp), grids, obs_bounds, kernel);
}

std::vector<ScatterRow> policy_scatter(const BatchPolicyFn& policy, const PolicyGrid& grids) {
  std::vector<ScatterRow> rows;
  for (std::size_t g = 0; g < grids.grids.size(); ++g) {
    const auto& points = grids.grids[g].points;
    const Eigen::MatrixXd m = policy(points);
    for (Eigen::Index j = 0; j < points.cols(); ++j)
      rows.push_back({grids.grids[g].dense_axis, points.col(j), m.col(j)});
  }
  return rows;
}

double total_variation(const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() < 2) return 0.0;
  return (values.tail(values.size() - 1) - values.head(values.size() - 1)).cwiseAbs().sum();
}

}  // namespace harvest
