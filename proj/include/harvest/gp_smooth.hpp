#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <vector>

#include "harvest/dynamics.hpp"
#include "harvest/gp.hpp"
#include "harvest/mlp.hpp"
#include "harvest/policy.hpp"

namespace harvest {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Per-species interval of typical normalized values.
using PopularWindow = std::vector<Interval>;

/// Linear-interpolation quantile (q in [0, 1]) of an unsorted sample.
double quantile(std::vector<double> values, double q);

/// [q_lo, q_hi] quantiles of every normalized state visited in `episodes`
/// (the state before each step and the final state).
PopularWindow popular_window(const std::vector<Trajectory>& episodes, const Pops& obs_bounds, double q_lo = 0.05,
                             double q_hi = 0.95);

/// `n` evenly spaced values spanning the window, duplicates removed.
std::vector<double> window_values(const Interval& window, int n);

struct LabeledGrid {
  int dense_axis = 0;
  Eigen::MatrixXd points;  // dim x n_points
};

/// One grid per axis: that axis dense on [0, 1], the others sparse inside
/// their windows (51 x 5 x 5 and permutations for three species).
struct PolicyGrid {
  std::vector<LabeledGrid> grids;

  Eigen::Index total_points() const;
  Eigen::MatrixXd all_points() const;
};

PolicyGrid build_grids(const PopularWindow& windows, int dense_points = 51, int sparse_points = 5);

/// Columns of `points` with exact duplicates removed; first occurrence order.
Eigen::MatrixXd unique_columns(const Eigen::Ref<const Eigen::MatrixXd>& points);

/// Maps normalized observations (one per column) to mortalities (one row per species).
using BatchPolicyFn = std::function<Eigen::MatrixXd(const Eigen::Ref<const Eigen::MatrixXd>&)>;

BatchPolicyFn mlp_mean_fn(const MlpParams& params);

/// Samples `policy` on the deduplicated grid points and fits one GP output
/// per species on (point -> mortality).
GpPolicy fit_policy_gp(const BatchPolicyFn& policy, const PolicyGrid& grids, const Pops& obs_bounds,
                       RbfWhiteKernel kernel = {});

GpPolicy fit_ppo_gp(const MlpParams& mlp, const PolicyGrid& grids, const Pops& obs_bounds, RbfWhiteKernel kernel = {});

struct ScatterRow {
  int grid = 0;
  Eigen::VectorXd point;
  Eigen::VectorXd mortality;
};

/// The raw policy samples that the GP is fitted to, labeled by grid.
std::vector<ScatterRow> policy_scatter(const BatchPolicyFn& policy, const PolicyGrid& grids);

/// Sum of |m_{i+1} - m_i| along consecutive values of a sequence.
double total_variation(const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace harvest
