#include "harvest/harness.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numeric>

#include "harvest/parallel.hpp"

namespace harvest {

double EvalSummary::std_error() const {
  return rewards.size() > 1 ? std_dev / std::sqrt(static_cast<double>(rewards.size())) : 0.0;
}

EvalSummary summarize(std::vector<double> rewards, std::vector<int> lengths, int horizon) {
  if (rewards.size() != lengths.size()) throw DimensionError("summarize: rewards and lengths differ in length");
  EvalSummary s;
  s.horizon = horizon;
  const double n = static_cast<double>(rewards.size());
  if (!rewards.empty()) {
    s.mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double ss = 0.0;
    for (double r : rewards) ss += (r - s.mean) * (r - s.mean);
    s.std_dev = rewards.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.full_fraction =
        static_cast<double>(std::count_if(lengths.begin(), lengths.end(), [&](int l) { return l >= horizon; })) / n;
  }
  s.rewards = std::move(rewards);
  s.lengths = std::move(lengths);
  return s;
}

EvalSummary evaluate(const ModelSpec& spec, const PolicySpec& policy, int n_episodes, std::uint64_t seed, int jobs,
                     std::vector<Trajectory>* trajectories) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate: n_episodes must be >= 1");
  validate_policy(policy, spec.n_harvested());
  const auto n = static_cast<std::size_t>(n_episodes);
  std::vector<double> rewards(n);
  std::vector<int> lengths(n);
  if (trajectories) trajectories->assign(n, Trajectory{});
  parallel_for(n, jobs, [&](std::size_t i) {
    Rng rng = make_rng(seed, "episode", i);
    auto policy_fn = [&](const SimState& s) { return act(policy, s, spec); };
    const EpisodeResult r = run_episode(spec, policy_fn, rng, trajectories ? &(*trajectories)[i] : nullptr);
    rewards[i] = r.total_reward;
    lengths[i] = r.length;
  });
  return summarize(std::move(rewards), std::move(lengths), spec.horizon);
}

std::vector<double> linspace(double lo, double hi, int points) {
  if (points < 1) throw std::invalid_argument("linspace: points must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
  return v;
}

Action TuneReport::point(std::size_t flat_index) const {
  Action a(static_cast<Eigen::Index>(axes.size()));
  for (std::size_t i = axes.size(); i-- > 0;) {
    const std::size_t n = axes[i].size();
    a[static_cast<Eigen::Index>(i)] = axes[i][flat_index % n];
    flat_index /= n;
  }
  return a;
}

namespace {

std::vector<std::size_t> unravel(std::size_t flat, const std::vector<std::vector<double>>& axes) {
  std::vector<std::size_t> idx(axes.size());
  for (std::size_t i = axes.size(); i-- > 0;) {
    idx[i] = flat % axes[i].size();
    flat /= axes[i].size();
  }
  return idx;
}

std::size_t ravel(const std::vector<std::size_t>& idx, const std::vector<std::vector<double>>& axes) {
  std::size_t flat = 0;
  for (std::size_t i = 0; i < axes.size(); ++i) flat = flat * axes[i].size() + idx[i];
  return flat;
}

/// Grid search shared by both classical families.
template <typename MakePolicy>
TuneReport grid_search(const ModelSpec& spec, std::string family, double upper, std::uint64_t seed,
                       const TuneOptions& options, MakePolicy&& make_policy) {
  spec.validate();
  if (options.episodes < 1) throw std::invalid_argument("tuning: episodes must be >= 1");
  const int points = options.points > 0 ? options.points : (spec.n_harvested() == 1 ? 101 : 51);
  TuneReport report;
  report.family = std::move(family);
  report.episodes = options.episodes;
  report.ridge_tolerance = options.ridge_tolerance;
  report.axes.assign(static_cast<std::size_t>(spec.n_harvested()), linspace(0.0, upper, points));
  std::size_t total = 1;
  for (const auto& a : report.axes) total *= a.size();
  report.means.resize(total);
  report.std_errors.resize(total);
  report.full_fractions.resize(total);

  parallel_for(total, options.jobs, [&](std::size_t k) {
    // Every grid point sees the same noise realizations (common random numbers).
    const EvalSummary s = evaluate(spec, make_policy(report.point(k)), options.episodes, seed);
    report.means[k] = s.mean;
    report.std_errors[k] = s.std_error();
    report.full_fractions[k] = s.full_fraction;
  });

  report.argmax = static_cast<std::size_t>(std::max_element(report.means.begin(), report.means.end()) - report.means.begin());
  report.best = report.point(report.argmax);
  report.best_mean = report.means[report.argmax];

  const double cutoff = report.best_mean - options.ridge_tolerance * std::abs(report.best_mean);
  std::vector<char> on_ridge(total, 0);
  for (std::size_t k = 0; k < total; ++k)
    if (report.means[k] >= cutoff) {
      on_ridge[k] = 1;
      report.ridge.push_back(k);
    }
  // Flood fill over axis-adjacent grid neighbours starting at the argmax.
  std::vector<char> reached(total, 0);
  std::deque<std::size_t> queue{report.argmax};
  reached[report.argmax] = 1;
  std::size_t count = 0;
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    ++count;
    auto idx = unravel(k, report.axes);
    for (std::size_t axis = 0; axis < idx.size(); ++axis) {
      for (int delta : {-1, 1}) {
        const auto moved = static_cast<long long>(idx[axis]) + delta;
        if (moved < 0 || moved >= static_cast<long long>(report.axes[axis].size())) continue;
        auto next = idx;
        next[axis] = static_cast<std::size_t>(moved);
        const std::size_t j = ravel(next, report.axes);
        if (on_ridge[j] && !reached[j]) {
          reached[j] = 1;
          queue.push_back(j);
        }
      }
    }
  }
  report.ridge_connected = count == report.ridge.size();
  return report;
}

}  // namespace

TuneReport tune_cmort(const ModelSpec& spec, std::uint64_t seed, const TuneOptions& options) {
  return grid_search(spec, "cmort", 0.5, seed, options,
                     [](const Action& m) { return PolicySpec{ConstantMortality{m}}; });
}

TuneReport tune_cesc(const ModelSpec& spec, std::uint64_t seed, const TuneOptions& options) {
  return grid_search(spec, "cesc", 1.0, seed, options,
                     [](const Action& s) { return PolicySpec{ConstantEscapement{s}}; });
}

std::vector<TradeoffRow> mortality_tradeoff(const ModelSpec& spec, const Action& optimal_cmort,
                                            std::vector<double> fractions, int n_episodes, std::uint64_t seed,
                                            int jobs) {
  std::sort(fractions.begin(), fractions.end());
  std::vector<TradeoffRow> rows;
  for (double f : fractions) {
    const ScaledMortality policy{optimal_cmort, f};
    rows.push_back({f, cmort_act(policy), evaluate(spec, policy, n_episodes, seed, jobs)});
  }
  return rows;
}

int parse_axis(const std::string& name, int dim) {
  int axis = -1;
  if (name == "X" || name == "x") axis = 0;
  if (name == "Y" || name == "y") axis = 1;
  if (name == "Z" || name == "z") axis = 2;
  if (axis < 0) throw std::invalid_argument("unknown axis '" + name + "' (expected X, Y or Z)");
  if (axis >= dim) throw std::invalid_argument("axis '" + name + "' does not exist in this model");
  return axis;
}

ProjectionTable policy_projection(const PolicySpec& policy, const ModelSpec& spec, const PopularWindow& windows,
                                  int dense_axis, int color_axis, int dense_points, int sparse_points) {
  const int d = spec.dim();
  if (dense_axis < 0 || dense_axis >= d) throw std::invalid_argument("policy_projection: invalid dense axis");
  if (color_axis >= d || color_axis == dense_axis || (color_axis < 0 && d > 1))
    throw std::invalid_argument("policy_projection: color axis must be a different, existing axis");
  if (static_cast<int>(windows.size()) != d) throw DimensionError("policy_projection: one window per species");
  if (spec.obs_bounds.size() != d) throw DimensionError("policy_projection: spec has no obs_bounds");

  std::vector<std::vector<double>> axes(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i)
    axes[static_cast<std::size_t>(i)] = i == dense_axis ? window_values({0.0, 1.0}, dense_points)
                                                        : window_values(windows[static_cast<std::size_t>(i)], sparse_points);
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();

  ProjectionTable table{dense_axis, color_axis, {}};
  table.rows.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    const auto idx = unravel(k, axes);
    ProjectionRow row;
    row.obs.resize(d);
    for (int i = 0; i < d; ++i) row.obs[i] = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
    row.pops = row.obs.cwiseProduct(Eigen::VectorXd(spec.obs_bounds));
    row.mortality = act(policy, SimState{Pops(row.pops), 0}, spec);
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

double perturb_one(double value, double sigma, std::normal_distribution<double>& normal, Rng& rng) {
  if (sigma == 0.0) return value;
  for (;;) {
    const double out = (1.0 + sigma * normal(rng)) * value;
    if (out > 0.0) return out;
  }
}

}  // namespace

ParamSet3 perturb_params(const ParamSet3& p, double sigma, Rng& rng, bool perturb_variances) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("perturb_params: sigma must be >= 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamSet3 out = p;
  for (double* field : {&out.r_X, &out.K_X, &out.r_Y, &out.K_Y, &out.c_XY, &out.beta, &out.c, &out.D, &out.b, &out.d_Z})
    *field = perturb_one(*field, sigma, normal, rng);
  if (perturb_variances)
    for (double* field : {&out.sigma2_X, &out.sigma2_Y, &out.sigma2_Z})
      if (*field > 0.0) *field = perturb_one(*field, sigma, normal, rng);
  return out;
}

ParamSet1 perturb_params(const ParamSet1& p, double sigma, Rng& rng, bool perturb_variances) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("perturb_params: sigma must be >= 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamSet1 out = p;
  for (double* field : {&out.r, &out.K, &out.beta, &out.H, &out.c}) *field = perturb_one(*field, sigma, normal, rng);
  if (perturb_variances && out.sigma2 > 0.0) out.sigma2 = perturb_one(out.sigma2, sigma, normal, rng);
  return out;
}

WelchResult welch_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_test: need at least two samples per group");
  const EvalSummary sa = summarize(a, std::vector<int>(a.size(), 0), 1);
  const EvalSummary sb = summarize(b, std::vector<int>(b.size(), 0), 1);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = sa.std_dev * sa.std_dev / na, vb = sb.std_dev * sb.std_dev / nb;
  WelchResult r;
  r.diff = sa.mean - sb.mean;
  const double se = std::sqrt(va + vb);
  if (se == 0.0) {
    r.t = r.diff > 0 ? std::numeric_limits<double>::infinity() : (r.diff < 0 ? -std::numeric_limits<double>::infinity() : 0.0);
    r.df = na + nb - 2.0;
    r.p_greater = r.diff > 0 ? 0.0 : (r.diff < 0 ? 1.0 : 0.5);
    r.ci_lo = r.ci_hi = r.diff;
    return r;
  }
  r.t = r.diff / se;
  r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(r.df);
  r.p_greater = boost::math::cdf(boost::math::complement(dist, r.t));
  const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  r.ci_lo = r.diff - q * se;
  r.ci_hi = r.diff + q * se;
  return r;
}

PipelineResult run_pipeline(const ModelSpec& spec, const PipelineOptions& options, std::uint64_t seed) {
  spec.validate();
  if (spec.obs_bounds.size() != spec.dim()) throw DimensionError("run_pipeline: spec has no obs_bounds");
  const std::uint64_t eval_seed = derive_seed(seed, "evaluation");

  PipelineResult out{spec, {}, std::nullopt, {}, {}, {}, {}, std::nullopt, {}, {}};
  TuneOptions tune = options.tune;
  tune.jobs = options.jobs;
  out.cesc_tune = tune_cesc(spec, derive_seed(seed, "tune-cesc"), tune);
  if (options.include_cmort) out.cmort_tune = tune_cmort(spec, derive_seed(seed, "tune-cmort"), tune);

  TrainConfig train_cfg = options.train;
  train_cfg.seed = derive_seed(seed, "train");
  out.ppo = train(spec, train_cfg);
  const MlpPolicy ppo_policy{out.ppo.params, spec.obs_bounds};

  std::vector<Trajectory> episodes;
  out.ppo_eval = evaluate(spec, ppo_policy, options.eval_episodes, eval_seed, options.jobs, &episodes);
  out.window = popular_window(episodes, spec.obs_bounds, options.gp.q_lo, options.gp.q_hi);
  const PolicyGrid grids = build_grids(out.window, options.gp.dense_points, options.gp.sparse_points);
  out.ppo_gp = fit_ppo_gp(out.ppo.params, grids, spec.obs_bounds, options.gp.kernel);
  out.ppo_gp_eval = evaluate(spec, out.ppo_gp, options.eval_episodes, eval_seed, options.jobs);

  out.cesc = evaluate(spec, ConstantEscapement{out.cesc_tune.best}, options.eval_episodes, eval_seed, options.jobs);
  if (out.cmort_tune)
    out.cmort = evaluate(spec, ConstantMortality{out.cmort_tune->best}, options.eval_episodes, eval_seed, options.jobs);
  return out;
}

StabilityOptions::StabilityOptions() {
  pipeline.train.iterations = 100;
  pipeline.include_cmort = false;
}

std::uint64_t stability_sample_seed(std::uint64_t root, double strength, int index) {
  char label[64];
  std::snprintf(label, sizeof label, "stability/%.6f", strength);
  return derive_seed(root, label, static_cast<std::uint64_t>(index));
}

StabilitySample run_stability_sample(const ModelSpec& base, double strength, int index, std::uint64_t root_seed,
                                     const StabilityOptions& options) {
  StabilitySample s;
  s.strength = strength;
  s.sample = index;
  s.seed = stability_sample_seed(root_seed, strength, index);
  try {
    const auto* base_params = std::get_if<ParamSet3>(&base.params);
    if (!base_params) throw std::invalid_argument("stability analysis requires a three-species model");
    Rng perturb_rng = make_rng(s.seed, "perturb");
    s.params = perturb_params(*base_params, strength, perturb_rng, options.perturb_variances);
    ModelSpec spec = base;
    spec.params = s.params;
    spec.obs_bounds.resize(0);
    Rng bounds_rng = make_rng(s.seed, "obs-bounds");
    spec.obs_bounds = natural_range_bounds(spec, options.bounds_episodes, bounds_rng);
    const PipelineResult r = run_pipeline(spec, options.pipeline, s.seed);
    s.cesc_escapement = r.cesc_tune.best;
    s.cesc_mean = r.cesc.mean;
    s.ppo_mean = r.ppo_eval.mean;
    s.ppo_gp_mean = r.ppo_gp_eval.mean;
    s.diff_ppo = s.ppo_mean - s.cesc_mean;
    s.diff_ppo_gp = s.ppo_gp_mean - s.cesc_mean;
    s.ok = true;
  } catch (const std::exception& e) {
    s.ok = false;
    s.error = e.what();
  }
  return s;
}

StabilityAggregate aggregate_samples(double strength, const std::vector<StabilitySample>& samples) {
  StabilityAggregate agg;
  agg.strength = strength;
  std::vector<double> dp, dg;
  for (const auto& s : samples)
    if (s.strength == strength && s.ok) {
      dp.push_back(s.diff_ppo);
      dg.push_back(s.diff_ppo_gp);
    }
  agg.n_ok = static_cast<int>(dp.size());
  if (!dp.empty()) {
    const EvalSummary a = summarize(dp, std::vector<int>(dp.size(), 0), 1);
    const EvalSummary b = summarize(dg, std::vector<int>(dg.size(), 0), 1);
    agg.mean_diff_ppo = a.mean;
    agg.std_diff_ppo = a.std_dev;
    agg.mean_diff_ppo_gp = b.mean;
    agg.std_diff_ppo_gp = b.std_dev;
  }
  return agg;
}

StabilityReport stability_analysis(const ModelSpec& base, const StabilityOptions& options, std::uint64_t seed) {
  if (options.samples < 1) throw std::invalid_argument("stability_analysis: samples must be >= 1");
  if (options.strengths.empty()) throw std::invalid_argument("stability_analysis: no noise strengths");
  StabilityReport report;
  const std::size_t per = static_cast<std::size_t>(options.samples);
  report.samples.resize(options.strengths.size() * per);
  // Realizations run sequentially; each pipeline parallelizes internally.
  for (std::size_t k = 0; k < report.samples.size(); ++k)
    report.samples[k] = run_stability_sample(base, options.strengths[k / per], static_cast<int>(k % per), seed, options);
  for (double strength : options.strengths) report.aggregates.push_back(aggregate_samples(strength, report.samples));
  return report;
}

std::vector<ComparisonCell> comparison_matrix(const std::vector<PipelineResult>& columns) {
  std::vector<ComparisonCell> cells;
  for (const auto& col : columns) {
    std::vector<ComparisonCell> column{
        {col.spec.model_id, "CEsc", col.cesc.mean, 0.0, col.cesc.full_fraction},
        {col.spec.model_id, "CMort", col.cmort ? col.cmort->mean : std::numeric_limits<double>::quiet_NaN(), 0.0,
         col.cmort ? col.cmort->full_fraction : std::numeric_limits<double>::quiet_NaN()},
        {col.spec.model_id, "PPO", col.ppo_eval.mean, 0.0, col.ppo_eval.full_fraction},
        {col.spec.model_id, "PPO+GP", col.ppo_gp_eval.mean, 0.0, col.ppo_gp_eval.full_fraction}};
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : column)
      if (!std::isnan(c.mean)) best = std::max(best, c.mean);
    for (auto& c : column) {
      if (std::isnan(c.mean))
        c.normalized = c.mean;
      else if (best > 0.0)
        c.normalized = c.mean / best;
      else
        // Non-positive column maximum: measure the shortfall relative to |max|
        // so the best entry still maps to 1.
        c.normalized = 1.0 - (best - c.mean) / std::max(std::abs(best), 1e-12);
    }
    cells.insert(cells.end(), column.begin(), column.end());
  }
  return cells;
}

}  // namespace harvest
