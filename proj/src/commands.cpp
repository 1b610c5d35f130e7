#include "harvest/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

#include "harvest/histogram.hpp"
#include "harvest/output.hpp"

namespace harvest {

namespace {

constexpr const char* kAxisNames[] = {"X", "Y", "Z"};

std::vector<std::string> state_columns(int dim, const std::string& prefix = "") {
  std::vector<std::string> out;
  for (int i = 0; i < dim; ++i) out.push_back(prefix + kAxisNames[i]);
  return out;
}

std::vector<std::string> harvest_columns(const ModelSpec& spec, const std::string& prefix) {
  std::vector<std::string> out;
  for (int s : spec.harvested) out.push_back(prefix + kAxisNames[s]);
  return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

template <typename Derived>
void append(std::vector<std::string>& row, const Eigen::DenseBase<Derived>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(CsvTable::cell(static_cast<double>(v(i))));
}

template <typename... Ts>
std::vector<std::string> cells(const Ts&... values) {
  return {CsvTable::cell(values)...};
}

CsvTable episodes_table(const EvalSummary& s) {
  CsvTable t({"episode", "reward", "length", "full_horizon"});
  for (std::size_t i = 0; i < s.rewards.size(); ++i)
    t.add(static_cast<int>(i), s.rewards[i], s.lengths[i], s.lengths[i] >= s.horizon);
  return t;
}

CsvTable trajectories_table(const ModelSpec& spec, const std::vector<Trajectory>& episodes) {
  CsvTable t(concat(concat(concat({"episode", "t"}, state_columns(spec.dim())), harvest_columns(spec, "M_")),
                    {"harvest_reward", "penalty", "terminated", "cause"}));
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    for (const auto& rec : episodes[e].steps) {
      auto row = cells(static_cast<int>(e), rec.before.t);
      append(row, rec.before.pops);
      append(row, rec.action);
      for (auto& c : cells(rec.harvest_reward, rec.penalty, rec.terminated, to_string(rec.cause))) row.push_back(c);
      t.push(std::move(row));
    }
    if (!episodes[e].steps.empty()) {
      const auto& last = episodes[e].steps.back();
      auto row = cells(static_cast<int>(e), last.after.t);
      append(row, last.after.pops);
      for (int i = 0; i < spec.n_harvested(); ++i) row.push_back("");
      for (auto& c : cells(0.0, 0.0, true, to_string(last.cause))) row.push_back(c);
      t.push(std::move(row));
    }
  }
  return t;
}

CsvTable summary_table(const std::vector<std::pair<std::string, EvalSummary>>& rows) {
  CsvTable t({"strategy", "episodes", "mean_reward", "std_reward", "std_error", "full_horizon_fraction"});
  for (const auto& [name, s] : rows)
    t.add(name, static_cast<int>(s.episodes()), s.mean, s.std_dev, s.std_error(), s.full_fraction);
  return t;
}

void write_histograms(RunOutput& out, const EvalSummary& s, const std::string& prefix) {
  const HistogramData h = emit_histogram_data(s);
  CsvTable lengths({"bin_lo", "bin_hi", "count"});
  for (const auto& b : h.length_bins) lengths.add(b.lo, b.hi, b.count);
  CsvTable rewards({"bin_lo", "bin_hi", "count"});
  for (const auto& b : h.reward_bins) rewards.add(b.lo, b.hi, b.count);
  out.write_csv(prefix + "histogram_lengths.csv", lengths);
  out.write_csv(prefix + "histogram_rewards.csv", rewards);
}

CsvTable tune_table(const ModelSpec& spec, const TuneReport& r) {
  const std::string prefix = r.family == "cesc" ? "S_" : "M_";
  CsvTable t(concat(harvest_columns(spec, prefix), {"mean_reward", "std_error", "full_horizon_fraction", "on_ridge"}));
  const std::set<std::size_t> ridge(r.ridge.begin(), r.ridge.end());
  for (std::size_t k = 0; k < r.size(); ++k) {
    std::vector<std::string> row;
    append(row, r.point(k));
    for (auto& c : cells(r.means[k], r.std_errors[k], r.full_fractions[k], ridge.count(k) > 0)) row.push_back(c);
    t.push(std::move(row));
  }
  return t;
}

CsvTable tune_best_table(const ModelSpec& spec, const TuneReport& r) {
  const std::string prefix = r.family == "cesc" ? "S_" : "M_";
  CsvTable t(concat(harvest_columns(spec, prefix),
                    {"mean_reward", "std_error", "full_horizon_fraction", "ridge_points", "ridge_connected",
                     "ridge_tolerance", "episodes"}));
  std::vector<std::string> row;
  append(row, r.best);
  for (auto& c : cells(r.best_mean, r.std_errors[r.argmax], r.full_fractions[r.argmax], static_cast<int>(r.ridge.size()),
                       r.ridge_connected, r.ridge_tolerance, r.episodes))
    row.push_back(c);
  t.push(std::move(row));
  return t;
}

CsvTable curve_table(const TrainCurve& curve) {
  CsvTable t({"iteration", "mean_return", "mean_length", "episodes", "loss_total", "loss_surrogate", "loss_value",
              "entropy", "clip_fraction"});
  for (const auto& c : curve)
    t.add(c.iteration, c.mean_return, c.mean_length, c.episodes, c.loss.total, c.loss.surrogate, c.loss.value,
          c.loss.entropy, c.loss.clip_fraction);
  return t;
}

CsvTable window_table(const ModelSpec& spec, const PopularWindow& w) {
  CsvTable t({"axis", "lo", "hi"});
  for (int i = 0; i < spec.dim(); ++i) t.add(kAxisNames[i], w[static_cast<std::size_t>(i)].lo, w[static_cast<std::size_t>(i)].hi);
  return t;
}

/// Popular window of `policy` from its own evaluation trajectories.
PopularWindow policy_window(const RunConfig& c, const PolicySpec& policy, int episodes, double q_lo, double q_hi) {
  std::vector<Trajectory> traj;
  evaluate(c.model, policy, episodes, derive_seed(c.seed, "window"), c.jobs, &traj);
  return popular_window(traj, c.model.obs_bounds, q_lo, q_hi);
}

BatchPolicyFn batch_fn(const PolicySpec& policy, const ModelSpec& spec) {
  if (const auto* m = std::get_if<MlpPolicy>(&policy)) return mlp_mean_fn(m->params);
  return [policy, spec](const Eigen::Ref<const Eigen::MatrixXd>& obs) {
    Eigen::MatrixXd out(spec.n_harvested(), obs.cols());
    for (Eigen::Index j = 0; j < obs.cols(); ++j) {
      const Pops pops = obs.col(j).cwiseProduct(spec.obs_bounds);
      out.col(j) = act(policy, SimState{pops, 0}, spec);
    }
    return out;
  };
}

void cmd_simulate(const RunConfig& c, RunOutput& out, std::ostream& log) {
  const PolicySpec policy =
      c.policy ? resolve_policy(c) : PolicySpec{ConstantMortality{Action::Zero(c.model.n_harvested())}};
  log << "simulating " << c.simulate_episodes << " episode(s) with policy " << family_name(policy) << "\n";
  std::vector<Trajectory> traj;
  const EvalSummary s = evaluate(c.model, policy, c.simulate_episodes, derive_seed(c.seed, "simulate"), c.jobs, &traj);
  out.write_csv("trajectories.csv", trajectories_table(c.model, traj));
  out.write_csv("episodes.csv", episodes_table(s));
}

void cmd_bifurcation(const RunConfig& c, RunOutput& out, std::ostream& log) {
  const auto* p = std::get_if<ParamSet1>(&c.model.params);
  if (!p) throw std::invalid_argument("bifurcation needs the single-species model (model 1)");
  const auto& b = c.bifurcation;
  std::vector<double> grid;
  const auto n = static_cast<int>(std::floor((b.beta_h_max - b.beta_h_min) / b.beta_h_step + 1e-9));
  // Rounded so that printed grid values read 0.12 rather than 0.12000000000000001.
  for (int k = 0; k <= n; ++k) grid.push_back(std::round((b.beta_h_min + k * b.beta_h_step) * 1e10) / 1e10);
  const auto table = fixed_points_model1(*p, grid);
  CsvTable t({"beta_h", "n_equilibria", "equilibrium", "stable"});
  CsvTable counts({"beta_h", "n_equilibria", "n_stable"});
  for (const auto& row : table) {
    const int n_eq = static_cast<int>(row.equilibria.size());
    int n_stable = 0;
    for (const auto& e : row.equilibria) {
      t.add(row.beta_h, n_eq, e.x, e.stable);
      n_stable += e.stable ? 1 : 0;
    }
    counts.add(row.beta_h, n_eq, n_stable);
  }
  log << "scanned " << table.size() << " beta*H values\n";
  out.write_csv("bifurcation.csv", t);
  out.write_csv("equilibrium_counts.csv", counts);
}

void write_tune(const RunConfig& c, RunOutput& out, const TuneReport& r, const PolicySpec& best, std::ostream& log) {
  log << r.family << " best mean reward " << format_number(r.best_mean) << " over " << r.size() << " grid points\n";
  out.write_csv("tune_" + r.family + ".csv", tune_table(c.model, r));
  out.write_csv("tune_" + r.family + "_best.csv", tune_best_table(c.model, r));
  out.write_text("policy_" + r.family + ".json", serialize_policy(best));
}

void cmd_tune_cesc(const RunConfig& c, RunOutput& out, std::ostream& log) {
  TuneOptions opts = c.tuning;
  opts.jobs = c.jobs;
  const TuneReport r = tune_cesc(c.model, derive_seed(c.seed, "tune-cesc"), opts);
  write_tune(c, out, r, ConstantEscapement{r.best}, log);
}

void cmd_tune_cmort(const RunConfig& c, RunOutput& out, std::ostream& log) {
  TuneOptions opts = c.tuning;
  opts.jobs = c.jobs;
  const TuneReport r = tune_cmort(c.model, derive_seed(c.seed, "tune-cmort"), opts);
  write_tune(c, out, r, ConstantMortality{r.best}, log);
}

void cmd_train_ppo(const RunConfig& c, RunOutput& out, std::ostream& log) {
  const int every = c.training.checkpoint_every;
  const TrainResult r = train(c.model, c.training, [&](int iteration, const MlpParams& params) {
    if (every > 0 && iteration % every == 0) {
      char name[48];
      std::snprintf(name, sizeof name, "checkpoints/iter_%05d.json", iteration);
      out.write_text(name, serialize_policy(MlpPolicy{params, c.model.obs_bounds}));
      log << "iteration " << iteration << "\n";
    }
  });
  if (!r.curve.empty()) log << "final mean return " << format_number(r.curve.back().mean_return) << "\n";
  out.write_csv("training_curve.csv", curve_table(r.curve));
  out.write_text("policy_ppo.json", serialize_policy(MlpPolicy{r.params, c.model.obs_bounds}));
}

void cmd_smooth_gp(const RunConfig& c, RunOutput& out, std::ostream& log) {
  const PolicySpec policy = resolve_policy(c);
  const PopularWindow window = policy_window(c, policy, c.gp.window_episodes, c.gp.q_lo, c.gp.q_hi);
  const PolicyGrid grids = build_grids(window, c.gp.dense_points, c.gp.sparse_points);
  const BatchPolicyFn source = batch_fn(policy, c.model);
  const GpPolicy gp = fit_policy_gp(source, grids, c.model.obs_bounds, c.gp.kernel);
  log << "fitted GP on " << gp.regressor.inputs().cols() << " unique grid points\n";

  const auto src_rows = policy_scatter(source, grids);
  const auto gp_rows = policy_scatter([&gp](const Eigen::Ref<const Eigen::MatrixXd>& obs) { return gp_predict(gp, obs); }, grids);
  CsvTable t(concat(concat(concat({"grid"}, state_columns(c.model.dim(), "obs_")), harvest_columns(c.model, "source_M_")),
                    harvest_columns(c.model, "gp_M_")));
  for (std::size_t k = 0; k < src_rows.size(); ++k) {
    std::vector<std::string> row{CsvTable::cell(kAxisNames[src_rows[k].grid])};
    append(row, src_rows[k].point);
    append(row, src_rows[k].mortality);
    append(row, gp_rows[k].mortality);
    t.push(std::move(row));
  }
  out.write_csv("window.csv", window_table(c.model, window));
  out.write_csv("gp_scatter.csv", t);
  out.write_text("policy_gp.json", serialize_policy(gp));
}

void cmd_evaluate(const RunConfig& c, RunOutput& out, std::ostream& log) {
  const PolicySpec policy = resolve_policy(c);
  std::vector<Trajectory> traj;
  const EvalSummary s = evaluate(c.model, policy, c.eval_episodes, derive_seed(c.seed, "evaluation"), c.jobs,
                                 c.emit_trajectories ? &traj : nullptr);
  log << family_name(policy) << ": mean reward " << format_number(s.mean) << ", full-horizon fraction "
      << format_number(s.full_fraction) << "\n";
  out.write_csv("evaluation.csv", episodes_table(s));
  out.write_csv("summary.csv", summary_table({{family_name(policy), s}}));
  write_histograms(out, s, "");
  if (c.emit_trajectories) out.write_csv("trajectories.csv", trajectories_table(c.model, traj));
}

void cmd_tradeoff(const RunConfig& c, RunOutput& out, std::ostream& log) {
  Action optimum;
  if (c.tradeoff_mortality) {
    optimum = Eigen::Map<const Eigen::VectorXd>(c.tradeoff_mortality->data(),
                                                static_cast<Eigen::Index>(c.tradeoff_mortality->size()));
  } else {
    TuneOptions opts = c.tuning;
    opts.jobs = c.jobs;
    const TuneReport r = tune_cmort(c.model, derive_seed(c.seed, "tune-cmort"), opts);
    optimum = r.best;
    out.write_csv("tune_cmort.csv", tune_table(c.model, r));
  }
  const auto rows =
      mortality_tradeoff(c.model, optimum, c.tradeoff_fractions, c.eval_episodes, derive_seed(c.seed, "evaluation"), c.jobs);
  CsvTable t(concat(concat({"fraction"}, harvest_columns(c.model, "M_")),
                    {"mean_reward", "std_reward", "std_error", "full_horizon_fraction"}));
  CsvTable episodes({"fraction", "episode", "reward", "length", "full_horizon"});
  for (const auto& r : rows) {
    std::vector<std::string> row{CsvTable::cell(r.fraction)};
    append(row, r.mortality);
    for (auto& x : cells(r.summary.mean, r.summary.std_dev, r.summary.std_error(), r.summary.full_fraction))
      row.push_back(x);
    t.push(std::move(row));
    for (std::size_t i = 0; i < r.summary.rewards.size(); ++i)
      episodes.add(r.fraction, static_cast<int>(i), r.summary.rewards[i], r.summary.lengths[i],
                   r.summary.lengths[i] >= r.summary.horizon);
    log << "fraction " << format_number(r.fraction) << ": mean reward " << format_number(r.summary.mean)
        << ", full-horizon fraction " << format_number(r.summary.full_fraction) << "\n";
  }
  out.write_csv("tradeoff.csv", t);
  out.write_csv("tradeoff_episodes.csv", episodes);
}

void cmd_project_policy(const RunConfig& c, RunOutput& out, std::ostream& log) {
  const PolicySpec policy = resolve_policy(c);
  const auto& p = c.projection;
  const PopularWindow window = policy_window(c, policy, p.window_episodes, p.q_lo, p.q_hi);
  const int dense = parse_axis(p.dense_axis, c.model.dim());
  const int color = p.color_axis.empty() ? -1 : parse_axis(p.color_axis, c.model.dim());
  const ProjectionTable table = policy_projection(policy, c.model, window, dense, color, p.dense_points, p.sparse_points);
  CsvTable t(concat(concat(state_columns(c.model.dim(), "obs_"), state_columns(c.model.dim(), "pop_")),
                    harvest_columns(c.model, "M_")));
  for (const auto& r : table.rows) {
    std::vector<std::string> row;
    append(row, r.obs);
    append(row, r.pops);
    append(row, r.mortality);
    t.push(std::move(row));
  }
  log << "projected " << table.rows.size() << " states along " << p.dense_axis << "\n";
  out.write_csv("window.csv", window_table(c.model, window));
  out.write_csv("projection.csv", t);
}

ModelSpec compare_spec(const RunConfig& c, int model_id) {
  return model_id == c.model.model_id ? c.model : default_model_spec(model_id);
}

void cmd_compare(const RunConfig& c, RunOutput& out, std::ostream& log) {
  std::vector<PipelineResult> columns;
  CsvTable episodes({"model", "strategy", "episode", "reward", "length", "full_horizon"});
  for (int m : c.compare_models) {
    PipelineOptions opts;
    opts.tune = c.tuning;
    opts.train = c.training;
    if (m != c.model.model_id) opts.train.iterations = TrainConfig::for_model(m).iterations;
    opts.gp = c.gp;
    opts.eval_episodes = c.eval_episodes;
    opts.jobs = c.jobs;
    log << "model " << m << ": running pipeline\n";
    PipelineResult r = run_pipeline(compare_spec(c, m), opts, derive_seed(c.seed, "compare", static_cast<std::uint64_t>(m)));
    const std::string tag = "model" + std::to_string(m);
    out.write_text("policies/" + tag + "_cesc.json", serialize_policy(ConstantEscapement{r.cesc_tune.best}));
    if (r.cmort_tune) out.write_text("policies/" + tag + "_cmort.json", serialize_policy(ConstantMortality{r.cmort_tune->best}));
    out.write_text("policies/" + tag + "_ppo.json", serialize_policy(MlpPolicy{r.ppo.params, r.spec.obs_bounds}));
    out.write_text("policies/" + tag + "_ppo_gp.json", serialize_policy(r.ppo_gp));
    out.write_csv(tag + "_training_curve.csv", curve_table(r.ppo.curve));
    std::vector<std::pair<std::string, const EvalSummary*>> evals{{"CEsc", &r.cesc}};
    if (r.cmort) evals.emplace_back("CMort", &*r.cmort);
    evals.emplace_back("PPO", &r.ppo_eval);
    evals.emplace_back("PPO+GP", &r.ppo_gp_eval);
    for (const auto& [name, s] : evals) {
      for (std::size_t i = 0; i < s->rewards.size(); ++i)
        episodes.add(m, name, static_cast<int>(i), s->rewards[i], s->lengths[i], s->lengths[i] >= s->horizon);
      std::string slug = name;
      std::replace(slug.begin(), slug.end(), '+', '_');
      std::transform(slug.begin(), slug.end(), slug.begin(), [](unsigned char ch) { return std::tolower(ch); });
      write_histograms(out, *s, tag + "_" + slug + "_");
    }
    columns.push_back(std::move(r));
  }
  CsvTable t({"model", "strategy", "mean_reward", "normalized_reward", "full_horizon_fraction"});
  for (const auto& cell : comparison_matrix(columns))
    t.add(cell.model_id, cell.strategy, cell.mean, cell.normalized, cell.full_fraction);
  out.write_csv("comparison.csv", t);
  out.write_csv("comparison_episodes.csv", episodes);
}

void cmd_stability(const RunConfig& c, RunOutput& out, std::ostream& log) {
  if (c.model.dim() != 3) throw std::invalid_argument("stability needs a three-species model (2, 3 or 4)");
  const StabilityReport report = stability_analysis(c.model, c.stability, derive_seed(c.seed, "stability"));
  CsvTable samples({"strength", "sample", "seed", "ok", "cesc_mean", "ppo_mean", "ppo_gp_mean", "diff_ppo",
                    "diff_ppo_gp", "error"});
  for (const auto& s : report.samples)
    samples.add(s.strength, s.sample, static_cast<unsigned long long>(s.seed), s.ok, s.cesc_mean, s.ppo_mean,
                s.ppo_gp_mean, s.diff_ppo, s.diff_ppo_gp, s.error);
  CsvTable agg({"strength", "n_ok", "mean_diff_ppo", "std_diff_ppo", "mean_diff_ppo_gp", "std_diff_ppo_gp"});
  for (const auto& a : report.aggregates) {
    agg.add(a.strength, a.n_ok, a.mean_diff_ppo, a.std_diff_ppo, a.mean_diff_ppo_gp, a.std_diff_ppo_gp);
    log << "strength " << format_number(a.strength) << ": " << a.n_ok << " ok, mean PPO+GP - CEsc "
        << format_number(a.mean_diff_ppo_gp) << "\n";
  }
  out.write_csv("stability_samples.csv", samples);
  out.write_csv("stability_summary.csv", agg);
}

using Handler = std::function<void(const RunConfig&, RunOutput&, std::ostream&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table{
      {"simulate", cmd_simulate},       {"bifurcation", cmd_bifurcation}, {"tune-cesc", cmd_tune_cesc},
      {"tune-cmort", cmd_tune_cmort},   {"train-ppo", cmd_train_ppo},     {"smooth-gp", cmd_smooth_gp},
      {"evaluate", cmd_evaluate},       {"tradeoff", cmd_tradeoff},       {"project-policy", cmd_project_policy},
      {"compare", cmd_compare},         {"stability", cmd_stability}};
  return table;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{"simulate",  "bifurcation", "tune-cesc", "tune-cmort",
                                              "train-ppo", "smooth-gp",   "evaluate",  "tradeoff",
                                              "project-policy", "compare", "stability"};
  return names;
}

void run_subcommand(const std::string& name, const RunConfig& config, const std::filesystem::path& out_dir,
                    std::ostream& log) {
  const auto it = handlers().find(name);
  if (it == handlers().end()) throw std::invalid_argument("unknown subcommand '" + name + "'");
  try {
    RunOutput out(out_dir, name, to_json(config), config.seed);
    it->second(config, out, log);
    out.finish();
  } catch (const std::exception& e) {
    throw std::runtime_error(name + ": " + e.what());
  }
}

}  // namespace harvest
