#include "harvest/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace harvest {

using nlohmann::json;

namespace {

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config field '" + path_ + "': expected an object");
  }

  template <typename T>
  bool get(const std::string& key, T& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) return false;
    seen_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config field '" + field(key) + "': wrong type");
    }
    return true;
  }

  const json* child(const std::string& key) {
    const auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown config key '" + field(item.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& field, const std::string& constraint) {
  if (!ok) throw ConfigError("config field '" + field + "': " + constraint);
}

Pops to_pops(const std::vector<double>& v, const std::string& field) {
  check(!v.empty() && v.size() <= 3, field, "expected 1 to 3 values");
  Pops p(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p[static_cast<Eigen::Index>(i)] = v[i];
  return p;
}

std::vector<double> to_vec(const Pops& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

void read_params(const json& j, ModelParams& params) {
  ObjectReader r(j, "params");
  if (auto* p1 = std::get_if<ParamSet1>(&params)) {
    r.get("r", p1->r);
    r.get("K", p1->K);
    r.get("beta", p1->beta);
    r.get("H", p1->H);
    r.get("c", p1->c);
    r.get("sigma2", p1->sigma2);
  } else {
    auto& p3 = std::get<ParamSet3>(params);
    r.get("r_X", p3.r_X);
    r.get("K_X", p3.K_X);
    r.get("r_Y", p3.r_Y);
    r.get("K_Y", p3.K_Y);
    r.get("c_XY", p3.c_XY);
    r.get("beta", p3.beta);
    r.get("c", p3.c);
    r.get("D", p3.D);
    r.get("b", p3.b);
    r.get("d_Z", p3.d_Z);
    r.get("sigma2_X", p3.sigma2_X);
    r.get("sigma2_Y", p3.sigma2_Y);
    r.get("sigma2_Z", p3.sigma2_Z);
  }
  r.finish();
}

json params_to_json(const ModelParams& params) {
  if (const auto* p1 = std::get_if<ParamSet1>(&params))
    return {{"r", p1->r}, {"K", p1->K}, {"beta", p1->beta}, {"H", p1->H}, {"c", p1->c}, {"sigma2", p1->sigma2}};
  const auto& p = std::get<ParamSet3>(params);
  return {{"r_X", p.r_X},   {"K_X", p.K_X}, {"r_Y", p.r_Y},           {"K_Y", p.K_Y},           {"c_XY", p.c_XY},
          {"beta", p.beta}, {"c", p.c},     {"D", p.D},               {"b", p.b},               {"d_Z", p.d_Z},
          {"sigma2_X", p.sigma2_X},         {"sigma2_Y", p.sigma2_Y}, {"sigma2_Z", p.sigma2_Z}};
}

/// Reads the model-related keys of `r` into a spec; obs_bounds may be left empty.
ModelSpec read_model(ObjectReader& r) {
  int model_id = 1;
  r.get("model", model_id);
  check(model_id >= 1 && model_id <= 4, "model", "must be 1, 2, 3 or 4");
  ModelSpec spec = base_model_spec(model_id);
  if (const json* p = r.child("params")) read_params(*p, spec.params);
  r.get("harvested", spec.harvested);
  if (const json* rx = r.child("rx_schedule")) {
    ObjectReader rr(*rx, "rx_schedule");
    rr.get("enabled", spec.rx_schedule.enabled);
    rr.get("end_factor", spec.rx_schedule.end_factor);
    rr.get("ramp_steps", spec.rx_schedule.ramp_steps);
    rr.finish();
  }
  if (const json* th = r.child("thresholds")) {
    if (th->is_number()) {
      spec.thresholds = Pops::Constant(spec.dim(), th->get<double>());
    } else {
      std::vector<double> v;
      r.get("thresholds", v);
      spec.thresholds = to_pops(v, "thresholds");
    }
  }
  r.get("horizon", spec.horizon);
  std::vector<double> v;
  if (r.get("initial_state", v)) spec.initial_state = to_pops(v, "initial_state");
  if (r.get("obs_bounds", v)) spec.obs_bounds = to_pops(v, "obs_bounds");

  check(spec.horizon >= 1, "horizon", "must be >= 1");
  check(spec.thresholds.size() == spec.dim(), "thresholds", "length must equal the model dimension");
  check((spec.thresholds.array() > 0.0).all(), "thresholds", "must be > 0");
  check(spec.initial_state.size() == spec.dim(), "initial_state", "length must equal the model dimension");
  check((spec.initial_state.array() > spec.thresholds.array()).all(), "initial_state", "must exceed thresholds");
  return spec;
}

void validate_model(ModelSpec& spec) {
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  }
}

std::pair<int, int> line_and_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

json model_spec_to_json(const ModelSpec& spec) {
  json j{{"model", spec.model_id},
         {"params", params_to_json(spec.params)},
         {"harvested", spec.harvested},
         {"rx_schedule",
          {{"enabled", spec.rx_schedule.enabled},
           {"end_factor", spec.rx_schedule.end_factor},
           {"ramp_steps", spec.rx_schedule.ramp_steps}}},
         {"thresholds", to_vec(spec.thresholds)},
         {"horizon", spec.horizon},
         {"initial_state", to_vec(spec.initial_state)}};
  if (spec.obs_bounds.size() > 0) j["obs_bounds"] = to_vec(spec.obs_bounds);
  return j;
}

ModelSpec model_spec_from_json(const json& j) {
  ObjectReader r(j, "");
  ModelSpec spec = read_model(r);
  r.finish();
  validate_model(spec);
  return spec;
}

RunConfig resolve_config(const json& raw) {
  ObjectReader r(raw, "");
  RunConfig c;
  c.model = read_model(r);
  r.get("seed", c.seed);
  r.get("bounds_episodes", c.bounds_episodes);
  check(c.bounds_episodes >= 1, "bounds_episodes", "must be >= 1");
  if (c.model.obs_bounds.size() == 0) {
    Rng rng = make_rng(0, "obs-bounds", static_cast<std::uint64_t>(c.model.model_id));
    c.model.obs_bounds = natural_range_bounds(c.model, c.bounds_episodes, rng);
  }
  validate_model(c.model);

  if (const json* p = r.child("policy")) {
    check(p->is_string() || p->is_object(), "policy", "must be a file path or an inline policy object");
    c.policy = *p;
  }

  if (const json* t = r.child("tuning")) {
    ObjectReader tr(*t, "tuning");
    tr.get("episodes", c.tuning.episodes);
    tr.get("points", c.tuning.points);
    tr.get("ridge_tolerance", c.tuning.ridge_tolerance);
    tr.finish();
  }
  check(c.tuning.episodes >= 1, "tuning.episodes", "must be >= 1");
  if (c.tuning.points <= 0) c.tuning.points = c.model.n_harvested() == 1 ? 101 : 51;
  check(c.tuning.points >= 2, "tuning.points", "must be >= 2");
  check(c.tuning.ridge_tolerance >= 0.0, "tuning.ridge_tolerance", "must be >= 0");

  c.training = TrainConfig::for_model(c.model.model_id);
  c.training.seed = derive_seed(c.seed, "train");
  if (const json* t = r.child("training")) {
    ObjectReader tr(*t, "training");
    tr.get("iterations", c.training.iterations);
    tr.get("steps_per_iteration", c.training.steps_per_iteration);
    tr.get("gamma", c.training.gamma);
    tr.get("gae_lambda", c.training.gae_lambda);
    tr.get("clip_epsilon", c.training.clip_epsilon);
    tr.get("learning_rate", c.training.learning_rate);
    tr.get("minibatch_size", c.training.minibatch_size);
    tr.get("epochs_per_iteration", c.training.epochs_per_iteration);
    tr.get("entropy_coefficient", c.training.entropy_coefficient);
    tr.get("value_coefficient", c.training.value_coefficient);
    tr.get("max_grad_norm", c.training.max_grad_norm);
    tr.get("hidden", c.training.hidden);
    tr.get("log_std_init", c.training.log_std_init);
    tr.get("checkpoint_every", c.training.checkpoint_every);
    tr.get("seed", c.training.seed);
    tr.finish();
  }
  try {
    c.training.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config field 'training': ") + e.what());
  }

  if (const json* e = r.child("evaluation")) {
    ObjectReader er(*e, "evaluation");
    er.get("episodes", c.eval_episodes);
    er.get("trajectories", c.emit_trajectories);
    er.finish();
  }
  check(c.eval_episodes >= 1, "evaluation.episodes", "must be >= 1");

  if (const json* t = r.child("tradeoff")) {
    ObjectReader tr(*t, "tradeoff");
    tr.get("fractions", c.tradeoff_fractions);
    std::vector<double> m;
    if (tr.get("mortality", m)) c.tradeoff_mortality = m;
    tr.finish();
  }
  check(!c.tradeoff_fractions.empty(), "tradeoff.fractions", "must not be empty");
  for (double f : c.tradeoff_fractions) check(f >= 0.0 && f <= 1.0, "tradeoff.fractions", "values must lie in [0, 1]");
  if (c.tradeoff_mortality) {
    check(static_cast<int>(c.tradeoff_mortality->size()) == c.model.n_harvested(), "tradeoff.mortality",
          "needs one value per harvested species");
    for (double m : *c.tradeoff_mortality) check(m >= 0.0 && m <= 1.0, "tradeoff.mortality", "values must lie in [0, 1]");
  }

  if (c.model.dim() == 1) c.projection.color_axis = "";
  if (const json* p = r.child("projection")) {
    ObjectReader pr(*p, "projection");
    pr.get("dense_axis", c.projection.dense_axis);
    pr.get("color_axis", c.projection.color_axis);
    pr.get("dense_points", c.projection.dense_points);
    pr.get("sparse_points", c.projection.sparse_points);
    pr.get("window_episodes", c.projection.window_episodes);
    pr.get("q_lo", c.projection.q_lo);
    pr.get("q_hi", c.projection.q_hi);
    pr.finish();
  }
  try {
    const int dense = parse_axis(c.projection.dense_axis, c.model.dim());
    if (!c.projection.color_axis.empty())
      check(parse_axis(c.projection.color_axis, c.model.dim()) != dense, "projection.color_axis",
            "must differ from the dense axis");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config field 'projection': ") + e.what());
  }
  check(c.projection.dense_points >= 2 && c.projection.sparse_points >= 1, "projection", "point counts too small");
  check(c.projection.window_episodes >= 1, "projection.window_episodes", "must be >= 1");
  check(0.0 <= c.projection.q_lo && c.projection.q_lo <= c.projection.q_hi && c.projection.q_hi <= 1.0, "projection",
        "quantiles must satisfy 0 <= q_lo <= q_hi <= 1");

  if (const json* g = r.child("gp")) {
    ObjectReader gr(*g, "gp");
    gr.get("length_scale", c.gp.kernel.length_scale);
    gr.get("noise_level", c.gp.kernel.noise_level);
    gr.get("window_episodes", c.gp.window_episodes);
    gr.get("q_lo", c.gp.q_lo);
    gr.get("q_hi", c.gp.q_hi);
    gr.get("dense_points", c.gp.dense_points);
    gr.get("sparse_points", c.gp.sparse_points);
    gr.finish();
  }
  check(c.gp.kernel.length_scale > 0.0, "gp.length_scale", "must be > 0");
  check(c.gp.kernel.noise_level >= 0.0, "gp.noise_level", "must be >= 0");
  check(c.gp.window_episodes >= 1, "gp.window_episodes", "must be >= 1");
  check(0.0 <= c.gp.q_lo && c.gp.q_lo <= c.gp.q_hi && c.gp.q_hi <= 1.0, "gp", "quantiles must satisfy 0 <= q_lo <= q_hi <= 1");
  check(c.gp.dense_points >= 2 && c.gp.sparse_points >= 1, "gp", "point counts too small");

  int stability_iterations = 100;
  if (const json* s = r.child("stability")) {
    ObjectReader sr(*s, "stability");
    sr.get("strengths", c.stability.strengths);
    sr.get("samples", c.stability.samples);
    sr.get("bounds_episodes", c.stability.bounds_episodes);
    sr.get("perturb_variances", c.stability.perturb_variances);
    sr.get("training_iterations", stability_iterations);
    sr.finish();
  }
  check(!c.stability.strengths.empty(), "stability.strengths", "must not be empty");
  for (double s : c.stability.strengths) check(s >= 0.0, "stability.strengths", "must be >= 0");
  check(c.stability.samples >= 1, "stability.samples", "must be >= 1");
  check(c.stability.bounds_episodes >= 1, "stability.bounds_episodes", "must be >= 1");
  check(stability_iterations >= 0, "stability.training_iterations", "must be >= 0");

  if (const json* b = r.child("bifurcation")) {
    ObjectReader br(*b, "bifurcation");
    br.get("beta_h_min", c.bifurcation.beta_h_min);
    br.get("beta_h_max", c.bifurcation.beta_h_max);
    br.get("beta_h_step", c.bifurcation.beta_h_step);
    br.finish();
  }
  check(c.bifurcation.beta_h_min >= 0.0 && c.bifurcation.beta_h_max >= c.bifurcation.beta_h_min, "bifurcation",
        "requires 0 <= beta_h_min <= beta_h_max");
  check(c.bifurcation.beta_h_step > 0.0, "bifurcation.beta_h_step", "must be > 0");

  if (const json* s = r.child("simulate")) {
    ObjectReader sr(*s, "simulate");
    sr.get("episodes", c.simulate_episodes);
    sr.finish();
  }
  check(c.simulate_episodes >= 1, "simulate.episodes", "must be >= 1");

  c.compare_models = {c.model.model_id};
  if (const json* s = r.child("compare")) {
    ObjectReader sr(*s, "compare");
    sr.get("models", c.compare_models);
    sr.finish();
  }
  check(!c.compare_models.empty(), "compare.models", "must not be empty");
  for (int m : c.compare_models) check(m >= 1 && m <= 4, "compare.models", "entries must be 1, 2, 3 or 4");

  r.get("output_dir", c.output_dir);
  r.get("jobs", c.jobs);
  check(c.jobs >= 1, "jobs", "must be >= 1");
  r.finish();

  c.stability.pipeline.tune = c.tuning;
  c.stability.pipeline.train = c.training;
  c.stability.pipeline.train.iterations = stability_iterations;
  c.stability.pipeline.gp = c.gp;
  c.stability.pipeline.eval_episodes = c.eval_episodes;
  c.stability.pipeline.include_cmort = false;
  c.stability.pipeline.jobs = c.jobs;
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const json& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json raw;
  try {
    raw = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::ostringstream msg;
    msg << path.string() << ":" << line << ":" << col << ": parse error: " << e.what();
    throw ConfigError(msg.str());
  }
  if (!raw.is_object()) throw ConfigError(path.string() + ": top level must be an object");
  raw.merge_patch(overrides);
  return resolve_config(raw);
}

json to_json(const RunConfig& c) {
  json j = model_spec_to_json(c.model);
  j["seed"] = c.seed;
  j["bounds_episodes"] = c.bounds_episodes;
  if (c.policy) j["policy"] = *c.policy;
  j["tuning"] = {{"episodes", c.tuning.episodes}, {"points", c.tuning.points}, {"ridge_tolerance", c.tuning.ridge_tolerance}};
  const auto& t = c.training;
  j["training"] = {{"iterations", t.iterations},
                   {"steps_per_iteration", t.steps_per_iteration},
                   {"gamma", t.gamma},
                   {"gae_lambda", t.gae_lambda},
                   {"clip_epsilon", t.clip_epsilon},
                   {"learning_rate", t.learning_rate},
                   {"minibatch_size", t.minibatch_size},
                   {"epochs_per_iteration", t.epochs_per_iteration},
                   {"entropy_coefficient", t.entropy_coefficient},
                   {"value_coefficient", t.value_coefficient},
                   {"max_grad_norm", t.max_grad_norm},
                   {"hidden", t.hidden},
                   {"log_std_init", t.log_std_init},
                   {"checkpoint_every", t.checkpoint_every},
                   {"seed", t.seed}};
  j["evaluation"] = {{"episodes", c.eval_episodes}, {"trajectories", c.emit_trajectories}};
  j["tradeoff"] = {{"fractions", c.tradeoff_fractions}};
  if (c.tradeoff_mortality) j["tradeoff"]["mortality"] = *c.tradeoff_mortality;
  const auto& p = c.projection;
  j["projection"] = {{"dense_axis", p.dense_axis},          {"color_axis", p.color_axis},
                     {"dense_points", p.dense_points},      {"sparse_points", p.sparse_points},
                     {"window_episodes", p.window_episodes}, {"q_lo", p.q_lo},
                     {"q_hi", p.q_hi}};
  j["gp"] = {{"length_scale", c.gp.kernel.length_scale},
             {"noise_level", c.gp.kernel.noise_level},
             {"window_episodes", c.gp.window_episodes},
             {"q_lo", c.gp.q_lo},
             {"q_hi", c.gp.q_hi},
             {"dense_points", c.gp.dense_points},
             {"sparse_points", c.gp.sparse_points}};
  j["stability"] = {{"strengths", c.stability.strengths},
                    {"samples", c.stability.samples},
                    {"bounds_episodes", c.stability.bounds_episodes},
                    {"perturb_variances", c.stability.perturb_variances},
                    {"training_iterations", c.stability.pipeline.train.iterations}};
  j["bifurcation"] = {{"beta_h_min", c.bifurcation.beta_h_min},
                      {"beta_h_max", c.bifurcation.beta_h_max},
                      {"beta_h_step", c.bifurcation.beta_h_step}};
  j["simulate"] = {{"episodes", c.simulate_episodes}};
  j["compare"] = {{"models", c.compare_models}};
  j["output_dir"] = c.output_dir;
  j["jobs"] = c.jobs;
  return j;
}

PolicySpec resolve_policy(const RunConfig& config) {
  if (!config.policy) throw ConfigError("this subcommand needs a 'policy' entry (file path or inline object)");
  PolicySpec policy;
  try {
    if (config.policy->is_string()) {
      policy = load_policy(config.policy->get<std::string>());
    } else {
      json j = *config.policy;
      if (!j.contains("format")) j["format"] = "harvest-policy";
      if (!j.contains("version")) j["version"] = 1;
      policy = parse_policy(j.dump());
    }
    validate_policy(policy, config.model.n_harvested());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config field 'policy': ") + e.what());
  }
  return policy;
}

}  // namespace harvest
