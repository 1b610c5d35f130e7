#include "harvest/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace harvest {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << "parameter " << name << " must be positive and finite (got " << v << ")";
    throw std::invalid_argument(msg.str());
  }
}

bool same(const Pops& a, const Pops& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

double horner(double a, double b, double c, double x) { return ((x + a) * x + b) * x + c; }

double polish(double a, double b, double c, double x) {
  for (int i = 0; i < 4; ++i) {
    const double d = (3.0 * x + 2.0 * a) * x + b;
    if (d == 0.0) break;
    const double next = x - horner(a, b, c, x) / d;
    if (!std::isfinite(next)) break;
    x = next;
  }
  return x;
}

}  // namespace

void ParamSet1::validate() const {
  require_positive(r, "r");
  require_positive(K, "K");
  require_positive(beta, "beta");
  require_positive(H, "H");
  require_positive(c, "c");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("parameter sigma2 must be non-negative");
  if (K < c) throw std::invalid_argument("parameter K must be >= c");
}

void ParamSet3::validate() const {
  require_positive(r_X, "r_X");
  require_positive(K_X, "K_X");
  require_positive(r_Y, "r_Y");
  require_positive(K_Y, "K_Y");
  require_positive(c_XY, "c_XY");
  require_positive(beta, "beta");
  require_positive(c, "c");
  require_positive(D, "D");
  require_positive(b, "b");
  require_positive(d_Z, "d_Z");
  // Zero variances are allowed: they switch the noise off.
  if (!(sigma2_X >= 0.0 && sigma2_Y >= 0.0 && sigma2_Z >= 0.0))
    throw std::invalid_argument("noise variances must be non-negative");
}

double RxSchedule::factor(int t) const {
  if (!enabled) return 1.0;
  if (t >= ramp_steps) return end_factor;
  return 1.0 - (1.0 - end_factor) * static_cast<double>(t) / ramp_steps;
}

double rx_at(int t) {
  if (t < 0) throw std::invalid_argument("rx_at: negative time");
  return t <= 100 ? 1.0 - t / 200.0 : 0.5;
}

Pops ModelSpec::noise_variances() const {
  if (const auto* p1 = std::get_if<ParamSet1>(&params)) return Pops::Constant(1, p1->sigma2);
  const auto& p3 = std::get<ParamSet3>(params);
  return Pops{{p3.sigma2_X, p3.sigma2_Y, p3.sigma2_Z}};
}

void ModelSpec::validate() const {
  if (model_id < 1 || model_id > 4) throw std::invalid_argument("model_id must be 1, 2, 3 or 4");
  std::visit([](const auto& p) { p.validate(); }, params);
  if ((model_id == 1) != std::holds_alternative<ParamSet1>(params))
    throw std::invalid_argument("model 1 takes single-species parameters; models 2-4 take three-species parameters");
  const int d = dim();
  if (harvested.empty() || static_cast<int>(harvested.size()) > d)
    throw std::invalid_argument("harvested species set must be non-empty and fit the model dimension");
  for (std::size_t i = 0; i < harvested.size(); ++i) {
    if (harvested[i] < 0 || harvested[i] >= d) throw std::invalid_argument("harvested species index out of range");
    if (i > 0 && harvested[i] <= harvested[i - 1])
      throw std::invalid_argument("harvested species must be strictly increasing");
  }
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (thresholds.size() != d) throw DimensionError("thresholds length must equal model dimension");
  if (initial_state.size() != d) throw DimensionError("initial_state length must equal model dimension");
  if (!(thresholds.array() > 0.0).all()) throw std::invalid_argument("thresholds must be > 0");
  if (!(initial_state.array() > thresholds.array()).all())
    throw std::invalid_argument("initial_state must exceed thresholds componentwise");
  if (obs_bounds.size() != 0) {
    if (obs_bounds.size() != d) throw DimensionError("obs_bounds length must equal model dimension");
    if (!(obs_bounds.array() > initial_state.array()).all())
      throw std::invalid_argument("obs_bounds must exceed initial_state componentwise");
  }
  if (rx_schedule.enabled) {
    if (d != 3) throw std::invalid_argument("rx_schedule requires a three-species model");
    if (rx_schedule.ramp_steps < 1) throw std::invalid_argument("rx_schedule.ramp_steps must be >= 1");
    if (!(rx_schedule.end_factor > 0.0)) throw std::invalid_argument("rx_schedule.end_factor must be > 0");
  }
}

bool ModelSpec::operator==(const ModelSpec& other) const {
  return model_id == other.model_id && params == other.params && harvested == other.harvested &&
         rx_schedule == other.rx_schedule && same(thresholds, other.thresholds) && horizon == other.horizon &&
         same(initial_state, other.initial_state) && same(obs_bounds, other.obs_bounds);
}

ModelSpec base_model_spec(int model_id) {
  ModelSpec spec;
  spec.model_id = model_id;
  switch (model_id) {
    case 1:
      spec.params = ParamSet1{};
      spec.harvested = {0};
      spec.initial_state = Pops::Constant(1, 0.7);
      break;
    case 2:
      spec.params = ParamSet3{};
      spec.harvested = {0};
      break;
    case 3:
      spec.params = ParamSet3{};
      spec.harvested = {0, 1};
      break;
    case 4:
      spec.params = ParamSet3{};
      spec.harvested = {0, 1};
      spec.rx_schedule.enabled = true;
      break;
    default:
      throw std::invalid_argument("model_id must be 1, 2, 3 or 4");
  }
  if (model_id != 1) spec.initial_state = Pops::Constant(3, 0.5);
  spec.thresholds = Pops::Constant(spec.dim(), 0.05);
  spec.horizon = 200;
  return spec;
}

ModelSpec default_model_spec(int model_id) {
  ModelSpec spec = base_model_spec(model_id);
  Rng rng = make_rng(0, "obs-bounds", static_cast<std::uint64_t>(model_id));
  spec.obs_bounds = natural_range_bounds(spec, 100, rng);
  spec.validate();
  return spec;
}

SimState initial_state(const ModelSpec& spec) { return SimState{spec.initial_state, 0}; }

const char* to_string(Cause cause) {
  switch (cause) {
    case Cause::none:
      return "none";
    case Cause::near_extinction:
      return "near_extinction";
    case Cause::horizon:
      return "horizon";
  }
  return "?";
}

Pops natural_increment(const ModelSpec& spec, const SimState& state) {
  if (state.pops.size() != spec.dim()) throw DimensionError("state dimension does not match model");
  if (const auto* p1 = std::get_if<ParamSet1>(&spec.params))
    return Pops::Constant(1, may_increment(*p1, state.pops[0]));
  const auto& p3 = std::get<ParamSet3>(spec.params);
  return three_species_increment(p3, state.pops, p3.r_X * spec.rx_schedule.factor(state.t));
}

namespace {

int first_at_or_below(const Pops& pops, const Pops& thresholds) {
  for (Eigen::Index i = 0; i < pops.size(); ++i)
    if (pops[i] <= thresholds[i]) return static_cast<int>(i);
  return -1;
}

}  // namespace

bool is_terminal(const ModelSpec& spec, const SimState& state) {
  return state.t >= spec.horizon || first_at_or_below(state.pops, spec.thresholds) >= 0;
}

StepRecord step(const ModelSpec& spec, const SimState& state, const Action& action, Rng& rng) {
  const int d = spec.dim();
  if (state.pops.size() != d) throw DimensionError("state dimension does not match model");
  if (action.size() != spec.n_harvested()) throw DimensionError("action length must equal number of harvested species");
  for (Eigen::Index i = 0; i < action.size(); ++i)
    if (!(action[i] >= 0.0 && action[i] <= 1.0)) throw std::invalid_argument("mortality must lie in [0, 1]");
  if (is_terminal(spec, state)) throw std::logic_error("cannot step a terminated state");

  StepRecord rec;
  rec.before = state;
  rec.action = action;

  Pops pops = state.pops;
  for (int k = 0; k < spec.n_harvested(); ++k) {
    const int s = spec.harvested[k];
    rec.harvest_reward += action[k] * pops[s];
    pops[s] *= 1.0 - action[k];
  }

  // The noise draw happens regardless of the branch taken below so that the
  // random stream advances identically for every action.
  Pops eta(d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < d; ++i) eta[i] = normal(rng);

  rec.after.t = state.t + 1;
  int crossed = first_at_or_below(pops, spec.thresholds);
  if (crossed < 0) {
    const Pops growth = natural_increment(spec, SimState{pops, state.t});
    pops += growth + (eta.array() * spec.noise_variances().array().sqrt()).matrix();
    pops = pops.cwiseMax(0.0);
    crossed = first_at_or_below(pops, spec.thresholds);
  }
  rec.after.pops = pops;

  if (crossed >= 0) {
    rec.terminated = true;
    rec.cause = Cause::near_extinction;
    rec.extinct_species = crossed;
    rec.penalty = -100.0 / rec.after.t;
  } else if (rec.after.t >= spec.horizon) {
    rec.terminated = true;
    rec.cause = Cause::horizon;
  }
  return rec;
}

double Trajectory::total_reward() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.reward();
  return total;
}

Pops natural_range_bounds(const ModelSpec& spec, int n_episodes, Rng& rng) {
  if (n_episodes < 1) throw std::invalid_argument("natural_range_bounds: n_episodes must be >= 1");
  Pops peak = spec.initial_state;
  const Action idle = Action::Zero(spec.n_harvested());
  for (int e = 0; e < n_episodes; ++e) {
    SimState state = initial_state(spec);
    while (!is_terminal(spec, state)) {
      state = step(spec, state, idle, rng).after;
      peak = peak.cwiseMax(state.pops);
    }
  }
  Pops bounds(peak.size());
  for (Eigen::Index i = 0; i < peak.size(); ++i) bounds[i] = std::ceil(1.25 * peak[i] * 100.0 - 1e-9) / 100.0;
  return bounds;
}

std::vector<double> solve_cubic(double a, double b, double c) {
  const double p = b - a * a / 3.0;
  const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double shift = -a / 3.0;
  const double disc = q * q / 4.0 + p * p * p / 27.0;
  std::vector<double> roots;
  if (disc < 0.0) {
    const double m = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
    const double theta = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) roots.push_back(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) + shift);
  } else {
    const double s = std::sqrt(disc);
    roots.push_back(std::cbrt(-q / 2.0 + s) + std::cbrt(-q / 2.0 - s) + shift);
    if (disc == 0.0 && p != 0.0) roots.push_back(-std::cbrt(-q / 2.0) + shift);
  }
  for (double& r : roots) r = polish(a, b, c, r);
  std::sort(roots.begin(), roots.end());
  std::vector<double> unique;
  for (double r : roots)
    if (unique.empty() || std::abs(r - unique.back()) > 1e-9 * std::max(1.0, std::abs(r))) unique.push_back(r);
  return unique;
}

std::vector<BifurcationRow> fixed_points_model1(const ParamSet1& params, const std::vector<double>& beta_h_grid) {
  if (beta_h_grid.empty()) throw std::invalid_argument("fixed_points_model1: empty beta*H grid");
  const double r = params.r, K = params.K, c2 = params.c * params.c;
  std::vector<BifurcationRow> table;
  table.reserve(beta_h_grid.size());
  for (double bh : beta_h_grid) {
    if (!(bh >= 0.0)) throw std::invalid_argument("fixed_points_model1: beta*H must be non-negative");
    ParamSet1 local = params;
    local.beta = bh;
    local.H = 1.0;
    // Interior roots of r(1 - x/K)(c^2 + x^2) = bh x, scaled to monic form.
    const auto roots = solve_cubic(-K, c2 + bh * K / r, -K * c2);
    BifurcationRow row{bh, {}};
    constexpr double h = 1e-6;
    for (double x : roots) {
      if (!(x > 0.0)) continue;
      const double slope = (may_increment(local, x + h) - may_increment(local, x - h)) / (2.0 * h);
      row.equilibria.push_back({x, slope < 0.0});
    }
    table.push_back(std::move(row));
  }
  return table;
}

}  // namespace harvest
