#include "harvest/policy.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace harvest {

namespace {

using nlohmann::json;

constexpr int kPolicyFormatVersion = 1;

template <typename... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_unit_interval(const Action& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
}

void require_length(Eigen::Index got, int expected, const char* what) {
  if (expected >= 0 && got != expected)
    throw DimensionError(std::string(what) + " length must equal the number of harvested species");
}

template <typename Derived>
json matrix_to_json(const Eigen::MatrixBase<Derived>& m) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::MatrixXd>(data.data(), m.rows(), m.cols()) = m;
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::invalid_argument("matrix shape metadata does not match its data length");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

json vector_to_json(const Pops& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Pops vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  if (data.size() > 3) throw DimensionError("vectors hold at most three species");
  Pops v(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) v[static_cast<Eigen::Index>(i)] = data[i];
  return v;
}

json mlp_to_json(const MlpParams& p) {
  return json{{"input_dim", p.input_dim()},
              {"hidden", p.hidden()},
              {"action_dim", p.action_dim()},
              {"layers",
               {{"w1", matrix_to_json(p.w1)},
                {"b1", matrix_to_json(p.b1)},
                {"w2", matrix_to_json(p.w2)},
                {"b2", matrix_to_json(p.b2)},
                {"w_pi", matrix_to_json(p.w_pi)},
                {"b_pi", matrix_to_json(p.b_pi)},
                {"log_std", matrix_to_json(p.log_std)},
                {"w_v", matrix_to_json(p.w_v)},
                {"b_v", p.b_v}}}};
}

MlpParams mlp_from_json(const json& j) {
  MlpParams p = MlpParams::zeros(j.at("input_dim").get<int>(), j.at("action_dim").get<int>(), j.at("hidden").get<int>());
  const json& l = j.at("layers");
  auto load = [&](const char* name, auto& target) {
    Eigen::MatrixXd m = matrix_from_json(l.at(name));
    if (m.rows() != target.rows() || m.cols() != target.cols())
      throw DimensionError(std::string("layer ") + name + " has an inconsistent shape");
    target = m;
  };
  load("w1", p.w1);
  load("b1", p.b1);
  load("w2", p.w2);
  load("b2", p.b2);
  load("w_pi", p.w_pi);
  load("b_pi", p.b_pi);
  load("log_std", p.log_std);
  load("w_v", p.w_v);
  p.b_v = l.at("b_v").get<double>();
  return p;
}

}  // namespace

std::string family_name(const PolicySpec& policy) {
  return std::visit(overloaded{[](const ConstantEscapement&) { return "cesc"; },
                               [](const ConstantMortality&) { return "cmort"; },
                               [](const ScaledMortality&) { return "scaled_cmort"; },
                               [](const MlpPolicy&) { return "mlp"; }, [](const GpPolicy&) { return "gp"; }},
                    policy);
}

void validate_policy(const PolicySpec& policy, int n_harvested) {
  std::visit(overloaded{
                 [&](const ConstantEscapement& p) {
                   require_length(p.escapement.size(), n_harvested, "escapement");
                   if (!(p.escapement.array() >= 0.0).all())
                     throw std::invalid_argument("escapement must be non-negative");
                 },
                 [&](const ConstantMortality& p) {
                   require_length(p.mortality.size(), n_harvested, "mortality");
                   require_unit_interval(p.mortality, "mortality");
                 },
                 [&](const ScaledMortality& p) {
                   require_length(p.base.size(), n_harvested, "mortality");
                   require_unit_interval(p.base, "mortality");
                   if (!(p.factor >= 0.0 && p.factor <= 1.0))
                     throw std::invalid_argument("mortality factor must lie in [0, 1]");
                 },
                 [&](const MlpPolicy& p) {
                   require_length(p.params.action_dim(), n_harvested, "network action");
                   if (!p.params.all_finite()) throw std::invalid_argument("network parameters must be finite");
                   if (p.obs_bounds.size() != p.params.input_dim())
                     throw DimensionError("obs_bounds length must equal the network input width");
                 },
                 [&](const GpPolicy& p) {
                   if (!p.regressor.fitted()) throw std::invalid_argument("GP policy has not been fitted");
                   require_length(p.regressor.output_dim(), n_harvested, "GP output");
                   const auto& y = p.regressor.targets();
                   if (!((y.array() >= 0.0) && (y.array() <= 1.0)).all())
                     throw std::invalid_argument("GP targets must lie in [0, 1]");
                 }},
             policy);
}

Action cesc_act(const Pops& pops, const std::vector<int>& harvested, const Action& escapement) {
  Action m(static_cast<Eigen::Index>(harvested.size()));
  for (std::size_t k = 0; k < harvested.size(); ++k) {
    const double p = pops[harvested[k]];
    const double s = escapement[static_cast<Eigen::Index>(k)];
    m[static_cast<Eigen::Index>(k)] = p > s && p > 0.0 ? (p - s) / p : 0.0;
  }
  return m;
}

Action cmort_act(const ConstantMortality& policy) { return policy.mortality; }

Action cmort_act(const ScaledMortality& policy) { return policy.factor * policy.base; }

Eigen::MatrixXd gp_predict(const GpPolicy& policy, const Eigen::Ref<const Eigen::MatrixXd>& obs) {
  return policy.regressor.predict(obs).cwiseMax(0.0).cwiseMin(1.0);
}

Action act(const PolicySpec& policy, const SimState& state, const ModelSpec& spec) {
  return std::visit(
      overloaded{[&](const ConstantEscapement& p) { return cesc_act(state.pops, spec.harvested, p.escapement); },
                 [](const ConstantMortality& p) { return cmort_act(p); },
                 [](const ScaledMortality& p) { return cmort_act(p); },
                 [&](const MlpPolicy& p) {
                   const Eigen::VectorXd obs = normalize_state(state.pops, p.obs_bounds);
                   const MlpOutput out = mlp_forward(p.params, obs);
                   return Action(out.mean.col(0));
                 },
                 [&](const GpPolicy& p) {
                   const Eigen::VectorXd obs = normalize_state(state.pops, p.obs_bounds);
                   return Action(gp_predict(p, obs).col(0));
                 }},
      policy);
}

std::string serialize_policy(const PolicySpec& policy) {
  json j{{"format", "harvest-policy"}, {"version", kPolicyFormatVersion}, {"family", family_name(policy)}};
  std::visit(overloaded{[&](const ConstantEscapement& p) { j["escapement"] = vector_to_json(p.escapement); },
                        [&](const ConstantMortality& p) { j["mortality"] = vector_to_json(p.mortality); },
                        [&](const ScaledMortality& p) {
                          j["base"] = vector_to_json(p.base);
                          j["factor"] = p.factor;
                        },
                        [&](const MlpPolicy& p) {
                          j["obs_bounds"] = vector_to_json(p.obs_bounds);
                          j["network"] = mlp_to_json(p.params);
                        },
                        [&](const GpPolicy& p) {
                          const auto& gp = p.regressor;
                          j["obs_bounds"] = vector_to_json(p.obs_bounds);
                          j["kernel"] = {{"rbf_length_scale", gp.kernel().length_scale},
                                         {"white_noise_level", gp.kernel().noise_level}};
                          j["jitter"] = gp.jitter();
                          j["inputs"] = matrix_to_json(gp.inputs());
                          j["targets"] = matrix_to_json(gp.targets());
                          j["alpha"] = matrix_to_json(gp.alpha());
                        }},
             policy);
  return j.dump(1);
}

PolicySpec parse_policy(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("policy file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "harvest-policy")
      throw std::invalid_argument("not a harvest-policy file");
    if (j.at("version").get<int>() != kPolicyFormatVersion)
      throw std::invalid_argument("unsupported policy format version");
    const auto family = j.at("family").get<std::string>();
    PolicySpec policy;
    if (family == "cesc") {
      policy = ConstantEscapement{vector_from_json(j.at("escapement"))};
    } else if (family == "cmort") {
      policy = ConstantMortality{vector_from_json(j.at("mortality"))};
    } else if (family == "scaled_cmort") {
      policy = ScaledMortality{vector_from_json(j.at("base")), j.at("factor").get<double>()};
    } else if (family == "mlp") {
      policy = MlpPolicy{mlp_from_json(j.at("network")), vector_from_json(j.at("obs_bounds"))};
    } else if (family == "gp") {
      RbfWhiteKernel kernel{j.at("kernel").at("rbf_length_scale").get<double>(),
                            j.at("kernel").at("white_noise_level").get<double>()};
      policy = GpPolicy{GpRegressor::from_parts(matrix_from_json(j.at("inputs")), matrix_from_json(j.at("targets")),
                                                kernel, matrix_from_json(j.at("alpha")), j.at("jitter").get<double>()),
                        vector_from_json(j.at("obs_bounds"))};
    } else {
      throw std::invalid_argument("unknown policy family '" + family + "'");
    }
    validate_policy(policy);
    return policy;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed policy file: ") + e.what());
  }
}

void save_policy(const PolicySpec& policy, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write policy file " + path.string());
  out << serialize_policy(policy) << '\n';
}

PolicySpec load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read policy file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_policy(buf.str());
}

}  // namespace harvest
