#include "schemarl/policy.hpp"

#include <cmath>
#include <numbers>

namespace schemarl {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

const char* const kSkillHead = "skill_logits";
const char* const kArgHead = "arg_means";
const char* const kValueHead = "value";

nn::NetworkParams build_network(const TaskSpec& task, Encoding encoding, bool skill_head,
                                const PolicyOptions& options) {
  std::vector<std::pair<std::string, int>> heads;
  if (skill_head) heads.emplace_back(kSkillHead, task.vocab_size());
  heads.emplace_back(kArgHead, 2 * task.per_arm_param_dim);
  heads.emplace_back(kValueHead, 1);
  return nn::NetworkParams(observation_size(encoding), options.hidden, heads,
                           2 * task.per_arm_param_dim);
}

Policy make_policy(PolicyMode mode, const TaskSpec& task, Encoding encoding, std::uint64_t seed,
                   const PolicyOptions& options) {
  Policy p;
  p.mode = mode;
  p.task = task;
  p.encoding = encoding;
  p.network = build_network(task, encoding, mode == PolicyMode::kBaseline, options);
  nn::initialize(p.network, seed, options.init_log_spread);
  if (mode == PolicyMode::kSchema) p.logits = init_schema(task);
  return p;
}

void check_timestep(const Policy& policy, int t) {
  if (t < 0 || t >= policy.task.horizon) {
    throw ContractViolation("timestep " + std::to_string(t) + " outside horizon");
  }
}

void check_joint(const Policy& policy, int joint_index) {
  if (joint_index < 0 || joint_index >= policy.task.vocab_size()) {
    throw ContractViolation("joint skill index " + std::to_string(joint_index) +
                            " outside vocabulary");
  }
}

double categorical_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace

std::string_view policy_mode_name(PolicyMode mode) {
  switch (mode) {
    case PolicyMode::kBaseline: return "baseline";
    case PolicyMode::kSchema: return "schema";
    case PolicyMode::kOracle: return "oracle";
  }
  return "?";
}

Policy make_baseline_policy(const TaskSpec& task, Encoding encoding, std::uint64_t seed,
                            const PolicyOptions& options) {
  return make_policy(PolicyMode::kBaseline, task, encoding, seed, options);
}

Policy make_schema_policy(const TaskSpec& task, Encoding encoding, std::uint64_t seed,
                          const PolicyOptions& options) {
  return make_policy(PolicyMode::kSchema, task, encoding, seed, options);
}

Policy make_oracle_policy(const TaskSpec& task, Encoding encoding, std::vector<int> schema,
                          std::uint64_t seed, const PolicyOptions& options) {
  if (static_cast<int>(schema.size()) != task.horizon) {
    throw ContractViolation("oracle schema length must equal the horizon");
  }
  Policy p = make_policy(PolicyMode::kOracle, task, encoding, seed, options);
  p.oracle_schema = std::move(schema);
  for (int x : p.oracle_schema) check_joint(p, x);
  return p;
}

std::vector<int> selected_dims(const TaskSpec& task, int joint_index) {
  const JointSkill& js = task.joint_vocab.at(joint_index);
  std::vector<int> dims;
  const IndexRange l = param_slice(task, js.left);
  const IndexRange r = param_slice(task, js.right);
  for (int i = l.begin; i < l.end; ++i) dims.push_back(i);
  for (int i = r.begin; i < r.end; ++i) dims.push_back(task.per_arm_param_dim + i);
  return dims;
}

JointAction make_action(const TaskSpec& task, int joint_index, std::span<const double> raw) {
  const JointSkill& js = task.joint_vocab.at(joint_index);
  const auto& lp = skill_spec(js.left).params;
  const auto& rp = skill_spec(js.right).params;
  if (raw.size() != lp.size() + rp.size()) {
    throw ContractViolation("raw argument count does not match the joint skill");
  }
  JointAction a;
  a.joint_skill = js;
  for (std::size_t i = 0; i < lp.size(); ++i) a.left_args.push_back(denormalize(raw[i], lp[i]));
  for (std::size_t i = 0; i < rp.size(); ++i) {
    a.right_args.push_back(denormalize(raw[lp.size() + i], rp[i]));
  }
  return a;
}

std::vector<double> skill_probabilities(const Policy& policy, std::span<const double> output,
                                        int t) {
  check_timestep(policy, t);
  switch (policy.mode) {
    case PolicyMode::kBaseline: {
      const nn::Head& h = policy.network.head(kSkillHead);
      return softmax({output.begin() + h.offset, output.begin() + h.offset + h.width});
    }
    case PolicyMode::kSchema:
      return softmax(policy.logits.row(t));
    case PolicyMode::kOracle: {
      std::vector<double> p(policy.task.vocab_size(), 0.0);
      p[policy.oracle_schema[t]] = 1.0;
      return p;
    }
  }
  return {};
}

SampledAction sample_action(const Policy& policy, std::span<const double> observation, int t,
                            Rng& rng) {
  check_timestep(policy, t);
  const auto fwd = nn::forward(policy.network, observation);
  const auto probs = skill_probabilities(policy, fwd.output, t);

  SampledAction s;
  if (policy.mode == PolicyMode::kOracle) {
    s.joint_index = policy.oracle_schema[t];
  } else {
    const double u = rng.uniform();
    double acc = 0.0;
    s.joint_index = static_cast<int>(probs.size()) - 1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) {
        s.joint_index = static_cast<int>(i);
        break;
      }
    }
    s.log_prob = std::log(probs[s.joint_index]);
  }

  const auto means = fwd.head(policy.network, kArgHead);
  const auto spread = policy.network.log_spread();
  for (int d : selected_dims(policy.task, s.joint_index)) {
    const double sigma = std::exp(spread[d]);
    const double z = rng.normal();
    s.raw.push_back(means[d] + sigma * z);
    s.log_prob += -0.5 * z * z - spread[d] - 0.5 * kLog2Pi;
  }
  s.action = make_action(policy.task, s.joint_index, s.raw);
  s.value = fwd.head(policy.network, kValueHead)[0];
  return s;
}

ActionTerms action_terms(const Policy& policy, std::span<const double> output, int t,
                         int joint_index, std::span<const double> raw) {
  check_timestep(policy, t);
  check_joint(policy, joint_index);
  const auto dims = selected_dims(policy.task, joint_index);
  if (raw.size() != dims.size()) throw ContractViolation("raw argument count mismatch");

  ActionTerms out;
  out.dlogp_doutput.assign(output.size(), 0.0);
  out.dentropy_doutput.assign(output.size(), 0.0);
  out.dlogp_dspread.assign(policy.network.spread_dim(), 0.0);
  out.dentropy_dspread.assign(policy.network.spread_dim(), 0.0);

  const auto probs = skill_probabilities(policy, output, t);
  if (policy.mode != PolicyMode::kOracle) {
    const double h = categorical_entropy(probs);
    out.eval.log_prob = std::log(probs[joint_index]);
    out.eval.entropy = h;
    if (policy.mode == PolicyMode::kBaseline) {
      const int off = policy.network.head(kSkillHead).offset;
      for (std::size_t j = 0; j < probs.size(); ++j) {
        const double pj = probs[j];
        out.dlogp_doutput[off + j] = (static_cast<int>(j) == joint_index ? 1.0 : 0.0) - pj;
        out.dentropy_doutput[off + j] = pj > 0.0 ? -pj * (std::log(pj) + h) : 0.0;
      }
    }
  }

  const nn::Head& mh = policy.network.head(kArgHead);
  const auto spread = policy.network.log_spread();
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const int d = dims[k];
    const double inv_var = std::exp(-2.0 * spread[d]);
    const double diff = raw[k] - output[mh.offset + d];
    out.eval.log_prob += -0.5 * diff * diff * inv_var - spread[d] - 0.5 * kLog2Pi;
    out.eval.entropy += 0.5 * (kLog2Pi + 1.0) + spread[d];
    out.dlogp_doutput[mh.offset + d] = diff * inv_var;
    out.dlogp_dspread[d] = diff * diff * inv_var - 1.0;
    out.dentropy_dspread[d] = 1.0;
  }
  out.eval.value = output[policy.network.head(kValueHead).offset];
  return out;
}

ActionEvaluation log_prob_and_entropy(const Policy& policy, std::span<const double> observation,
                                      int t, int joint_index, std::span<const double> raw) {
  const auto fwd = nn::forward(policy.network, observation);
  return action_terms(policy, fwd.output, t, joint_index, raw).eval;
}

}  // namespace schemarl
