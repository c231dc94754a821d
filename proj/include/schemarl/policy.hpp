#ifndef SCHEMARL_POLICY_HPP_
#define SCHEMARL_POLICY_HPP_

// Baseline, schema-factored and oracle policies over the joint skill
// vocabulary. All three share an argument/value network; they differ only in
// where the discrete skill distribution comes from.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "schemarl/envs.hpp"
#include "schemarl/nn.hpp"
#include "schemarl/pamdp.hpp"
#include "schemarl/random.hpp"
#include "schemarl/schema.hpp"

namespace schemarl {

enum class PolicyMode { kBaseline, kSchema, kOracle };

std::string_view policy_mode_name(PolicyMode mode);

struct PolicyOptions {
  std::vector<int> hidden{64, 64, 64, 64};
  // Initial per-dimension log std of the argument head, in the network's
  // [-1, 1] output units.
  double init_log_spread = -2.5;
};

struct Policy {
  PolicyMode mode = PolicyMode::kSchema;
  TaskSpec task;
  Encoding encoding = Encoding::kLowDim;
  nn::NetworkParams network;
  // Schema mode only.
  SchemaLogits logits;
  bool frozen = false;
  // Oracle mode only: one vocabulary index per timestep.
  std::vector<int> oracle_schema;
};

Policy make_baseline_policy(const TaskSpec& task, Encoding encoding, std::uint64_t seed,
                            const PolicyOptions& options = {});
Policy make_schema_policy(const TaskSpec& task, Encoding encoding, std::uint64_t seed,
                          const PolicyOptions& options = {});
Policy make_oracle_policy(const TaskSpec& task, Encoding encoding, std::vector<int> schema,
                          std::uint64_t seed, const PolicyOptions& options = {});

// Network argument dimensions driven by a joint skill: the left skill's
// slice, then the right skill's slice shifted by per_arm_param_dim.
std::vector<int> selected_dims(const TaskSpec& task, int joint_index);

// Builds the physical-unit action from pre-clamp samples of selected_dims.
JointAction make_action(const TaskSpec& task, int joint_index, std::span<const double> raw);

// Discrete distribution at timestep t (baseline: from the network output).
std::vector<double> skill_probabilities(const Policy& policy, std::span<const double> output,
                                        int t);

struct SampledAction {
  JointAction action;
  int joint_index = 0;
  std::vector<double> raw;
  double log_prob = 0.0;
  double value = 0.0;
};

SampledAction sample_action(const Policy& policy, std::span<const double> observation, int t,
                            Rng& rng);

struct ActionEvaluation {
  double log_prob = 0.0;
  double entropy = 0.0;
  double value = 0.0;
};

ActionEvaluation log_prob_and_entropy(const Policy& policy, std::span<const double> observation,
                                      int t, int joint_index, std::span<const double> raw);

// Log-probability, entropy and value of one recorded action together with
// their partial derivatives with respect to the network output and the
// log_spread vector. Schema logits are constants here.
struct ActionTerms {
  ActionEvaluation eval;
  std::vector<double> dlogp_doutput;
  std::vector<double> dentropy_doutput;
  std::vector<double> dlogp_dspread;
  std::vector<double> dentropy_dspread;
};

ActionTerms action_terms(const Policy& policy, std::span<const double> output, int t,
                         int joint_index, std::span<const double> raw);

}  // namespace schemarl

#endif  // SCHEMARL_POLICY_HPP_
