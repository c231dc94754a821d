#ifndef SCHEMARL_TESTS_HELPERS_HPP_
#define SCHEMARL_TESTS_HELPERS_HPP_

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "schemarl/envs.hpp"
#include "schemarl/pamdp.hpp"

namespace schemarl::testing {

inline JointAction joint(const TaskSpec& spec, Skill left, Skill right,
                         std::vector<double> left_args = {}, std::vector<double> right_args = {}) {
  JointAction a;
  const int index = spec.joint_index(left, right);
  a.joint_skill = spec.joint_vocab[index];
  a.left_args = std::move(left_args);
  a.right_args = std::move(right_args);
  return a;
}

struct Rollout {
  WorldState state;
  double reward = 0.0;
  bool done = false;
  int steps = 0;
};

inline Rollout run_actions(const TaskSpec& spec, WorldState s, const std::vector<JointAction>& actions,
                           const EnvConfig& cfg = {}) {
  Rollout r;
  for (const auto& a : actions) {
    const StepResult res = step(spec, s, a, cfg);
    s = res.state;
    r.reward = res.reward;
    r.done = res.done;
    ++r.steps;
    if (res.done) break;
  }
  r.state = s;
  return r;
}

// Executes a vocabulary-index sequence with solver arguments.
inline Rollout run_solved(const TaskSpec& spec, WorldState s, const std::vector<int>& sequence,
                          const EnvConfig& cfg = {}) {
  Rollout r;
  for (int x : sequence) {
    const StepResult res = step(spec, s, solve_arguments(spec, s, x, cfg), cfg);
    s = res.state;
    r.reward = res.reward;
    r.done = res.done;
    ++r.steps;
    if (res.done) break;
  }
  r.state = s;
  return r;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("schemarl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace schemarl::testing

#endif  // SCHEMARL_TESTS_HELPERS_HPP_
