#ifndef SCHEMARL_PAMDP_HPP_
#define SCHEMARL_PAMDP_HPP_

// Parameterized-action vocabulary shared by every module: skills, their
// continuous parameters, two-arm joint skills and per-family task specs.

#include <array>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "schemarl/errors.hpp"

namespace schemarl {

enum class Skill { kTopGrasp, kSideGrasp, kGoToPose, kLift, kTwist, kRotate, kNoOp };
enum class TaskFamily { kLateralLifting, kPicking, kOpening, kRotating };
enum class Arm { kLeft = 0, kRight = 1 };

inline constexpr std::array<TaskFamily, 4> kAllFamilies = {
    TaskFamily::kLateralLifting, TaskFamily::kPicking, TaskFamily::kOpening,
    TaskFamily::kRotating};
inline constexpr int kHorizon = 3;
inline constexpr int kNumArms = 2;

std::string_view skill_name(Skill skill);
Skill parse_skill(std::string_view name);
std::string_view family_name(TaskFamily family);
TaskFamily parse_family(std::string_view name);
std::string_view arm_name(Arm arm);

struct ParamSpec {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
};

struct SkillSpec {
  Skill skill = Skill::kNoOp;
  std::vector<ParamSpec> params;
};

// Parameter layout of a skill. Positions and rotation axes are offsets from
// the object anchor; angles are radians; distances are meters.
const SkillSpec& skill_spec(Skill skill);

struct JointSkill {
  Skill left = Skill::kNoOp;
  Skill right = Skill::kNoOp;
  int index = 0;

  Skill of(Arm arm) const { return arm == Arm::kLeft ? left : right; }
  bool operator==(const JointSkill&) const = default;
};

struct JointAction {
  JointSkill joint_skill;
  std::vector<double> left_args;
  std::vector<double> right_args;

  const std::vector<double>& args(Arm arm) const {
    return arm == Arm::kLeft ? left_args : right_args;
  }
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Object variation ranges sampled at reset. Only the block matching the
// task family is used.
struct VariationRanges {
  // lateral lifting (bar)
  Range bar_length{0.4, 0.6};
  Range bar_yaw{0.0, 3.14159265358979323846};
  Range bar_mass{2.0, 6.0};
  // picking (ball)
  Range ball_radius{0.05, 0.15};
  Range ball_friction{0.05, 0.3};
  // opening (bottle)
  Range bottle_base_radius{0.04, 0.08};
  Range bottle_cap_radius{0.02, 0.04};
  // rotating (corkscrew)
  Range handle_length{0.08, 0.15};
  Range handle_yaw{0.0, 2.0 * 3.14159265358979323846};
  // all families
  Range center{0.3, 0.7};
};

struct TaskSpec {
  TaskFamily family = TaskFamily::kLateralLifting;
  int horizon = kHorizon;
  // Allowed skills for either arm, in vocabulary order (no-op last).
  std::vector<Skill> allowed;
  std::vector<JointSkill> joint_vocab;
  int per_arm_param_dim = 0;
  VariationRanges variation;

  int vocab_size() const { return static_cast<int>(joint_vocab.size()); }
  // Index of the (left, right) pair in joint_vocab; throws if not allowed.
  int joint_index(Skill left, Skill right) const;
  bool allows(Skill skill) const;
};

TaskSpec build_task_spec(TaskFamily family);

// Maps a network output in [-1, 1] onto [spec.lower, spec.upper]. Inputs
// outside [-1, 1] are clamped first.
double denormalize(double raw, const ParamSpec& spec);

struct IndexRange {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool empty() const { return end == begin; }
  bool operator==(const IndexRange&) const = default;
};

// Contiguous slice of each arm's argument block owned by a skill. Slices are
// per-arm offsets in [0, per_arm_param_dim); the right arm's block follows
// the left arm's in network outputs.
std::map<std::pair<Arm, Skill>, IndexRange> param_slices(const TaskSpec& spec);
IndexRange param_slice(const TaskSpec& spec, Skill skill);

// Skill sequence listed for each family in the schema table; shorter than
// the horizon for two-step families.
std::vector<std::pair<Skill, Skill>> reference_schema(TaskFamily family);

// reference_schema padded to the horizon with (no-op, no-op), as vocabulary
// indices.
std::vector<int> reference_schema_indices(const TaskSpec& spec);

// "L: top-grasp, R: side-grasp" style label.
std::string joint_skill_label(const JointSkill& joint_skill);

}  // namespace schemarl

#endif  // SCHEMARL_PAMDP_HPP_
