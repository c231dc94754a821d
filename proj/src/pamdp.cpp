#include "schemarl/pamdp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace schemarl {
namespace {

constexpr double kPi = std::numbers::pi;

struct SkillEntry {
  Skill skill;
  std::string_view name;
};

constexpr std::array<SkillEntry, 7> kSkillNames = {{
    {Skill::kTopGrasp, "top-grasp"},
    {Skill::kSideGrasp, "side-grasp"},
    {Skill::kGoToPose, "go-to-pose"},
    {Skill::kLift, "lift"},
    {Skill::kTwist, "twist"},
    {Skill::kRotate, "rotate"},
    {Skill::kNoOp, "no-op"},
}};

std::vector<SkillSpec> make_skill_specs() {
  const ParamSpec x{"x", -0.1, 0.1};
  const ParamSpec y{"y", -0.1, 0.1};
  std::vector<SkillSpec> specs(kSkillNames.size());
  specs[static_cast<int>(Skill::kTopGrasp)] = {
      Skill::kTopGrasp, {x, y, {"z-orientation", 0.0, 2.0 * kPi}}};
  specs[static_cast<int>(Skill::kSideGrasp)] = {
      Skill::kSideGrasp, {x, y, {"approach-angle", -kPi / 2.0, kPi / 2.0}}};
  specs[static_cast<int>(Skill::kGoToPose)] = {
      Skill::kGoToPose,
      {x, y, {"roll", 0.0, 2.0 * kPi}, {"pitch", 0.0, 2.0 * kPi}, {"yaw", 0.0, 2.0 * kPi}}};
  specs[static_cast<int>(Skill::kLift)] = {Skill::kLift, {{"distance", 0.0, 0.5}}};
  specs[static_cast<int>(Skill::kTwist)] = {Skill::kTwist, {}};
  specs[static_cast<int>(Skill::kRotate)] = {
      Skill::kRotate, {{"axis-x", -0.1, 0.1}, {"axis-y", -0.1, 0.1}, {"radius", 0.0, 0.2}}};
  specs[static_cast<int>(Skill::kNoOp)] = {Skill::kNoOp, {}};
  return specs;
}

std::vector<Skill> allowed_skills(TaskFamily family) {
  switch (family) {
    case TaskFamily::kLateralLifting:
      return {Skill::kTopGrasp, Skill::kLift, Skill::kNoOp};
    case TaskFamily::kPicking:
      return {Skill::kTopGrasp, Skill::kGoToPose, Skill::kLift, Skill::kNoOp};
    case TaskFamily::kOpening:
      return {Skill::kTopGrasp, Skill::kSideGrasp, Skill::kTwist, Skill::kNoOp};
    case TaskFamily::kRotating:
      return {Skill::kSideGrasp, Skill::kGoToPose, Skill::kRotate, Skill::kNoOp};
  }
  throw ContractViolation("unknown task family");
}

}  // namespace

std::string_view skill_name(Skill skill) {
  for (const auto& e : kSkillNames) {
    if (e.skill == skill) return e.name;
  }
  throw ContractViolation("unknown skill");
}

Skill parse_skill(std::string_view name) {
  for (const auto& e : kSkillNames) {
    if (e.name == name) return e.skill;
  }
  throw std::invalid_argument("unknown skill name: " + std::string(name));
}

std::string_view family_name(TaskFamily family) {
  switch (family) {
    case TaskFamily::kLateralLifting:
      return "lateral-lifting";
    case TaskFamily::kPicking:
      return "picking";
    case TaskFamily::kOpening:
      return "opening";
    case TaskFamily::kRotating:
      return "rotating";
  }
  throw ContractViolation("unknown task family");
}

TaskFamily parse_family(std::string_view name) {
  for (TaskFamily f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  throw std::invalid_argument("unknown task family: " + std::string(name));
}

std::string_view arm_name(Arm arm) { return arm == Arm::kLeft ? "left" : "right"; }

const SkillSpec& skill_spec(Skill skill) {
  static const std::vector<SkillSpec> specs = make_skill_specs();
  return specs[static_cast<int>(skill)];
}

int TaskSpec::joint_index(Skill left, Skill right) const {
  for (const auto& js : joint_vocab) {
    if (js.left == left && js.right == right) return js.index;
  }
  throw ContractViolation("joint skill (" + std::string(skill_name(left)) + ", " +
                          std::string(skill_name(right)) + ") not in vocabulary of " +
                          std::string(family_name(family)));
}

bool TaskSpec::allows(Skill skill) const {
  return std::find(allowed.begin(), allowed.end(), skill) != allowed.end();
}

TaskSpec build_task_spec(TaskFamily family) {
  TaskSpec spec;
  spec.family = family;
  spec.horizon = kHorizon;
  spec.allowed = allowed_skills(family);
  int index = 0;
  for (Skill left : spec.allowed) {
    for (Skill right : spec.allowed) {
      spec.joint_vocab.push_back({left, right, index++});
    }
  }
  for (Skill s : spec.allowed) {
    spec.per_arm_param_dim += static_cast<int>(skill_spec(s).params.size());
  }
  return spec;
}

double denormalize(double raw, const ParamSpec& spec) {
  const double r = std::clamp(raw, -1.0, 1.0);
  // The final min guards against rounding past the upper bound.
  return std::min(spec.lower + (r + 1.0) / 2.0 * (spec.upper - spec.lower), spec.upper);
}

IndexRange param_slice(const TaskSpec& spec, Skill skill) {
  int offset = 0;
  for (Skill s : spec.allowed) {
    const int n = static_cast<int>(skill_spec(s).params.size());
    if (s == skill) return {offset, offset + n};
    offset += n;
  }
  throw ContractViolation("skill " + std::string(skill_name(skill)) + " not allowed in " +
                          std::string(family_name(spec.family)));
}

std::map<std::pair<Arm, Skill>, IndexRange> param_slices(const TaskSpec& spec) {
  std::map<std::pair<Arm, Skill>, IndexRange> out;
  for (Arm arm : {Arm::kLeft, Arm::kRight}) {
    for (Skill s : spec.allowed) out[{arm, s}] = param_slice(spec, s);
  }
  return out;
}

std::vector<std::pair<Skill, Skill>> reference_schema(TaskFamily family) {
  using S = Skill;
  switch (family) {
    case TaskFamily::kLateralLifting:
      return {{S::kTopGrasp, S::kTopGrasp}, {S::kLift, S::kLift}};
    case TaskFamily::kPicking:
      return {{S::kTopGrasp, S::kGoToPose}, {S::kNoOp, S::kGoToPose}, {S::kLift, S::kLift}};
    case TaskFamily::kOpening:
      return {{S::kTopGrasp, S::kSideGrasp}, {S::kTwist, S::kNoOp}};
    case TaskFamily::kRotating:
      return {{S::kGoToPose, S::kSideGrasp}, {S::kGoToPose, S::kNoOp}, {S::kRotate, S::kNoOp}};
  }
  throw ContractViolation("unknown task family");
}

std::vector<int> reference_schema_indices(const TaskSpec& spec) {
  std::vector<int> out;
  for (const auto& [l, r] : reference_schema(spec.family)) out.push_back(spec.joint_index(l, r));
  while (static_cast<int>(out.size()) < spec.horizon) {
    out.push_back(spec.joint_index(Skill::kNoOp, Skill::kNoOp));
  }
  return out;
}

std::string joint_skill_label(const JointSkill& joint_skill) {
  return "L: " + std::string(skill_name(joint_skill.left)) +
         ", R: " + std::string(skill_name(joint_skill.right));
}

}  // namespace schemarl
