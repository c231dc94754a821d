#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "schemarl/pamdp.hpp"

using namespace schemarl;

namespace {

// Parameter counts per skill, listed independently of the library.
int expected_params(Skill s) {
  switch (s) {
    case Skill::kTopGrasp: return 3;
    case Skill::kSideGrasp: return 3;
    case Skill::kGoToPose: return 5;
    case Skill::kLift: return 1;
    case Skill::kTwist: return 0;
    case Skill::kRotate: return 3;
    case Skill::kNoOp: return 0;
  }
  return -1;
}

}  // namespace

TEST_CASE("skill parameter layouts") {
  for (Skill s : {Skill::kTopGrasp, Skill::kSideGrasp, Skill::kGoToPose, Skill::kLift,
                  Skill::kTwist, Skill::kRotate, Skill::kNoOp}) {
    const SkillSpec& spec = skill_spec(s);
    CHECK(static_cast<int>(spec.params.size()) == expected_params(s));
    for (const auto& p : spec.params) CHECK(p.lower < p.upper);
    CHECK(parse_skill(skill_name(s)) == s);
  }
  const double pi = std::numbers::pi;
  CHECK(skill_spec(Skill::kTopGrasp).params[2].lower == 0.0);
  CHECK(skill_spec(Skill::kTopGrasp).params[2].upper == doctest::Approx(2 * pi));
  CHECK(skill_spec(Skill::kSideGrasp).params[2].lower == doctest::Approx(-pi / 2));
  CHECK(skill_spec(Skill::kSideGrasp).params[2].upper == doctest::Approx(pi / 2));
  for (int i = 2; i < 5; ++i) {
    CHECK(skill_spec(Skill::kGoToPose).params[i].lower == 0.0);
    CHECK(skill_spec(Skill::kGoToPose).params[i].upper == doctest::Approx(2 * pi));
  }
  CHECK(skill_spec(Skill::kLift).params[0].lower == 0.0);
  CHECK(skill_spec(Skill::kLift).params[0].upper == 0.5);
  CHECK(skill_spec(Skill::kRotate).params[2].lower == 0.0);
  CHECK(skill_spec(Skill::kRotate).params[2].upper == 0.2);
  CHECK_THROWS(parse_skill("jump"));
}

TEST_CASE("task spec vocabularies") {
  SUBCASE("lateral-lifting has 3 x 3 joint skills") {
    CHECK(build_task_spec(TaskFamily::kLateralLifting).vocab_size() == 9);
  }
  SUBCASE("opening has 16 joint skills and 6 parameters per arm") {
    const TaskSpec s = build_task_spec(TaskFamily::kOpening);
    CHECK(s.vocab_size() == 16);
    CHECK(s.per_arm_param_dim == 3 + 3 + 0 + 0);
  }
  SUBCASE("picking has 9 parameters per arm") {
    CHECK(build_task_spec(TaskFamily::kPicking).per_arm_param_dim == 3 + 5 + 1 + 0);
  }
  SUBCASE("allowed sets") {
    using S = Skill;
    CHECK(build_task_spec(TaskFamily::kLateralLifting).allowed ==
          std::vector<S>{S::kTopGrasp, S::kLift, S::kNoOp});
    CHECK(build_task_spec(TaskFamily::kPicking).allowed ==
          std::vector<S>{S::kTopGrasp, S::kGoToPose, S::kLift, S::kNoOp});
    CHECK(build_task_spec(TaskFamily::kOpening).allowed ==
          std::vector<S>{S::kTopGrasp, S::kSideGrasp, S::kTwist, S::kNoOp});
    CHECK(build_task_spec(TaskFamily::kRotating).allowed ==
          std::vector<S>{S::kSideGrasp, S::kGoToPose, S::kRotate, S::kNoOp});
  }
  for (TaskFamily f : kAllFamilies) {
    const TaskSpec s = build_task_spec(f);
    CAPTURE(family_name(f));
    CHECK(s.horizon == 3);
    CHECK(parse_family(family_name(f)) == f);
    const std::size_t n = s.allowed.size();
    REQUIRE(s.joint_vocab.size() == n * n);
    int per_arm = 0;
    for (Skill k : s.allowed) per_arm += expected_params(k);
    CHECK(s.per_arm_param_dim == per_arm);
    std::set<std::pair<Skill, Skill>> seen;
    for (int i = 0; i < s.vocab_size(); ++i) {
      const JointSkill& js = s.joint_vocab[i];
      CHECK(js.index == i);
      // Left-major enumeration.
      CHECK(js.left == s.allowed[i / n]);
      CHECK(js.right == s.allowed[i % n]);
      CHECK(s.allows(js.left));
      CHECK(s.allows(js.right));
      CHECK(s.joint_index(js.left, js.right) == i);
      seen.insert({js.left, js.right});
    }
    CHECK(seen.size() == n * n);
  }
  CHECK_THROWS(build_task_spec(TaskFamily::kOpening).joint_index(Skill::kLift, Skill::kNoOp));
  CHECK_THROWS(parse_family("juggling"));
}

TEST_CASE("denormalize") {
  const double pi = std::numbers::pi;
  CHECK(denormalize(0.0, {"d", 0.0, 0.5}) == doctest::Approx(0.25));
  CHECK(denormalize(-1.0, {"a", 0.0, 2 * pi}) == 0.0);
  CHECK(denormalize(1.0, {"a", -pi / 2, pi / 2}) == doctest::Approx(pi / 2));
  // Clamped outside [-1, 1].
  CHECK(denormalize(3.0, {"d", 0.0, 0.5}) == doctest::Approx(0.5));
  CHECK(denormalize(-7.0, {"d", 0.0, 0.5}) == 0.0);
  // Monotone and onto.
  const ParamSpec p{"r", -0.1, 0.2};
  double prev = -1e9;
  for (int i = 0; i <= 200; ++i) {
    const double raw = -1.0 + i / 100.0;
    const double v = denormalize(raw, p);
    CHECK(v >= prev);
    CHECK(v >= p.lower);
    CHECK(v <= p.upper);
    prev = v;
  }
  CHECK(denormalize(-1.0, p) == doctest::Approx(p.lower));
  CHECK(denormalize(1.0, p) == doctest::Approx(p.upper));
}

TEST_CASE("parameter slices") {
  const TaskSpec opening = build_task_spec(TaskFamily::kOpening);
  CHECK(param_slice(opening, Skill::kTopGrasp) == IndexRange{0, 3});
  CHECK(param_slice(opening, Skill::kTwist).empty());
  const TaskSpec picking = build_task_spec(TaskFamily::kPicking);
  const auto slices = param_slices(picking);
  CHECK(slices.at({Arm::kRight, Skill::kLift}) == IndexRange{8, 9});

  for (TaskFamily f : kAllFamilies) {
    const TaskSpec s = build_task_spec(f);
    const auto all = param_slices(s);
    for (Arm arm : {Arm::kLeft, Arm::kRight}) {
      std::vector<int> cover(s.per_arm_param_dim, 0);
      int next = 0;
      for (Skill k : s.allowed) {
        const IndexRange r = all.at({arm, k});
        CHECK(r.begin == next);  // ordered by allowed-skill order
        CHECK(r.size() == expected_params(k));
        for (int i = r.begin; i < r.end; ++i) ++cover[i];
        next = r.end;
      }
      CHECK(next == s.per_arm_param_dim);
      for (int c : cover) CHECK(c == 1);
    }
  }
}

TEST_CASE("reference schemas") {
  using S = Skill;
  using P = std::pair<S, S>;
  CHECK(reference_schema(TaskFamily::kLateralLifting) ==
        std::vector<P>{{S::kTopGrasp, S::kTopGrasp}, {S::kLift, S::kLift}});
  CHECK(reference_schema(TaskFamily::kPicking) ==
        std::vector<P>{{S::kTopGrasp, S::kGoToPose}, {S::kNoOp, S::kGoToPose}, {S::kLift, S::kLift}});
  CHECK(reference_schema(TaskFamily::kOpening) ==
        std::vector<P>{{S::kTopGrasp, S::kSideGrasp}, {S::kTwist, S::kNoOp}});
  CHECK(reference_schema(TaskFamily::kRotating) ==
        std::vector<P>{{S::kGoToPose, S::kSideGrasp}, {S::kGoToPose, S::kNoOp}, {S::kRotate, S::kNoOp}});
  const TaskSpec opening = build_task_spec(TaskFamily::kOpening);
  const auto idx = reference_schema_indices(opening);
  REQUIRE(idx.size() == 3);
  CHECK(idx[2] == opening.joint_index(S::kNoOp, S::kNoOp));
  CHECK(joint_skill_label(opening.joint_vocab[idx[0]]) == "L: top-grasp, R: side-grasp");
}
