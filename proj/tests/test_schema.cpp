#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "schemarl/policy.hpp"
#include "schemarl/schema.hpp"

using namespace schemarl;

namespace {

Trajectory traj(std::vector<int> joint, double reward) {
  Trajectory tr;
  for (std::size_t t = 0; t < joint.size(); ++t) {
    TrajectoryStep s;
    s.t = static_cast<int>(t);
    s.joint_index = joint[t];
    tr.steps.push_back(s);
  }
  tr.reward = reward;
  tr.complete = true;
  return tr;
}

}  // namespace

TEST_CASE("initial logits") {
  for (TaskFamily f : kAllFamilies) {
    const TaskSpec spec = build_task_spec(f);
    const SchemaLogits l = init_schema(spec);
    CHECK(l.horizon == 3);
    CHECK(l.vocab_size() == spec.vocab_size());
    CHECK(l.values.size() == 3u * spec.vocab_size());
    for (double v : l.values) CHECK(v == 0.0);
    for (double p : softmax(l.row(1))) CHECK(p == doctest::Approx(1.0 / spec.vocab_size()));
  }
}

TEST_CASE("update_logits") {
  const TaskSpec spec = build_task_spec(TaskFamily::kOpening);
  SUBCASE("success adds alpha to executed entries only") {
    SchemaLogits l = init_schema(spec);
    update_logits(l, traj({4, 9, 0}, 1.0), 0.1, 0.05);
    for (int t = 0; t < 3; ++t) {
      for (int x = 0; x < 16; ++x) {
        const bool hit = (t == 0 && x == 4) || (t == 1 && x == 9) || (t == 2 && x == 0);
        CHECK(l.at(t, x) == (hit ? 0.1 : 0.0));
      }
    }
  }
  SUBCASE("failure subtracts beta") {
    SchemaLogits l = init_schema(spec);
    update_logits(l, traj({4, 9, 0}, 0.0), 0.1, 0.05);
    CHECK(l.at(0, 4) == -0.05);
    CHECK(l.at(1, 9) == -0.05);
    CHECK(l.at(2, 0) == -0.05);
    CHECK(l.at(0, 5) == 0.0);
  }
  SUBCASE("early termination leaves later rows alone") {
    SchemaLogits l = init_schema(spec);
    update_logits(l, traj({1, 8}, 1.0), 0.1, 0.05);
    CHECK(l.at(0, 1) == 0.1);
    CHECK(l.at(1, 8) == 0.1);
    for (int x = 0; x < 16; ++x) CHECK(l.at(2, x) == 0.0);
  }
  SUBCASE("repeated updates accumulate") {
    SchemaLogits l = init_schema(spec);
    for (int i = 0; i < 10; ++i) update_logits(l, traj({2, 2, 2}, 1.0), 0.1, 0.05);
    CHECK(l.at(0, 2) == doctest::Approx(1.0));
    const auto p = softmax(l.row(0));
    CHECK(p[2] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 15)));
  }
  SUBCASE("contract") {
    SchemaLogits l = init_schema(spec);
    CHECK_THROWS_AS(update_logits(l, traj({16}, 1.0), 0.1, 0.05), ContractViolation);
    CHECK_THROWS_AS(update_logits(l, traj({0}, 1.0), 0.0, 0.05), ContractViolation);
    CHECK_THROWS_AS(update_logits(l, traj({0}, 1.0), 0.1, -1.0), ContractViolation);
    Trajectory bad = traj({0}, 1.0);
    bad.steps[0].t = 3;
    CHECK_THROWS_AS(update_logits(l, bad, 0.1, 0.05), ContractViolation);
  }
}

TEST_CASE("argmax and softmax") {
  const TaskSpec spec = build_task_spec(TaskFamily::kLateralLifting);
  SchemaLogits l = init_schema(spec);
  CHECK(schema_argmax(l) == std::vector<int>{0, 0, 0});  // ties to lowest index
  l.at(0, 3) = 0.5;
  l.at(0, 7) = 0.5;
  l.at(1, 8) = 1e-9;
  l.at(2, 2) = -1.0;
  CHECK(schema_argmax(l) == std::vector<int>{3, 8, 0});

  const std::vector<double> a = {0.3, -1.2, 2.0, 0.0};
  std::vector<double> b = a;
  for (double& v : b) v += 1000.0;
  const auto pa = softmax(a), pb = softmax(b);
  double sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(pa[i] == doctest::Approx(pb[i]).epsilon(1e-12));
    sum += pa[i];
  }
  CHECK(sum == doctest::Approx(1.0));
  CHECK(pa[2] / pa[0] == doctest::Approx(std::exp(1.7)));
}

TEST_CASE("schema strings") {
  const TaskSpec spec = build_task_spec(TaskFamily::kOpening);
  CHECK(schema_string(spec, reference_schema_indices(spec)) ==
        "top-grasp+side-grasp|twist+no-op|no-op+no-op");
}

TEST_CASE("export and import") {
  const TaskSpec opening = build_task_spec(TaskFamily::kOpening);
  SchemaLogits l = init_schema(opening);
  for (std::size_t i = 0; i < l.values.size(); ++i) l.values[i] = std::sin(1.0 + i) / 3.0;
  l.at(1, 5) = 0.1 + 0.2;  // not exactly representable in short decimal

  std::stringstream ss;
  write_schema(ss, l);
  CHECK(read_schema(ss) == l);

  const auto dir = schemarl::testing::scratch_dir("schema_io");
  const std::string path = (dir / "opening.schema").string();
  export_schema(l, path);

  SUBCASE("frozen import into the same task") {
    const ImportedSchema imp = import_schema(path, opening, ImportMode::kFrozen);
    CHECK(imp.frozen);
    CHECK(imp.logits == l);
  }
  SUBCASE("warm start") {
    CHECK_FALSE(import_schema(path, opening, ImportMode::kWarmStart).frozen);
  }
  SUBCASE("different vocabulary is rejected") {
    const TaskSpec rotating = build_task_spec(TaskFamily::kRotating);
    CHECK_THROWS_AS(import_schema(path, rotating, ImportMode::kFrozen), TransferIncompatible);
    CHECK_THROWS_AS(adopt_schema(l, build_task_spec(TaskFamily::kLateralLifting),
                                 ImportMode::kWarmStart),
                    TransferIncompatible);
  }
  SUBCASE("different horizon is rejected") {
    SchemaLogits shorter = l;
    shorter.horizon = 2;
    shorter.values.resize(32);
    CHECK_THROWS_AS(adopt_schema(shorter, opening, ImportMode::kFrozen), TransferIncompatible);
  }
  SUBCASE("a low-dim schema drives a raster policy") {
    // Schemas carry no observation information.
    Policy p = make_schema_policy(opening, Encoding::kRaster, 0);
    p.logits = import_schema(path, opening, ImportMode::kFrozen).logits;
    p.frozen = true;
    const auto obs = observe(reset(opening, 0), Encoding::kRaster).data;
    Rng rng(0);
    CHECK_NOTHROW(sample_action(p, obs, 0, rng));
  }
}

TEST_CASE("malformed schema files") {
  auto parse = [](const std::string& text) {
    std::stringstream ss(text);
    return read_schema(ss);
  };
  const std::string header =
      "family=opening\nT=1\nvocab=top-grasp:no-op,twist:no-op\n";
  CHECK(parse(header + "0.5 -1\n").values == std::vector<double>{0.5, -1.0});
  CHECK_THROWS_AS(parse(header + "0.5\n"), FormatError);
  CHECK_THROWS_AS(parse(header + "0.5 abc\n"), FormatError);
  CHECK_THROWS_AS(parse(header + "0.5 nan\n"), FormatError);
  CHECK_THROWS_AS(parse(header), FormatError);
  CHECK_THROWS_AS(parse("0 1\n" + header), FormatError);
  CHECK_THROWS_AS(parse("family=opening\nT=1\nvocab=jump:no-op\n0\n"), FormatError);
  CHECK_THROWS_AS(parse("family=opening\ncolor=red\n"), FormatError);
}
