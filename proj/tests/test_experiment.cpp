#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "schemarl/experiment.hpp"

using namespace schemarl;
using schemarl::testing::scratch_dir;
using schemarl::testing::slurp;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is, "test.cfg");
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

// Runs the CLI with the output root pointed at `root`; returns the exit code.
int cli(const fs::path& root, const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(kOutputRootVar) + "='" + root.string() + "' '" +
                          SCHEMARL_CLI_PATH + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<LogRow> log_rows(const std::vector<std::pair<std::int64_t, double>>& points) {
  std::vector<LogRow> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    LogRow r;
    r.round = static_cast<int>(i);
    r.episodes = points[i].first;
    r.trailing_success_rate = points[i].second;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse(
      "# comment\n"
      "family = picking   # trailing comment\n"
      "mode = schema\n"
      "encoding = raster\n"
      "seeds = 2-4\n"
      "alpha = 0.5\n"
      "hidden = 32,16\n"
      "support_yaw_tol_deg = 90\n"
      "\n");
  CHECK(c.family == TaskFamily::kPicking);
  CHECK(c.mode == TrainMode::kSchema);
  CHECK(c.encoding == Encoding::kRaster);
  CHECK(c.seeds == std::vector<std::uint64_t>{2, 3, 4});
  CHECK(c.trainer.alpha == 0.5);
  CHECK(c.policy.hidden == std::vector<int>{32, 16});
  CHECK(c.name == "picking_schema_raster");
  CHECK(parse("family=opening\nmode=oracle\nseeds=7,1\n").seeds == std::vector<std::uint64_t>{7, 1});

  std::ostringstream os;
  write_config(os, c);
  const ExperimentConfig back = parse(os.str());
  CHECK(back.family == c.family);
  CHECK(back.seeds == c.seeds);
  CHECK(back.trainer.alpha == c.trainer.alpha);
  CHECK(back.policy.hidden == c.policy.hidden);
  CHECK(back.env.support_yaw_tol == doctest::Approx(c.env.support_yaw_tol));
  std::ostringstream again;
  write_config(again, back);
  CHECK(again.str() == os.str());
}

TEST_CASE("config errors carry line numbers") {
  CHECK(config_error("family = opening\nmode = schema\ncolour = red\n").find("test.cfg:3:") == 0);
  CHECK(config_error("family = opening\nmode schema\n").find("test.cfg:2:") == 0);
  CHECK(config_error("family = opening\nfamily = picking\nmode = schema\n").find("test.cfg:2:") == 0);
  CHECK(config_error("family = opening\nmode = schema\nworkers = many\n").find("test.cfg:3:") == 0);
  CHECK(config_error("family = juggling\nmode = schema\n").find("test.cfg:1:") == 0);
  CHECK_FALSE(config_error("family = opening\n").empty());
  CHECK_FALSE(config_error("family = opening\nmode = transfer\n").empty());
  CHECK_FALSE(config_error("family = opening\nmode = schema\nalpha = -1\n").empty());
  CHECK(config_error("family = opening\nmode = schema\n").empty());
}

TEST_CASE("aggregation") {
  SUBCASE("median") {
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 3, 2}) == 2.5);
  }
  SUBCASE("finished seeds carry their last row") {
    const auto rows = aggregate_logs({log_rows({{10, 0.1}, {20, 0.5}}),
                                      log_rows({{10, 0.3}, {20, 0.4}, {30, 0.9}}),
                                      log_rows({{10, 0.2}})});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].success_median == doctest::Approx(0.2));
    CHECK(rows[0].success_min == doctest::Approx(0.1));
    CHECK(rows[0].success_max == doctest::Approx(0.3));
    CHECK(rows[0].active_seeds == 3);
    CHECK(rows[2].episodes_median == 20.0);  // 20, 30, 10
    CHECK(rows[2].success_median == doctest::Approx(0.5));
    CHECK(rows[2].active_seeds == 1);
  }
  SUBCASE("median episodes counts misses at the cap") {
    std::vector<SeedOutcome> s(3);
    s[0].episodes_to_threshold = 100;
    s[1].episodes_to_threshold = 400;
    CHECK(median_episodes(s, 1000) == 400.0);
    s[1].episodes_to_threshold.reset();
    CHECK(median_episodes(s, 1000) == 1000.0);
  }
  SUBCASE("reference prefix") {
    const TaskSpec opening = build_task_spec(TaskFamily::kOpening);
    auto schema = reference_schema_indices(opening);
    CHECK(matches_reference(opening, schema));
    schema[2] = 5;  // after the episode has ended
    CHECK(matches_reference(opening, schema));
    schema[1] = 5;
    CHECK_FALSE(matches_reference(opening, schema));
  }
}

TEST_CASE("svg") {
  std::ostringstream os;
  write_svg(os, "t", {{"a", {0, 100}, {0, 0.5}, {0, 0.4}, {0, 0.6}}, {"b", {0, 50}, {0, 1}, {}, {}}},
            100);
  const std::string svg = os.str();
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find(">a<") != std::string::npos);
}

TEST_CASE("command line runs") {
  const fs::path root = scratch_dir("cli");
  const fs::path cfg_dir = SCHEMARL_CONFIG_DIR;
  const std::string run_args =
      "run '" + (cfg_dir / "opening_schema.cfg").string() + "' --budget 400 -q";

  REQUIRE(cli(root, run_args, root / "run1.log") == 0);
  const fs::path out = root / "opening_schema";
  for (int k = 0; k < 5; ++k) {
    const std::string stem = "opening_schema_seed" + std::to_string(k);
    CHECK(fs::exists(out / (stem + ".csv")));
    CHECK(fs::exists(out / (stem + ".ckpt")));
    CHECK(fs::exists(out / (stem + ".schema")));
  }
  CHECK(fs::exists(out / "opening_schema_aggregate.csv"));
  CHECK(fs::exists(out / "opening_schema_summary.csv"));
  CHECK(fs::exists(out / "opening_schema.svg"));

  SUBCASE("aggregate is recomputable from the per-seed logs") {
    std::vector<std::vector<LogRow>> logs;
    for (int k = 0; k < 5; ++k) {
      std::ifstream is(out / ("opening_schema_seed" + std::to_string(k) + ".csv"));
      logs.push_back(read_log_csv(is));
    }
    std::ostringstream os;
    write_aggregate_csv(os, aggregate_logs(logs));
    CHECK(os.str() == slurp(out / "opening_schema_aggregate.csv"));
  }

  SUBCASE("rerun gives identical bytes at any thread count") {
    std::map<std::string, std::string> first;
    for (const auto& e : fs::directory_iterator(out)) first[e.path().filename()] = slurp(e.path());
    REQUIRE(cli(root, run_args + " --threads 1", root / "run2.log") == 0);
    for (const auto& [name, bytes] : first) {
      // The config copy records the thread override itself.
      if (fs::path(name).extension() == ".cfg") continue;
      CAPTURE(name);
      CHECK(slurp(out / name) == bytes);
    }
  }

  SUBCASE("export and inspect") {
    const fs::path exported = root / "exported.schema";
    REQUIRE(cli(root, "export-schema '" + (out / "opening_schema_seed0.ckpt").string() + "' '" +
                          exported.string() + "'",
                root / "export.log") == 0);
    CHECK(slurp(exported) == slurp(out / "opening_schema_seed0.schema"));
    REQUIRE(cli(root, "inspect-schema -p '" + exported.string() + "'", root / "inspect.log") == 0);
    const std::string text = slurp(root / "inspect.log");
    CHECK(text.rfind("opening\n", 0) == 0);
    CHECK(text.find("t=0") != std::string::npos);
    CHECK(text.find("p=") != std::string::npos);
  }

  SUBCASE("transfer between incompatible families") {
    const fs::path cfg = root / "bad_transfer.cfg";
    std::ofstream(cfg) << "family = rotating\nmode = transfer\nencoding = raster\n"
                       << "schema_path = " << (out / "opening_schema_seed0.schema").string()
                       << "\nseeds = 0\n";
    CHECK(cli(root, "run '" + cfg.string() + "'", root / "transfer.log") == 3);
    CHECK(slurp(root / "transfer.log").find("incompatible") != std::string::npos);
  }

  SUBCASE("bad config exits with the config error code") {
    const fs::path cfg = root / "bad.cfg";
    std::ofstream(cfg) << "family = opening\nmode = schema\nepochs = -2\n";
    CHECK(cli(root, "run '" + cfg.string() + "'", root / "bad.log") == 2);
    CHECK(slurp(root / "bad.log").find("bad.cfg:3:") != std::string::npos);
  }

  SUBCASE("suite under the default relative output root") {
    const std::string cmd = "cd '" + root.string() + "' && env -u " + kOutputRootVar + " '" +
                            SCHEMARL_CLI_PATH +
                            "' reproduce transfer --family opening --seed 0 --scratch-cap 3 -q > "
                            "suite.log 2>&1";
    const int status = std::system(cmd.c_str());
    CHECK((WIFEXITED(status) && WEXITSTATUS(status) == 0));
    CHECK(fs::exists(root / "results" / "transfer" / "opening" / "source.schema"));
    CHECK(fs::exists(root / "results" / "transfer" / "verdict.txt"));
  }

  SUBCASE("corrupt schema file") {
    const fs::path bad = root / "corrupt.schema";
    std::ofstream(bad) << "family=opening\nT=3\n";
    CHECK(cli(root, "inspect-schema '" + bad.string() + "'", root / "corrupt.log") == 4);
  }
}
