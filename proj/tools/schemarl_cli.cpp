// schemarl command line: run experiments from config files, reproduce the
// comparison suites, and move schema logits between tasks.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "schemarl/experiment.hpp"

namespace {

using namespace schemarl;

// Exit codes.
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kTransferError = 3;
constexpr int kFormatError = 4;
constexpr int kRuntimeError = 5;

struct Overrides {
  std::vector<std::uint64_t> seeds;
  std::optional<int> workers;
  std::optional<std::int64_t> budget;
  std::optional<int> threads;
};

void apply(const Overrides& o, ExperimentConfig& c) {
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.workers) c.trainer.workers = *o.workers;
  if (o.budget) c.trainer.episode_budget = *o.budget;
  if (o.threads) c.trainer.threads = *o.threads;
}

int cmd_run(const std::string& path, const Overrides& o, bool quiet) {
  ExperimentConfig c = load_config(path);
  apply(o, c);
  c.trainer.validate();
  const auto res = run_experiment(c, quiet ? nullptr : &std::cout);
  std::cout << "wrote " << res.directory.string() << "\n";
  return kOk;
}

int cmd_reproduce(const std::string& suite, const Overrides& o,
                  const std::vector<std::string>& families, double scratch_cap, bool quiet) {
  SuiteOptions s;
  if (!o.seeds.empty()) s.seeds = o.seeds;
  if (o.workers) s.workers = *o.workers;
  if (o.threads) s.threads = *o.threads;
  if (o.budget) s.budget = *o.budget;
  s.scratch_cap_factor = scratch_cap;
  if (!families.empty()) {
    s.families.clear();
    for (const auto& f : families) s.families.push_back(parse_family(f));
  }
  std::ostream* progress = quiet ? nullptr : &std::cout;
  if (suite == "modes") {
    const auto rows = compare_modes(s, progress);
    write_mode_table(std::cout, rows, static_cast<double>(s.budget));
  } else {
    const auto rows = compare_transfer(s, progress);
    write_transfer_table(std::cout, rows);
  }
  return kOk;
}

int cmd_export(const std::string& checkpoint, const std::string& out) {
  const SchemaLogits logits = checkpoint_schema(nn::load_checkpoint(checkpoint));
  export_schema(logits, out);
  std::cout << schema_string(logits.vocab, schema_argmax(logits)) << "\n";
  return kOk;
}

int cmd_inspect(const std::string& path, bool probabilities) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path);
  const SchemaLogits logits = read_schema(is);
  const auto best = schema_argmax(logits);
  std::cout << family_name(logits.family) << "\n";
  for (int t = 0; t < logits.horizon; ++t) {
    const auto& [l, r] = logits.vocab[best[t]];
    std::cout << "t=" << t << "  " << skill_name(l) << " + " << skill_name(r);
    if (probabilities) std::cout << "  p=" << softmax(logits.row(t))[best[t]];
    std::cout << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skill-schema reinforcement learning experiments"};
  app.require_subcommand(1);
  app.footer("Outputs go under $" + std::string(kOutputRootVar) + " (default ./results).");

  Overrides o;
  bool quiet = false;
  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seeds, "Seed(s) to run instead of the configured list");
    sub->add_option("--workers", o.workers, "Parallel environment workers")->check(CLI::PositiveNumber);
    sub->add_option("--budget", o.budget, "Episode budget per run")->check(CLI::PositiveNumber);
    sub->add_option("--threads", o.threads, "Collection threads (0 = min(workers, cores)); never changes results")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("-q,--quiet", quiet, "Only print the final summary");
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "Train every seed of a config file");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  add_overrides(run);

  std::string suite;
  std::vector<std::string> families;
  double scratch_cap = 0.0;
  auto* reproduce = app.add_subcommand("reproduce", "Run a comparison suite and print its verdict table");
  reproduce->add_option("suite", suite, "modes (baseline/schema/oracle on low-dim) or transfer (raster)")
      ->required()
      ->check(CLI::IsMember({"modes", "transfer"}));
  reproduce->add_option("--family", families, "Restrict to these families");
  reproduce->add_option("--scratch-cap", scratch_cap,
                        "transfer: stop scratch runs after this multiple of the transfer episodes")
      ->check(CLI::NonNegativeNumber);
  add_overrides(reproduce);

  std::string checkpoint, out;
  auto* exp = app.add_subcommand("export-schema", "Extract schema logits from a checkpoint");
  exp->add_option("checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  exp->add_option("out", out)->required();

  std::string schema_file;
  bool probabilities = false;
  auto* inspect = app.add_subcommand("inspect-schema", "Print the argmax skill sequence of a schema file");
  inspect->add_option("file", schema_file)->required()->check(CLI::ExistingFile);
  inspect->add_flag("-p,--probabilities", probabilities, "Also print the argmax probability");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, o, quiet);
    if (*reproduce) return cmd_reproduce(suite, o, families, scratch_cap, quiet);
    if (*exp) return cmd_export(checkpoint, out);
    if (*inspect) return cmd_inspect(schema_file, probabilities);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ContractViolation& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const TransferIncompatible& e) {
    std::cerr << e.what() << "\n";
    return kTransferError;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kFormatError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
