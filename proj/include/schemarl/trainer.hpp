#ifndef SCHEMARL_TRAINER_HPP_
#define SCHEMARL_TRAINER_HPP_

// Rollout collection, Monte-Carlo advantages, clipped-surrogate updates of
// the argument/value network and the tabular schema update, tied together
// in a training loop with a CSV log.

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "schemarl/envs.hpp"
#include "schemarl/policy.hpp"
#include "schemarl/schema.hpp"
#include "schemarl/trajectory.hpp"

namespace schemarl {

struct TrainerConfig {
  double learning_rate = 1e-3;
  double clip = 0.2;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double grad_clip = 0.5;
  int steps_per_worker = 10;
  int minibatches = 4;
  int epochs = 4;
  int workers = 8;
  // Physical threads used for collection; 0 picks min(workers, cores).
  // Never affects results.
  int threads = 0;
  double alpha = 0.1;
  double beta = 0.02;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  std::int64_t episode_budget = 50000;
  double success_threshold = 0.9;
  int success_window = 100;
  bool stop_at_threshold = true;
  // Skip the network update when every episode in the batch has the same
  // return: such a batch only carries the entropy bonus, which on its own
  // inflates the argument spread during long reward-free stretches.
  bool skip_uninformative = true;
  // Measure full-batch value loss around every epoch (diagnostics only).
  bool track_value_loss = false;

  void validate() const;
};

struct WorkerState {
  int id = 0;
  std::uint64_t episodes_started = 0;
  bool in_episode = false;
  WorldState state;
  Trajectory partial;
};

std::vector<WorkerState> make_workers(int count);

// Runs steps_per_worker environment steps on every worker against a frozen
// policy. Finished episodes are returned in worker order; unfinished ones stay
// in their worker and continue next round.
std::vector<Trajectory> collect_rollouts(const Policy& policy, std::vector<WorkerState>& workers,
                                         const TrainerConfig& config, std::uint64_t round_seed,
                                         const EnvConfig& env = {});

struct Advantages {
  std::vector<double> returns;     // flattened over batch steps
  std::vector<double> raw;         // return - value
  std::vector<double> normalized;  // zero mean, unit variance
};

Advantages compute_advantages(const std::vector<Trajectory>& batch, double gamma = 1.0);

struct UpdateStats {
  bool ok = true;
  std::string diagnostic;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  // Largest |ratio - 1| seen in the first minibatch of the first epoch.
  double first_ratio_deviation = 0.0;
  // Mean value loss over the batch before each epoch, plus after the last.
  std::vector<double> epoch_value_loss;
};

UpdateStats ppo_update(Policy& policy, nn::AdamState& adam, const std::vector<Trajectory>& batch,
                       const TrainerConfig& config, std::uint64_t shuffle_seed);

enum class TrainMode { kBaseline, kSchema, kOracle, kTransfer };

std::string_view train_mode_name(TrainMode mode);
TrainMode parse_train_mode(std::string_view name);

struct LogRow {
  int round = 0;
  std::int64_t episodes = 0;
  double trailing_success_rate = 0.0;
  double mean_return = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  std::string argmax_schema;
};

struct TrainResult {
  std::vector<LogRow> log;
  std::int64_t episodes = 0;
  // Episode count at which the trailing success rate first reached the
  // threshold over a full window.
  std::optional<std::int64_t> episodes_to_threshold;
  Policy policy;
  std::vector<std::string> diagnostics;
};

struct TrainRequest {
  TaskSpec task;
  Encoding encoding = Encoding::kLowDim;
  TrainMode mode = TrainMode::kSchema;
  TrainerConfig config;
  PolicyOptions policy_options;
  EnvConfig env;
  // Transfer mode only.
  std::optional<ImportedSchema> transfer;
};

TrainResult train(const TrainRequest& request);

// Fixed-window success tracker over the episode outcome sequence.
class SuccessWindow {
 public:
  explicit SuccessWindow(int size) : size_(size) {}
  void push(bool success);
  bool full() const { return static_cast<int>(outcomes_.size()) == size_; }
  double rate() const;

 private:
  int size_;
  int successes_ = 0;
  std::deque<bool> outcomes_;
};

void write_log_csv(std::ostream& os, const std::vector<LogRow>& log);
std::vector<LogRow> read_log_csv(std::istream& is);

// Checkpoint of the trained network plus schema logits and run metadata.
nn::Checkpoint make_checkpoint(const TrainResult& result, const TrainRequest& request);
// Schema logits stored in a checkpoint; throws FormatError if absent.
SchemaLogits checkpoint_schema(const nn::Checkpoint& ckpt);

}  // namespace schemarl

#endif  // SCHEMARL_TRAINER_HPP_
