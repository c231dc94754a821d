#include "schemarl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "schemarl/random.hpp"

namespace schemarl {
namespace {

// Seed-derivation tags.
constexpr std::uint64_t kTagPolicy = 0x706f6c;
constexpr std::uint64_t kTagEnv = 0x656e76;
constexpr std::uint64_t kTagRound = 0x726e64;
constexpr std::uint64_t kTagShuffle = 0x736866;

void run_worker(const Policy& policy, WorkerState& w, const TrainerConfig& config,
                std::uint64_t round_seed, const EnvConfig& env, std::vector<Trajectory>& done) {
  Rng rng(derive_seed(round_seed, {static_cast<std::uint64_t>(w.id)}));
  for (int s = 0; s < config.steps_per_worker; ++s) {
    if (!w.in_episode) {
      const auto seed = derive_seed(config.seed, {kTagEnv, static_cast<std::uint64_t>(w.id),
                                                  w.episodes_started});
      w.state = reset(policy.task, seed, env);
      w.partial = Trajectory{};
      w.in_episode = true;
      ++w.episodes_started;
    }
    const Observation obs = observe(w.state, policy.encoding, env);
    SampledAction a = sample_action(policy, obs.data, w.state.timestep, rng);
    TrajectoryStep rec;
    rec.t = w.state.timestep;
    rec.joint_index = a.joint_index;
    rec.log_prob = a.log_prob;
    rec.value = a.value;
    rec.raw_args = std::move(a.raw);
    rec.observation = obs.data;
    const StepResult r = step(policy.task, w.state, a.action, env);
    w.partial.steps.push_back(std::move(rec));
    w.state = r.state;
    if (r.done) {
      w.partial.reward = r.reward;
      w.partial.complete = true;
      done.push_back(std::move(w.partial));
      w.partial = Trajectory{};
      w.in_episode = false;
    }
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

struct Sample {
  const TrajectoryStep* step;
  double ret;
  double adv;
};

double batch_value_loss(const Policy& policy, const std::vector<Sample>& samples) {
  const int vo = policy.network.head("value").offset;
  double acc = 0.0;
  for (const auto& s : samples) {
    const auto f = nn::forward(policy.network, s.step->observation);
    const double d = f.output[vo] - s.ret;
    acc += d * d;
  }
  return samples.empty() ? 0.0 : acc / static_cast<double>(samples.size());
}

}  // namespace

void TrainerConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ContractViolation(std::string("trainer config: ") + what);
  };
  require(learning_rate > 0, "learning_rate must be positive");
  require(clip > 0, "clip must be positive");
  require(entropy_coef >= 0, "entropy_coef must be non-negative");
  require(value_coef > 0, "value_coef must be positive");
  require(grad_clip > 0, "grad_clip must be positive");
  require(steps_per_worker > 0, "steps_per_worker must be positive");
  require(minibatches > 0, "minibatches must be positive");
  require(epochs > 0, "epochs must be positive");
  require(workers > 0, "workers must be positive");
  require(threads >= 0, "threads must be non-negative");
  require(alpha > 0 && beta > 0, "alpha and beta must be positive");
  require(gamma > 0 && gamma <= 1, "gamma must lie in (0, 1]");
  require(episode_budget > 0, "episode_budget must be positive");
  require(success_window > 0, "success_window must be positive");
}

std::vector<WorkerState> make_workers(int count) {
  std::vector<WorkerState> w(count);
  for (int i = 0; i < count; ++i) w[i].id = i;
  return w;
}

std::vector<Trajectory> collect_rollouts(const Policy& policy, std::vector<WorkerState>& workers,
                                         const TrainerConfig& config, std::uint64_t round_seed,
                                         const EnvConfig& env) {
  const int n = static_cast<int>(workers.size());
  std::vector<std::vector<Trajectory>> per_worker(n);
  int threads = config.threads;
  if (threads == 0) {
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  threads = std::clamp(threads, 1, std::max(1, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) run_worker(policy, workers[i], config, round_seed, env, per_worker[i]);
  } else {
    // Static striping; each worker's output depends only on its own state.
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int k = 0; k < threads; ++k) {
      pool.emplace_back([&, k] {
        try {
          for (int i = k; i < n; i += threads) {
            run_worker(policy, workers[i], config, round_seed, env, per_worker[i]);
          }
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::vector<Trajectory> out;
  for (auto& v : per_worker) {
    for (auto& t : v) out.push_back(std::move(t));
  }
  return out;
}

Advantages compute_advantages(const std::vector<Trajectory>& batch, double gamma) {
  Advantages a;
  for (const auto& tr : batch) {
    const int len = static_cast<int>(tr.steps.size());
    for (int i = 0; i < len; ++i) {
      const double ret = tr.reward * std::pow(gamma, len - 1 - i);
      a.returns.push_back(ret);
      a.raw.push_back(ret - tr.steps[i].value);
    }
  }
  const double n = static_cast<double>(a.raw.size());
  if (a.raw.empty()) return a;
  // Without any return variation the only differences left are value
  // estimation noise; normalizing would blow that up to unit scale.
  if (std::all_of(a.returns.begin(), a.returns.end(),
                  [&](double r) { return r == a.returns.front(); })) {
    a.normalized.assign(a.raw.size(), 0.0);
    return a;
  }
  const double mean = std::accumulate(a.raw.begin(), a.raw.end(), 0.0) / n;
  double var = 0.0;
  for (double v : a.raw) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double v : a.raw) a.normalized.push_back((v - mean) / (sd + 1e-8));
  return a;
}

UpdateStats ppo_update(Policy& policy, nn::AdamState& adam, const std::vector<Trajectory>& batch,
                       const TrainerConfig& config, std::uint64_t shuffle_seed) {
  const Advantages adv = compute_advantages(batch, config.gamma);
  std::vector<Sample> samples;
  {
    std::size_t k = 0;
    for (const auto& tr : batch) {
      for (const auto& s : tr.steps) {
        samples.push_back({&s, adv.returns[k], adv.normalized[k]});
        ++k;
      }
    }
  }
  UpdateStats stats;
  if (samples.empty()) {
    stats.ok = false;
    stats.diagnostic = "empty batch";
    return stats;
  }

  const std::vector<double> saved_params = policy.network.values();
  const nn::AdamState saved_adam = adam;
  auto rollback = [&](const std::string& why) {
    policy.network.values() = saved_params;
    policy.network.touch();
    adam = saved_adam;
    stats = UpdateStats{};
    stats.ok = false;
    stats.diagnostic = why;
  };

  const int value_off = policy.network.head("value").offset;
  const std::size_t spread_off = policy.network.log_spread_offset();
  Rng rng(shuffle_seed);
  std::vector<std::size_t> order(samples.size());
  std::vector<double> grads(policy.network.size());
  int updates = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.track_value_loss) stats.epoch_value_loss.push_back(batch_value_loss(policy, samples));
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    const std::size_t total = order.size();
    const std::size_t parts = std::min<std::size_t>(config.minibatches, total);
    for (std::size_t mb = 0; mb < parts; ++mb) {
      const std::size_t lo = total * mb / parts, hi = total * (mb + 1) / parts;
      const double m = static_cast<double>(hi - lo);
      std::fill(grads.begin(), grads.end(), 0.0);
      double pg = 0.0, vl = 0.0, ent = 0.0;
      for (std::size_t j = lo; j < hi; ++j) {
        const Sample& s = samples[order[j]];
        const auto f = nn::forward(policy.network, s.step->observation);
        const ActionTerms at = action_terms(policy, f.output, s.step->t, s.step->joint_index,
                                            s.step->raw_args);
        const double ratio = std::exp(at.eval.log_prob - s.step->log_prob);
        if (epoch == 0 && mb == 0) {
          stats.first_ratio_deviation = std::max(stats.first_ratio_deviation, std::fabs(ratio - 1));
        }
        const double s1 = ratio * s.adv;
        const double s2 = std::clamp(ratio, 1 - config.clip, 1 + config.clip) * s.adv;
        pg += -std::min(s1, s2);
        const double dv = at.eval.value - s.ret;
        vl += dv * dv;
        ent += at.eval.entropy;

        const double c_logp = (s1 <= s2 ? -ratio * s.adv : 0.0) / m;
        const double c_ent = -config.entropy_coef / m;
        std::vector<double> g_out(f.output.size());
        for (std::size_t o = 0; o < g_out.size(); ++o) {
          g_out[o] = c_logp * at.dlogp_doutput[o] + c_ent * at.dentropy_doutput[o];
        }
        g_out[value_off] += config.value_coef * 2.0 * dv / m;
        nn::backward(policy.network, f.cache, g_out, grads);
        for (std::size_t d = 0; d < at.dlogp_dspread.size(); ++d) {
          grads[spread_off + d] += c_logp * at.dlogp_dspread[d] + c_ent * at.dentropy_dspread[d];
        }
      }
      pg /= m;
      vl /= m;
      ent /= m;
      const double loss = pg + config.value_coef * vl - config.entropy_coef * ent;
      if (!std::isfinite(loss)) {
        rollback("non-finite loss " + fmt(loss) + " at epoch " + std::to_string(epoch) +
                 ", minibatch " + std::to_string(mb) + "; parameters rolled back");
        return stats;
      }
      const double norm = nn::clip_global_norm(grads, config.grad_clip);
      if (!std::isfinite(norm)) {
        rollback("non-finite gradient norm; parameters rolled back");
        return stats;
      }
      nn::adam_step(policy.network, grads, adam);
      stats.policy_loss += pg;
      stats.value_loss += vl;
      stats.entropy += ent;
      ++updates;
    }
  }
  if (config.track_value_loss) stats.epoch_value_loss.push_back(batch_value_loss(policy, samples));
  if (updates > 0) {
    stats.policy_loss /= updates;
    stats.value_loss /= updates;
    stats.entropy /= updates;
  }
  return stats;
}

std::string_view train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kBaseline: return "baseline";
    case TrainMode::kSchema: return "schema";
    case TrainMode::kOracle: return "oracle";
    case TrainMode::kTransfer: return "transfer";
  }
  return "?";
}

TrainMode parse_train_mode(std::string_view name) {
  for (TrainMode m :
       {TrainMode::kBaseline, TrainMode::kSchema, TrainMode::kOracle, TrainMode::kTransfer}) {
    if (train_mode_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

void SuccessWindow::push(bool success) {
  outcomes_.push_back(success);
  successes_ += success ? 1 : 0;
  if (static_cast<int>(outcomes_.size()) > size_) {
    successes_ -= outcomes_.front() ? 1 : 0;
    outcomes_.pop_front();
  }
}

double SuccessWindow::rate() const {
  return outcomes_.empty() ? 0.0 : static_cast<double>(successes_) / outcomes_.size();
}

TrainResult train(const TrainRequest& request) {
  const TrainerConfig& cfg = request.config;
  cfg.validate();
  const TaskSpec& task = request.task;
  const auto policy_seed = derive_seed(cfg.seed, {kTagPolicy});

  TrainResult result;
  Policy& policy = result.policy;
  switch (request.mode) {
    case TrainMode::kBaseline:
      policy = make_baseline_policy(task, request.encoding, policy_seed, request.policy_options);
      break;
    case TrainMode::kSchema:
      policy = make_schema_policy(task, request.encoding, policy_seed, request.policy_options);
      break;
    case TrainMode::kOracle:
      policy = make_oracle_policy(task, request.encoding, reference_schema_indices(task),
                                  policy_seed, request.policy_options);
      break;
    case TrainMode::kTransfer: {
      if (!request.transfer) throw ContractViolation("transfer mode requires a schema");
      const ImportedSchema checked =
          adopt_schema(request.transfer->logits, task,
                       request.transfer->frozen ? ImportMode::kFrozen : ImportMode::kWarmStart);
      policy = make_schema_policy(task, request.encoding, policy_seed, request.policy_options);
      policy.logits = checked.logits;
      policy.frozen = checked.frozen;
      break;
    }
  }
  const bool learn_schema = policy.mode == PolicyMode::kSchema && !policy.frozen;

  nn::AdamState adam = nn::AdamState::for_params(policy.network, cfg.learning_rate);
  std::vector<WorkerState> workers = make_workers(cfg.workers);
  SuccessWindow window(cfg.success_window);

  for (int round = 0; result.episodes < cfg.episode_budget; ++round) {
    const auto batch =
        collect_rollouts(policy, workers, cfg,
                         derive_seed(cfg.seed, {kTagRound, static_cast<std::uint64_t>(round)}),
                         request.env);
    UpdateStats stats;
    bool informative = false;
    for (const auto& tr : batch) informative |= tr.reward != batch.front().reward;
    if (!batch.empty() && (informative || !cfg.skip_uninformative)) {
      stats = ppo_update(policy, adam, batch, cfg,
                         derive_seed(cfg.seed, {kTagShuffle, static_cast<std::uint64_t>(round)}));
      if (!stats.ok) {
        result.diagnostics.push_back("round " + std::to_string(round) + ": " + stats.diagnostic);
      }
    }
    if (learn_schema) {
      for (const auto& tr : batch) update_logits(policy.logits, tr, cfg.alpha, cfg.beta);
    }

    double returns = 0.0;
    for (const auto& tr : batch) {
      returns += tr.reward;
      if (result.episodes >= cfg.episode_budget) continue;
      ++result.episodes;
      window.push(tr.succeeded());
      if (!result.episodes_to_threshold && window.full() &&
          window.rate() >= cfg.success_threshold) {
        result.episodes_to_threshold = result.episodes;
      }
    }

    LogRow row;
    row.round = round;
    row.episodes = result.episodes;
    row.trailing_success_rate = window.rate();
    row.mean_return = batch.empty() ? 0.0 : returns / static_cast<double>(batch.size());
    row.policy_loss = stats.policy_loss;
    row.value_loss = stats.value_loss;
    row.entropy = stats.entropy;
    switch (policy.mode) {
      case PolicyMode::kBaseline: row.argmax_schema = "-"; break;
      case PolicyMode::kSchema: row.argmax_schema = schema_string(task, schema_argmax(policy.logits)); break;
      case PolicyMode::kOracle: row.argmax_schema = schema_string(task, policy.oracle_schema); break;
    }
    result.log.push_back(std::move(row));

    if (result.episodes_to_threshold && cfg.stop_at_threshold) break;
  }
  return result;
}

void write_log_csv(std::ostream& os, const std::vector<LogRow>& log) {
  os << "round,episodes,trailing_success_rate,mean_return,policy_loss,value_loss,entropy,"
        "argmax_schema\n";
  for (const auto& r : log) {
    os << r.round << ',' << r.episodes << ',' << fmt(r.trailing_success_rate) << ','
       << fmt(r.mean_return) << ',' << fmt(r.policy_loss) << ',' << fmt(r.value_loss) << ','
       << fmt(r.entropy) << ',' << r.argmax_schema << '\n';
  }
}

std::vector<LogRow> read_log_csv(std::istream& is) {
  std::vector<LogRow> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw FormatError("log line " + std::to_string(line_no) + ": expected 8 fields");
    try {
      LogRow r;
      r.round = std::stoi(f[0]);
      r.episodes = std::stoll(f[1]);
      r.trailing_success_rate = std::stod(f[2]);
      r.mean_return = std::stod(f[3]);
      r.policy_loss = std::stod(f[4]);
      r.value_loss = std::stod(f[5]);
      r.entropy = std::stod(f[6]);
      r.argmax_schema = f[7];
      out.push_back(std::move(r));
    } catch (const std::exception&) {
      throw FormatError("log line " + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

nn::Checkpoint make_checkpoint(const TrainResult& result, const TrainRequest& request) {
  nn::Checkpoint ck;
  const Policy& p = result.policy;
  ck.attributes["family"] = std::string(family_name(request.task.family));
  ck.attributes["encoding"] = std::string(encoding_name(request.encoding));
  ck.attributes["mode"] = std::string(train_mode_name(request.mode));
  ck.attributes["seed"] = std::to_string(request.config.seed);
  ck.attributes["episodes"] = std::to_string(result.episodes);
  ck.attributes["episodes_to_threshold"] =
      result.episodes_to_threshold ? std::to_string(*result.episodes_to_threshold) : "none";
  nn::append_network(ck, p.network);
  if (p.mode == PolicyMode::kSchema) {
    nn::Tensor t;
    t.shape = {static_cast<std::uint64_t>(p.logits.horizon),
               static_cast<std::uint64_t>(p.logits.vocab_size())};
    t.data = p.logits.values;
    ck.tensors.emplace_back("schema_logits", std::move(t));
  }
  return ck;
}

SchemaLogits checkpoint_schema(const nn::Checkpoint& ck) {
  const nn::Tensor* t = ck.find("schema_logits");
  const auto fam = ck.attributes.find("family");
  if (!t || fam == ck.attributes.end()) throw FormatError("checkpoint holds no schema logits");
  TaskSpec spec;
  try {
    spec = build_task_spec(parse_family(fam->second));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  SchemaLogits l = init_schema(spec);
  if (t->shape.size() != 2 || t->shape[0] != static_cast<std::uint64_t>(l.horizon) ||
      t->shape[1] != static_cast<std::uint64_t>(l.vocab_size())) {
    throw FormatError("checkpoint: schema_logits shape does not match the task");
  }
  l.values = t->data;
  return l;
}

}  // namespace schemarl
