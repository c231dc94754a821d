#ifndef SCHEMARL_NN_HPP_
#define SCHEMARL_NN_HPP_

// Fixed-architecture dense network: ReLU trunk, linear multi-head output and
// a free per-dimension log-spread vector. Parameters live in one flat buffer
// so gradients, Adam moments and checkpoints share a single layout.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace schemarl::nn {

inline constexpr double kLogSpreadMin = -5.0;
inline constexpr double kLogSpreadMax = 1.0;

struct Head {
  std::string name;
  int offset = 0;
  int width = 0;
};

struct LayerShape {
  int in = 0;
  int out = 0;
  std::size_t weight_offset = 0;  // out x in, row-major
  std::size_t bias_offset = 0;
};

class NetworkParams {
 public:
  NetworkParams() = default;
  // hidden: widths of the ReLU layers; heads: (name, width) pairs forming the
  // linear output layer; spread_dim: length of log_spread.
  NetworkParams(int input_dim, const std::vector<int>& hidden,
                const std::vector<std::pair<std::string, int>>& heads, int spread_dim);

  int input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  const LayerShape& layer(int i) const { return layers_.at(i); }
  const std::vector<LayerShape>& layers() const { return layers_; }
  const std::vector<Head>& heads() const { return heads_; }
  const Head& head(const std::string& name) const;
  bool has_head(const std::string& name) const;

  std::span<double> weights(int layer);
  std::span<const double> weights(int layer) const;
  std::span<double> biases(int layer);
  std::span<const double> biases(int layer) const;
  std::span<double> log_spread();
  std::span<const double> log_spread() const;
  std::size_t log_spread_offset() const { return spread_offset_; }
  int spread_dim() const { return spread_dim_; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  // Bumped by every mutation through the optimizer; caches record it.
  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

  void clamp_log_spread();
  bool same_shape(const NetworkParams& other) const;

 private:
  std::vector<LayerShape> layers_;
  std::vector<Head> heads_;
  std::vector<double> values_;
  std::size_t spread_offset_ = 0;
  int spread_dim_ = 0;
  std::uint64_t version_ = 0;
};

// Scaled-uniform init: variance gain^2 / fan_in with gain sqrt(2) on hidden
// layers and 0.01 on the output layer; zero biases; log_spread filled with
// init_log_spread.
void initialize(NetworkParams& params, std::uint64_t seed, double init_log_spread);

struct Cache {
  std::uint64_t version = 0;
  const NetworkParams* owner = nullptr;
  // activations[0] is the input; activations[i] the post-ReLU output of
  // layer i-1; the last entry is the linear output.
  std::vector<std::vector<double>> activations;
};

struct ForwardResult {
  std::vector<double> output;
  Cache cache;

  std::span<const double> head(const NetworkParams& params, const std::string& name) const;
};

ForwardResult forward(const NetworkParams& params, std::span<const double> input);

// Adds d(loss)/d(params) into grads given d(loss)/d(output). log_spread
// entries of grads are left untouched (they do not depend on the input).
void backward(const NetworkParams& params, const Cache& cache,
              std::span<const double> output_grad, std::span<double> grads);

// Convenience: fresh gradient buffer.
std::vector<double> backward(const NetworkParams& params, const Cache& cache,
                             std::span<const double> output_grad);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const NetworkParams& params, double learning_rate);
};

// Rescales grads in place when their L2 norm exceeds threshold; returns the
// pre-clip norm.
double clip_global_norm(std::span<double> grads, double threshold);

// Bias-corrected Adam update (gradient descent direction); clamps log_spread.
void adam_step(NetworkParams& params, std::span<const double> grads, AdamState& state);

// Named-tensor checkpoint: see docs/checkpoint_format.md.
struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<double> data;
};

struct Checkpoint {
  std::map<std::string, std::string> attributes;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Network tensors are named layer<i>.weight, layer<i>.bias and log_spread.
void append_network(Checkpoint& ckpt, const NetworkParams& params);
// Copies the network tensors of ckpt into params (shapes must match).
void restore_network(const Checkpoint& ckpt, NetworkParams& params);

}  // namespace schemarl::nn

#endif  // SCHEMARL_NN_HPP_
