#include "schemarl/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "schemarl/errors.hpp"
#include "schemarl/random.hpp"

namespace schemarl::nn {

NetworkParams::NetworkParams(int input_dim, const std::vector<int>& hidden,
                             const std::vector<std::pair<std::string, int>>& heads,
                             int spread_dim)
    : spread_dim_(spread_dim) {
  if (input_dim <= 0) throw ContractViolation("network input dimension must be positive");
  int out_width = 0;
  for (const auto& [name, width] : heads) {
    if (width <= 0) throw ContractViolation("head '" + name + "' must have positive width");
    heads_.push_back({name, out_width, width});
    out_width += width;
  }
  if (out_width == 0) throw ContractViolation("network needs at least one head");
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out_width);
  std::size_t offset = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    LayerShape l;
    l.in = dims[i];
    l.out = dims[i + 1];
    l.weight_offset = offset;
    offset += static_cast<std::size_t>(l.in) * l.out;
    l.bias_offset = offset;
    offset += l.out;
    layers_.push_back(l);
  }
  spread_offset_ = offset;
  values_.assign(offset + spread_dim, 0.0);
}

const Head& NetworkParams::head(const std::string& name) const {
  for (const auto& h : heads_) {
    if (h.name == name) return h;
  }
  throw ContractViolation("no head named '" + name + "'");
}

bool NetworkParams::has_head(const std::string& name) const {
  return std::any_of(heads_.begin(), heads_.end(), [&](const Head& h) { return h.name == name; });
}

std::span<double> NetworkParams::weights(int i) {
  const auto& l = layers_.at(i);
  return {values_.data() + l.weight_offset, static_cast<std::size_t>(l.in) * l.out};
}
std::span<const double> NetworkParams::weights(int i) const {
  const auto& l = layers_.at(i);
  return {values_.data() + l.weight_offset, static_cast<std::size_t>(l.in) * l.out};
}
std::span<double> NetworkParams::biases(int i) {
  const auto& l = layers_.at(i);
  return {values_.data() + l.bias_offset, static_cast<std::size_t>(l.out)};
}
std::span<const double> NetworkParams::biases(int i) const {
  const auto& l = layers_.at(i);
  return {values_.data() + l.bias_offset, static_cast<std::size_t>(l.out)};
}
std::span<double> NetworkParams::log_spread() {
  return {values_.data() + spread_offset_, static_cast<std::size_t>(spread_dim_)};
}
std::span<const double> NetworkParams::log_spread() const {
  return {values_.data() + spread_offset_, static_cast<std::size_t>(spread_dim_)};
}

void NetworkParams::clamp_log_spread() {
  for (double& v : log_spread()) v = std::clamp(v, kLogSpreadMin, kLogSpreadMax);
}

bool NetworkParams::same_shape(const NetworkParams& other) const {
  if (layers_.size() != other.layers_.size() || spread_dim_ != other.spread_dim_) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].in != other.layers_[i].in || layers_[i].out != other.layers_[i].out) {
      return false;
    }
  }
  return true;
}

void initialize(NetworkParams& params, std::uint64_t seed, double init_log_spread) {
  Rng rng(derive_seed(seed, {0x696e6974ULL}));
  std::fill(params.values().begin(), params.values().end(), 0.0);
  for (int i = 0; i < params.num_layers(); ++i) {
    const bool is_head = i + 1 == params.num_layers();
    const double gain = is_head ? 0.01 : std::sqrt(2.0);
    const double bound = gain * std::sqrt(3.0 / params.layer(i).in);
    for (double& w : params.weights(i)) w = rng.uniform(-bound, bound);
  }
  for (double& v : params.log_spread()) v = init_log_spread;
  params.clamp_log_spread();
  params.touch();
}

std::span<const double> ForwardResult::head(const NetworkParams& params,
                                            const std::string& name) const {
  const Head& h = params.head(name);
  return std::span<const double>(output).subspan(h.offset, h.width);
}

ForwardResult forward(const NetworkParams& params, std::span<const double> input) {
  if (static_cast<int>(input.size()) != params.input_dim()) {
    throw ContractViolation("forward: input length " + std::to_string(input.size()) +
                            " does not match network input " +
                            std::to_string(params.input_dim()));
  }
  ForwardResult r;
  r.cache.version = params.version();
  r.cache.owner = &params;
  auto& acts = r.cache.activations;
  acts.reserve(params.num_layers() + 1);
  acts.emplace_back(input.begin(), input.end());
  std::vector<int> nz;
  for (int li = 0; li < params.num_layers(); ++li) {
    const LayerShape& l = params.layer(li);
    const std::vector<double>& x = acts.back();
    nz.clear();
    for (int i = 0; i < l.in; ++i) {
      if (x[i] != 0.0) nz.push_back(i);
    }
    const auto w = params.weights(li);
    const auto b = params.biases(li);
    std::vector<double> y(b.begin(), b.end());
    for (int j = 0; j < l.out; ++j) {
      const double* row = w.data() + static_cast<std::size_t>(j) * l.in;
      double acc = 0.0;
      for (int i : nz) acc += row[i] * x[i];
      y[j] += acc;
    }
    if (li + 1 < params.num_layers()) {
      for (double& v : y) v = v > 0.0 ? v : 0.0;
    }
    acts.push_back(std::move(y));
  }
  r.output = acts.back();
  return r;
}

void backward(const NetworkParams& params, const Cache& cache,
              std::span<const double> output_grad, std::span<double> grads) {
  if (cache.owner != &params || cache.version != params.version()) {
    throw ContractViolation("backward: cache is stale or from another network");
  }
  if (static_cast<int>(output_grad.size()) != params.output_dim()) {
    throw ContractViolation("backward: output gradient has wrong length");
  }
  if (grads.size() != params.size()) {
    throw ContractViolation("backward: gradient buffer has wrong length");
  }
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  std::vector<double> prev;
  for (int li = params.num_layers() - 1; li >= 0; --li) {
    const LayerShape& l = params.layer(li);
    const std::vector<double>& x = cache.activations[li];
    const auto w = params.weights(li);
    double* gw = grads.data() + l.weight_offset;
    double* gb = grads.data() + l.bias_offset;
    for (int j = 0; j < l.out; ++j) {
      const double d = delta[j];
      gb[j] += d;
      if (d == 0.0) continue;
      double* grow = gw + static_cast<std::size_t>(j) * l.in;
      for (int i = 0; i < l.in; ++i) {
        if (x[i] != 0.0) grow[i] += d * x[i];
      }
    }
    if (li == 0) break;
    prev.assign(l.in, 0.0);
    for (int j = 0; j < l.out; ++j) {
      const double d = delta[j];
      if (d == 0.0) continue;
      const double* row = w.data() + static_cast<std::size_t>(j) * l.in;
      for (int i = 0; i < l.in; ++i) prev[i] += row[i] * d;
    }
    // ReLU mask: x is the post-activation output of the layer below.
    for (int i = 0; i < l.in; ++i) {
      if (x[i] <= 0.0) prev[i] = 0.0;
    }
    delta.swap(prev);
  }
}

std::vector<double> backward(const NetworkParams& params, const Cache& cache,
                             std::span<const double> output_grad) {
  std::vector<double> grads(params.size(), 0.0);
  backward(params, cache, output_grad, grads);
  return grads;
}

AdamState AdamState::for_params(const NetworkParams& params, double learning_rate) {
  AdamState s;
  s.m.assign(params.size(), 0.0);
  s.v.assign(params.size(), 0.0);
  s.learning_rate = learning_rate;
  return s;
}

double clip_global_norm(std::span<double> grads, double threshold) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > threshold) {
    const double scale = threshold / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

void adam_step(NetworkParams& params, std::span<const double> grads, AdamState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ContractViolation("adam_step: shape mismatch");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto& p = params.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
  params.clamp_log_spread();
  params.touch();
}

// --- checkpoints -------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'R', 'L', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t get_le(std::istream& is, int bytes) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), bytes)) throw FormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::string get_str(std::istream& is) {
  const auto n = static_cast<std::size_t>(get_le(is, 4));
  if (n > (1u << 20)) throw FormatError("checkpoint string too long");
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), static_cast<std::streamsize>(n))) {
    throw FormatError("checkpoint truncated");
  }
  return s;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os.write(kMagic, sizeof kMagic);
  put_u32(os, static_cast<std::uint32_t>(ckpt.attributes.size()));
  for (const auto& [k, v] : ckpt.attributes) {
    put_str(os, k);
    put_str(os, v);
  }
  put_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    std::uint64_t count = 1;
    for (auto d : t.shape) count *= d;
    if (count != t.data.size()) throw ContractViolation("tensor '" + name + "' shape mismatch");
    put_str(os, name);
    put_u32(os, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_u64(os, d);
    for (double x : t.data) put_u64(os, std::bit_cast<std::uint64_t>(x));
  }
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  Checkpoint ckpt;
  const auto n_attr = get_le(is, 4);
  for (std::uint64_t i = 0; i < n_attr; ++i) {
    std::string k = get_str(is);
    ckpt.attributes[k] = get_str(is);
  }
  const auto n_tensors = get_le(is, 4);
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = get_str(is);
    Tensor t;
    const auto ndim = get_le(is, 4);
    if (ndim > 8) throw FormatError("tensor '" + name + "' has too many dimensions");
    std::uint64_t count = 1;
    for (std::uint64_t d = 0; d < ndim; ++d) {
      t.shape.push_back(get_le(is, 8));
      count *= t.shape.back();
    }
    if (count > (1ull << 28)) throw FormatError("tensor '" + name + "' too large");
    t.data.resize(count);
    for (auto& x : t.data) x = std::bit_cast<double>(get_le(is, 8));
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_checkpoint(os, ckpt);
  if (!os) throw std::runtime_error("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_checkpoint(is);
}

void append_network(Checkpoint& ckpt, const NetworkParams& params) {
  for (int i = 0; i < params.num_layers(); ++i) {
    const auto& l = params.layer(i);
    const auto w = params.weights(i);
    const auto b = params.biases(i);
    ckpt.tensors.push_back({"layer" + std::to_string(i) + ".weight",
                            Tensor{{static_cast<std::uint64_t>(l.out),
                                    static_cast<std::uint64_t>(l.in)},
                                   {w.begin(), w.end()}}});
    ckpt.tensors.push_back({"layer" + std::to_string(i) + ".bias",
                            Tensor{{static_cast<std::uint64_t>(l.out)}, {b.begin(), b.end()}}});
  }
  const auto s = params.log_spread();
  ckpt.tensors.push_back(
      {"log_spread", Tensor{{static_cast<std::uint64_t>(s.size())}, {s.begin(), s.end()}}});
}

void restore_network(const Checkpoint& ckpt, NetworkParams& params) {
  auto copy = [&](const std::string& name, std::span<double> dst) {
    const Tensor* t = ckpt.find(name);
    if (t == nullptr) throw FormatError("checkpoint lacks tensor '" + name + "'");
    if (t->data.size() != dst.size()) throw FormatError("tensor '" + name + "' has wrong size");
    std::copy(t->data.begin(), t->data.end(), dst.begin());
  };
  for (int i = 0; i < params.num_layers(); ++i) {
    copy("layer" + std::to_string(i) + ".weight", params.weights(i));
    copy("layer" + std::to_string(i) + ".bias", params.biases(i));
  }
  copy("log_spread", params.log_spread());
  params.touch();
}

}  // namespace schemarl::nn
