#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "helpers.hpp"
#include "schemarl/nn.hpp"
#include "schemarl/random.hpp"

using namespace schemarl;
using namespace schemarl::nn;

namespace {

NetworkParams small_net() {
  return NetworkParams(4, {6, 5}, {{"a", 3}, {"b", 2}}, 3);
}

std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.uniform(-1.0, 1.0);
  return v;
}

// Straightforward forward pass written against the documented layout.
std::vector<double> naive_forward(const NetworkParams& p, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (int l = 0; l < p.num_layers(); ++l) {
    const LayerShape& s = p.layer(l);
    std::vector<double> z(s.out);
    for (int o = 0; o < s.out; ++o) {
      double acc = p.values()[s.bias_offset + o];
      for (int i = 0; i < s.in; ++i) acc += p.values()[s.weight_offset + o * s.in + i] * a[i];
      z[o] = acc;
    }
    if (l + 1 < p.num_layers()) {
      for (double& v : z) v = std::max(0.0, v);
    }
    a = z;
  }
  return a;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

TEST_CASE("layout") {
  const NetworkParams p = small_net();
  CHECK(p.input_dim() == 4);
  CHECK(p.output_dim() == 5);
  CHECK(p.num_layers() == 3);
  CHECK(p.size() == (4 * 6 + 6) + (6 * 5 + 5) + (5 * 5 + 5) + 3);
  CHECK(p.head("a").offset == 0);
  CHECK(p.head("b").offset == 3);
  CHECK(p.head("b").width == 2);
  CHECK_FALSE(p.has_head("c"));
  CHECK(p.log_spread().size() == 3);
  CHECK(p.log_spread_offset() + 3 == p.size());
}

TEST_CASE("forward") {
  SUBCASE("zero weights give zero output") {
    NetworkParams p = small_net();
    const auto out = forward(p, std::vector<double>{1, 2, 3, 4}).output;
    CHECK(out == std::vector<double>(5, 0.0));
  }
  SUBCASE("identity layer acts as ReLU") {
    NetworkParams p(3, {3}, {{"out", 3}}, 0);
    for (int i = 0; i < 3; ++i) {
      p.weights(0)[i * 3 + i] = 1.0;
      p.weights(1)[i * 3 + i] = 1.0;
    }
    const auto out = forward(p, std::vector<double>{-1.5, 0.0, 2.5}).output;
    CHECK(out == std::vector<double>{0.0, 0.0, 2.5});
  }
  SUBCASE("matches a naive implementation") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      NetworkParams p = small_net();
      initialize(p, seed, -1.0);
      Rng rng(seed + 100);
      // Output layer init is tiny; perturb so the comparison is meaningful.
      for (double& v : p.values()) v += 0.3 * rng.uniform(-1.0, 1.0);
      const auto x = random_vector(4, rng);
      const auto got = forward(p, x);
      const auto want = naive_forward(p, x);
      for (int i = 0; i < 5; ++i) CHECK(got.output[i] == doctest::Approx(want[i]).epsilon(1e-12));
      const auto b = got.head(p, "b");
      CHECK(b.size() == 2);
      CHECK(b[0] == got.output[3]);
    }
  }
  SUBCASE("wrong input size") {
    const NetworkParams p = small_net();
    CHECK_THROWS(forward(p, std::vector<double>{1, 2}));
  }
}

TEST_CASE("initialize") {
  NetworkParams a = small_net(), b = small_net(), c = small_net();
  initialize(a, 7, -2.0);
  initialize(b, 7, -2.0);
  initialize(c, 8, -2.0);
  CHECK(a.values() == b.values());
  CHECK(a.values() != c.values());
  for (double v : a.log_spread()) CHECK(v == -2.0);
  for (int l = 0; l < a.num_layers(); ++l) {
    for (double v : a.biases(l)) CHECK(v == 0.0);
  }
  // Uniform with variance gain^2 / fan_in has bound gain * sqrt(3 / fan_in).
  NetworkParams big(64, {64}, {{"o", 64}}, 0);
  initialize(big, 1, 0.0);
  const double hidden_bound = std::sqrt(2.0) * std::sqrt(3.0 / 64);
  const double out_bound = 0.01 * std::sqrt(3.0 / 64);
  double ss = 0;
  for (double v : big.weights(0)) {
    CHECK(std::fabs(v) <= hidden_bound);
    ss += v * v;
  }
  CHECK(ss / big.weights(0).size() == doctest::Approx(2.0 / 64).epsilon(0.1));
  for (double v : big.weights(1)) CHECK(std::fabs(v) <= out_bound);
}

TEST_CASE("backward matches finite differences") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    NetworkParams p = small_net();
    initialize(p, seed, 0.0);
    Rng rng(seed * 31 + 5);
    for (double& v : p.values()) v += 0.4 * rng.uniform(-1.0, 1.0);
    const auto x = random_vector(4, rng, 2.0);
    const auto g = random_vector(5, rng);
    const auto fr = forward(p, x);
    const auto grads = backward(p, fr.cache, g);
    REQUIRE(grads.size() == p.size());
    const double h = 1e-6;
    for (std::size_t i = 0; i < p.log_spread_offset(); ++i) {
      NetworkParams q = p;
      q.values()[i] += h;
      const double up = dot(forward(q, x).output, g);
      q.values()[i] -= 2 * h;
      const double down = dot(forward(q, x).output, g);
      const double fd = (up - down) / (2 * h);
      CAPTURE(seed);
      CAPTURE(i);
      CHECK(grads[i] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
    for (std::size_t i = p.log_spread_offset(); i < p.size(); ++i) CHECK(grads[i] == 0.0);
  }
}

TEST_CASE("backward accumulates") {
  NetworkParams p = small_net();
  initialize(p, 3, 0.0);
  Rng rng(4);
  for (double& v : p.values()) v += 0.3 * rng.uniform(-1.0, 1.0);
  const auto x1 = random_vector(4, rng), x2 = random_vector(4, rng);
  const auto g1 = random_vector(5, rng), g2 = random_vector(5, rng);
  const auto f1 = forward(p, x1), f2 = forward(p, x2);
  std::vector<double> acc(p.size(), 0.0);
  backward(p, f1.cache, g1, acc);
  backward(p, f2.cache, g2, acc);
  const auto a = backward(p, f1.cache, g1);
  const auto b = backward(p, f2.cache, g2);
  for (std::size_t i = 0; i < acc.size(); ++i) CHECK(acc[i] == doctest::Approx(a[i] + b[i]));
  const auto zero = backward(p, f1.cache, std::vector<double>(5, 0.0));
  CHECK(std::all_of(zero.begin(), zero.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("stale cache is rejected") {
  NetworkParams p = small_net();
  initialize(p, 0, 0.0);
  const auto fr = forward(p, std::vector<double>{1, 1, 1, 1});
  p.touch();
  CHECK_THROWS(backward(p, fr.cache, std::vector<double>(5, 1.0)));
}

TEST_CASE("adam") {
  SUBCASE("first step moves every parameter by about lr") {
    NetworkParams p = small_net();
    initialize(p, 2, -1.0);
    const auto before = p.values();
    Rng rng(9);
    auto g = random_vector(p.size(), rng);
    for (double& v : g) {
      if (std::fabs(v) < 0.05) v = 0.05;
    }
    AdamState st = AdamState::for_params(p, 0.01);
    adam_step(p, g, st);
    CHECK(st.step == 1);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double delta = p.values()[i] - before[i];
      CHECK(std::fabs(delta) == doctest::Approx(0.01).epsilon(1e-4));
      CHECK((delta < 0) == (g[i] > 0));
    }
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    NetworkParams p = small_net();
    initialize(p, 2, -1.0);
    const auto before = p.values();
    AdamState st = AdamState::for_params(p, 0.01);
    adam_step(p, std::vector<double>(p.size(), 0.0), st);
    CHECK(p.values() == before);
  }
  SUBCASE("log spread is clamped") {
    NetworkParams p = small_net();
    initialize(p, 2, kLogSpreadMin);
    AdamState st = AdamState::for_params(p, 0.5);
    std::vector<double> g(p.size(), 0.0);
    for (std::size_t i = p.log_spread_offset(); i < p.size(); ++i) g[i] = 1.0;
    adam_step(p, g, st);
    for (double v : p.log_spread()) CHECK(v == kLogSpreadMin);
  }
  SUBCASE("minimizes a quadratic") {
    NetworkParams p(1, {}, {{"o", 1}}, 0);
    p.values() = {3.0, -2.0};
    AdamState st = AdamState::for_params(p, 0.05);
    for (int i = 0; i < 2000; ++i) {
      std::vector<double> g = {2 * (p.values()[0] - 1.0), 2 * (p.values()[1] + 0.5)};
      adam_step(p, g, st);
    }
    CHECK(p.values()[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(p.values()[1] == doctest::Approx(-0.5).epsilon(1e-3));
  }
}

TEST_CASE("clip_global_norm") {
  std::vector<double> g = {3.0, 4.0};
  CHECK(clip_global_norm(g, 10.0) == doctest::Approx(5.0));
  CHECK(g == std::vector<double>{3.0, 4.0});
  CHECK(clip_global_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(g[0] == doctest::Approx(0.6));
  CHECK(g[1] == doctest::Approx(0.8));
  std::vector<double> z = {0.0, 0.0};
  CHECK(clip_global_norm(z, 1.0) == 0.0);
  CHECK(z == std::vector<double>{0.0, 0.0});
}

TEST_CASE("checkpoint round trip") {
  NetworkParams p = small_net();
  initialize(p, 5, -1.5);
  Checkpoint ck;
  ck.attributes["family"] = "opening";
  ck.attributes["note"] = "two words";
  append_network(ck, p);
  ck.tensors.push_back({"extra", Tensor{{2, 2}, {1.0, -0.0, 1e-300, 0.1}}});
  REQUIRE(ck.find("layer0.weight") != nullptr);
  CHECK(ck.find("layer0.weight")->shape == std::vector<std::uint64_t>{6, 4});
  CHECK(ck.find("log_spread")->data.size() == 3);

  std::stringstream ss;
  write_checkpoint(ss, ck);
  const Checkpoint back = read_checkpoint(ss);
  CHECK(back.attributes == ck.attributes);
  REQUIRE(back.tensors.size() == ck.tensors.size());
  for (std::size_t i = 0; i < ck.tensors.size(); ++i) {
    CHECK(back.tensors[i].first == ck.tensors[i].first);
    CHECK(back.tensors[i].second.shape == ck.tensors[i].second.shape);
    CHECK(back.tensors[i].second.data == ck.tensors[i].second.data);
  }
  NetworkParams q = small_net();
  restore_network(back, q);
  CHECK(q.values() == p.values());

  const auto path = schemarl::testing::scratch_dir("nn_ckpt") / "net.ckpt";
  save_checkpoint(path.string(), ck);
  CHECK(load_checkpoint(path.string()).tensors.size() == ck.tensors.size());

  NetworkParams wrong(4, {7}, {{"a", 5}}, 3);
  CHECK_THROWS(restore_network(back, wrong));
  std::stringstream junk("not a checkpoint");
  CHECK_THROWS(read_checkpoint(junk));
}
