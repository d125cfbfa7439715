#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "armrl/error.hpp"
#include "armrl/network.hpp"
#include "gradcheck.hpp"

using namespace armrl;
using namespace armrl::nn;

namespace {

constexpr double kTol = 1e-4;

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("armrl_test_nn_" + name);
}

}  // namespace

TEST_CASE("tensor shape checks") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  const Tensor t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(t.reshaped({3, 2}).values() == t.values());
  CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK_THROWS_AS(t.item(), ShapeError);
  CHECK(shape_string({3, 60, 80}) == "[3,60,80]");
}

TEST_CASE("gradient of sum of squares is twice the input") {
  Tape tape;
  const Tensor theta({3}, std::vector<double>{1.5, -2.0, 0.25});
  Tensor g({3});
  const Var x = tape.leaf(theta, &g);
  tape.backward(sum(square(x)));
  CHECK(g.values() == std::vector<double>{3.0, -4.0, 0.5});
  CHECK_THROWS_AS(tape.backward(sum(x)), UsageError);
}

TEST_CASE("dense and conv2d forward examples") {
  Tape tape;
  const Var x = tape.constant(Tensor({1, 2}, std::vector<double>{1, 2}));
  const Var w = tape.constant(Tensor({2, 2}, std::vector<double>{1, 1, 0, -1}));
  const Var b = tape.constant(Tensor({2}, std::vector<double>{0.5, 0}));
  CHECK(dense(x, w, b).value().values() == std::vector<double>{3.5, -2});

  const Var img = tape.constant(Tensor({1, 1, 3, 3}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9}));
  const Var k = tape.constant(Tensor({1, 1, 2, 2}, 1.0));
  const Var kb = tape.constant(Tensor({1}, 0.0));
  const Var out = conv2d(img, k, kb, 1);
  CHECK(out.shape() == Shape{1, 1, 2, 2});
  CHECK(out.value().values() == std::vector<double>{12, 16, 24, 28});
  const Var strided = conv2d(img, k, kb, 2);
  CHECK(strided.shape() == Shape{1, 1, 1, 1});
  CHECK(strided.value().item() == 12);
}

TEST_CASE("softmax rows sum to one and log_softmax is stable") {
  Tape tape;
  const Var logits = tape.constant(Tensor({2, 3}, std::vector<double>{1000, 1001, 999, -3, 0, 2}));
  const Tensor p = softmax(logits).value();
  CHECK(std::abs(p[0] + p[1] + p[2] - 1.0) <= 1e-14);
  CHECK(std::abs(p[3] + p[4] + p[5] - 1.0) <= 1e-14);
  const Tensor lp = log_softmax(logits).value();
  for (double v : lp.values()) CHECK(std::isfinite(v));
  const double lse = 1001 + std::log(std::exp(-1.0) + 1.0 + std::exp(-2.0));
  CHECK(lp[1] == doctest::Approx(1001 - lse).epsilon(1e-12));
}

TEST_CASE("finite differences: elementwise operations") {
  Rng rng(1);
  using V = std::vector<Var>;
  for (int inst = 0; inst < 20; ++inst) {
    const Tensor a = gradcheck::random_tensor({3, 4}, rng);
    const Tensor b = gradcheck::random_tensor({3, 4}, rng);
    const Tensor w = gradcheck::random_tensor({3, 4}, rng);
    auto weighted = [&w](Tape& t, Var v) { return sum(mul(v, t.constant(w))); };
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return weighted(t, add(x[0], x[1])); }, {a, b}) < kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return weighted(t, sub(x[0], x[1])); }, {a, b}) < kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return weighted(t, mul(x[0], x[1])); }, {a, b}) < kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return weighted(t, minimum(x[0], x[1])); }, {a, b}) < kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return weighted(t, scale(x[0], -1.7)); }, {a}) < kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return weighted(t, add_scalar(x[0], 0.3)); }, {a}) < kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return weighted(t, exp(x[0])); }, {a}) < kTol);
    const Tensor pos = gradcheck::random_tensor({3, 4}, rng, 0.2, 2.0);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return weighted(t, log(x[0])); }, {pos}) < kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return weighted(t, square(x[0])); }, {a}) < kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return weighted(t, relu(x[0])); }, {a}) < kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return weighted(t, tanh(x[0])); }, {a}) < kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return weighted(t, clamp(x[0], -0.5, 0.5)); }, {a}) < kTol);
  }
}

TEST_CASE("finite differences: reductions and shape operations") {
  Rng rng(2);
  using V = std::vector<Var>;
  for (int inst = 0; inst < 20; ++inst) {
    const Tensor a = gradcheck::random_tensor({2, 3, 2}, rng);
    const Tensor w3 = gradcheck::random_tensor({2}, rng);
    const Tensor w6 = gradcheck::random_tensor({2, 6}, rng);
    CHECK(gradcheck::check([](Tape&, const V& x) { return mean(square(x[0])); }, {a}) < kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return sum(mul(row_sum(flatten(x[0])), t.constant(w3))); },
                           {a}) < kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& x) { return sum(mul(reshape(x[0], {2, 6}), t.constant(w6))); },
                           {a}) < kTol);
  }
}

TEST_CASE("finite differences: dense and conv2d layers") {
  Rng rng(3);
  using V = std::vector<Var>;
  for (int inst = 0; inst < 20; ++inst) {
    const Tensor x = gradcheck::random_tensor({4, 5}, rng);
    const Tensor w = gradcheck::random_tensor({3, 5}, rng);
    const Tensor b = gradcheck::random_tensor({3}, rng);
    const Tensor r = gradcheck::random_tensor({4, 3}, rng);
    CHECK(gradcheck::check([&](Tape& t, const V& v) { return sum(mul(dense(v[0], v[1], v[2]), t.constant(r))); },
                           {x, w, b}) < kTol);

    const int stride = 1 + inst % 2;
    const Tensor img = gradcheck::random_tensor({2, 2, 7, 6}, rng);
    const Tensor k = gradcheck::random_tensor({3, 2, 3, 3}, rng);
    const Tensor kb = gradcheck::random_tensor({3}, rng);
    Tape probe;
    const Shape out = conv2d(probe.constant(img), probe.constant(k), probe.constant(kb), stride).shape();
    const Tensor ro = gradcheck::random_tensor(out, rng);
    CHECK(gradcheck::check(
              [&](Tape& t, const V& v) { return sum(mul(conv2d(v[0], v[1], v[2], stride), t.constant(ro))); },
              {img, k, kb}) < kTol);
  }
}

TEST_CASE("finite differences: softmax family") {
  Rng rng(4);
  using V = std::vector<Var>;
  for (int inst = 0; inst < 20; ++inst) {
    const Tensor logits = gradcheck::random_tensor({4, 5}, rng, -3, 3);
    const Tensor r = gradcheck::random_tensor({4, 5}, rng);
    std::vector<int> labels(4);
    for (int& l : labels) l = static_cast<int>(uniform_index(rng, 5));
    CHECK(gradcheck::check([&](Tape& t, const V& v) { return sum(mul(softmax(v[0]), t.constant(r))); }, {logits}) <
          kTol);
    CHECK(gradcheck::check([&](Tape& t, const V& v) { return sum(mul(log_softmax(v[0]), t.constant(r))); },
                           {logits}) < kTol);
    CHECK(gradcheck::check([&](Tape&, const V& v) { return sum(gather(v[0], labels)); }, {logits}) < kTol);
    CHECK(gradcheck::check([&](Tape&, const V& v) { return softmax_cross_entropy(v[0], labels); }, {logits}) < kTol);
  }
}

TEST_CASE("softmax_cross_entropy value") {
  Tape tape;
  const Var logits = tape.constant(Tensor({1, 3}, std::vector<double>{0, 0, std::log(2.0)}));
  CHECK(softmax_cross_entropy(logits, {2}).value().item() == doctest::Approx(-std::log(0.5)));
}

TEST_CASE("finite differences: whole networks") {
  Rng rng(5);
  const Architecture conv = Architecture::parse("input 2 9 11 | conv 3 3 2 relu | conv 4 2 1 tanh | dense 6 relu | head 4 | head 1");
  for (int inst = 0; inst < 3; ++inst) {
    Network net = Network::init(conv, 100 + static_cast<std::uint64_t>(inst));
    // Larger head weights make the head gradients well above rounding noise.
    for (auto& p : net.parameters())
      for (double& v : p.value.values()) v += uniform_real(rng, -0.2, 0.2);
    const Tensor x = gradcheck::random_tensor({3, 2, 9, 11}, rng);
    const Tensor r0 = gradcheck::random_tensor({3, 4}, rng);
    const Tensor r1 = gradcheck::random_tensor({3, 1}, rng);
    const double err = gradcheck::check_network(net, [&](Tape& t, const Network& n) {
      const auto heads = n.forward(t, x);
      return add(sum(mul(heads[0], t.constant(r0))), sum(mul(heads[1], t.constant(r1))));
    });
    CHECK(err < kTol);
  }
}

TEST_CASE("architecture text round trip and validation") {
  const Architecture img = Architecture::image_net({10, 1});
  CHECK(img.to_string() == "input 3 60 80 | conv 8 5 2 relu | conv 16 3 2 relu | dense 128 relu | head 10 | head 1");
  CHECK(Architecture::parse(img.to_string()) == img);
  const Architecture feat = Architecture::feature_net(9, {10});
  CHECK(Architecture::parse(feat.to_string()) == feat);
  CHECK_THROWS_AS(Architecture::parse("input 3 4 4 | conv 8 5 2 relu | head 2"), ConfigError);
  CHECK_THROWS_AS(Architecture::parse("input 4 | blah 3 | head 2"), ConfigError);
  CHECK_THROWS_AS(Architecture::parse("input 4 | dense 8 relu"), ConfigError);
}

TEST_CASE("initialisation bounds and determinism") {
  const Architecture arch = Architecture::image_net({10, 1});
  const Network a = Network::init(arch, 7);
  const Network b = Network::init(arch, 7);
  const Network c = Network::init(arch, 8);
  CHECK(a.same_values(b));
  CHECK_FALSE(a.same_values(c));
  for (const auto& p : a.parameters()) {
    const bool bias = p.name.ends_with(".bias");
    const bool head = p.name.starts_with("head");
    double bound = 0.0;
    if (!bias) {
      const Shape& s = p.value.shape();
      const double fan_in = static_cast<double>(shape_size(s)) / s[0];
      bound = head ? 3e-3 : std::sqrt(6.0 / fan_in);
    }
    double max_abs = 0.0;
    for (double v : p.value.values()) max_abs = std::max(max_abs, std::abs(v));
    CHECK(max_abs <= bound);
    if (!bias) CHECK(max_abs > 0.5 * bound);
  }
  CHECK(a.parameter("layer0.weight").value.shape() == Shape{8, 3, 5, 5});
  CHECK(a.parameter("layer2.weight").value.shape() == Shape{128, 16 * 13 * 18});
  CHECK(a.parameter("head1.bias").value.shape() == Shape{1});
}

TEST_CASE("batched and single-sample forward passes agree exactly") {
  Rng rng(6);
  const Network net = Network::init(Architecture::feature_net(9, {10, 1}), 3);
  const Tensor batch = gradcheck::random_tensor({5, 9}, rng);
  const auto all = net.predict(batch);
  for (int i = 0; i < 5; ++i) {
    const Tensor row({1, 9}, std::vector<double>(batch.values().begin() + 9 * i, batch.values().begin() + 9 * (i + 1)));
    const auto one = net.predict(row);
    for (int k = 0; k < 10; ++k) CHECK(one[0][static_cast<std::size_t>(k)] == all[0][static_cast<std::size_t>(10 * i + k)]);
    CHECK(one[1][0] == all[1][static_cast<std::size_t>(i)]);
  }
  CHECK_THROWS_AS(net.predict(Tensor({2, 8})), ShapeError);
}

TEST_CASE("adam first step by hand") {
  Network net = Network::init(Architecture::parse("input 2 | head 1"), 1);
  Parameter& w = net.parameter("head0.weight");
  w.value = Tensor({1, 2}, std::vector<double>{0.5, -0.5});
  AdamConfig cfg;
  cfg.lr = 0.1;
  AdamState st = make_adam(net, cfg);
  net.zero_grad();
  w.grad = Tensor({1, 2}, std::vector<double>{2.0, -0.001});
  adam_step(net, st);
  // m_hat = g, v_hat = g^2 on the first step.
  CHECK(w.value[0] == doctest::Approx(0.5 - 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));
  CHECK(w.value[1] == doctest::Approx(-0.5 + 0.1 * 0.001 / (0.001 + 1e-8)).epsilon(1e-14));
  CHECK(net.parameter("head0.bias").value[0] == 0.0);

  // Second step with the same gradient, from the recurrences directly.
  const double g = 2.0;
  const double m = 0.9 * (0.1 * g) + 0.1 * g;
  const double v = 0.999 * (0.001 * g * g) + 0.001 * g * g;
  const double m_hat = m / (1 - 0.81), v_hat = v / (1 - 0.999 * 0.999);
  const double before = w.value[0];
  w.grad = Tensor({1, 2}, std::vector<double>{2.0, -0.001});
  adam_step(net, st);
  CHECK(w.value[0] == doctest::Approx(before - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8)).epsilon(1e-12));
}

TEST_CASE("clip_grad_norm rescales to the limit") {
  Network net = Network::init(Architecture::parse("input 2 | head 2"), 1);
  net.zero_grad();
  net.parameter("head0.weight").grad = Tensor({2, 2}, std::vector<double>{3, 0, 0, 0});
  net.parameter("head0.bias").grad = Tensor({2}, std::vector<double>{0, 4});
  CHECK(net.clip_grad_norm(1.0) == doctest::Approx(5.0));
  CHECK(net.parameter("head0.weight").grad[0] == doctest::Approx(0.6));
  CHECK(net.parameter("head0.bias").grad[1] == doctest::Approx(0.8));
  CHECK(net.clip_grad_norm(10.0) == doctest::Approx(1.0));
  CHECK(net.parameter("head0.weight").grad[0] == doctest::Approx(0.6));
}

TEST_CASE("copy_from and blend_from") {
  const Architecture arch = Architecture::feature_net(3, {2});
  Network a = Network::init(arch, 1);
  const Network b = Network::init(arch, 2);
  Network mix = a;
  mix.blend_from(b, 0.25);
  const auto& pa = a.parameter("layer0.weight").value;
  const auto& pb = b.parameter("layer0.weight").value;
  const auto& pm = mix.parameter("layer0.weight").value;
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pm[i] == doctest::Approx(0.25 * pb[i] + 0.75 * pa[i]));
  a.copy_from(b);
  CHECK(a.same_values(b));
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const Network net = Network::init(Architecture::image_net({10, 1}), 42);
  const auto path = temp_file("ckpt.bin");
  save_checkpoint(net, path);
  const Network back = load_checkpoint(path);
  CHECK(back.architecture() == net.architecture());
  CHECK(back.same_values(net));

  {
    std::ofstream bad(temp_file("bad.bin"), std::ios::binary);
    bad << "NOTACHECKPOINT";
  }
  CHECK_THROWS_AS(load_checkpoint(temp_file("bad.bin")), FormatError);

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size / 2);
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  CHECK_THROWS_AS(load_checkpoint(temp_file("missing.bin")), Error);
  std::filesystem::remove(path);
  std::filesystem::remove(temp_file("bad.bin"));
}
