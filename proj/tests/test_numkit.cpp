// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "flowdub/numkit/checkpoint.hpp"
#include "flowdub/numkit/optim.hpp"
#include "flowdub/numkit/rng.hpp"
#include "flowdub/numkit/schedule.hpp"
#include "flowdub/numkit/tape.hpp"
#include "support/oracles.hpp"

using namespace flowdub;
using numkit::AdamConfig;
using numkit::Array;
using numkit::GradMap;
using numkit::ParamStore;
using numkit::Rng;
using numkit::Schedule;
using numkit::Tape;
namespace fs = std::filesystem;

namespace {

// Builds the same random small network on the tape and on the float64
// reference interpreter: input -> L x (affine + tanh/sigmoid) -> head.
struct DualNet {
  Tape tape;
  testing::RefGraph ref;
  Tape::Ref out_tape{};
  int out_ref = -1;
};

testing::RefGraph::Mat to_mat(const Array& a) {
  testing::RefGraph::Mat m;
  m.rows = a.rows();
  m.cols = a.cols();
  m.v.assign(a.data(), a.data() + a.numel());
  return m;
}

Array random_array(Rng& rng, uint32_t rows, uint32_t cols, double scale) {
  Array a = Array::zeros({rows, cols});
  numkit::fill_uniform(rng, a, -scale, scale);
  return a;
}

void build_random_graph(DualNet& net, uint64_t seed) {
  Rng rng(seed);
  const uint32_t batch = 2 + uint32_t(rng.below(3));
  uint32_t width = 3 + uint32_t(rng.below(4));
  const uint32_t layers = 1 + uint32_t(rng.below(3));

  Array x = random_array(rng, batch, width, 1.0);
  Tape::Ref h = net.tape.input(x);
  int rh = net.ref.input(to_mat(x));

  for (uint32_t l = 0; l < layers; ++l) {
    const uint32_t next = 3 + uint32_t(rng.below(4));
    Array w = random_array(rng, width, next, 1.0 / std::sqrt(double(width)));
    Array b = random_array(rng, 1, next, 0.1);
    Array b1({next}, std::vector<float>(b.data(), b.data() + next));
    const std::string wn = "w" + std::to_string(l);
    const std::string bn = "b" + std::to_string(l);
    Tape::Ref hw = net.tape.affine(h, net.tape.param(wn, w), net.tape.param(bn, b1));
    int rw = net.ref.affine(rh, net.ref.param(wn, to_mat(w)), net.ref.param(bn, to_mat(b1)));
    if (rng.below(2) == 0) {
      h = net.tape.tanh_(hw);
      rh = net.ref.unary(testing::RefGraph::Op::tanh_fn, rw);
    } else {
      h = net.tape.sigmoid_(hw);
      rh = net.ref.unary(testing::RefGraph::Op::sigmoid_fn, rw);
    }
    width = next;
  }

  switch (rng.below(3)) {
    case 0: {
      net.out_tape = net.tape.reduce_mean(h);
      net.out_ref = net.ref.unary(testing::RefGraph::Op::reduce_mean, rh);
      break;
    }
    case 1: {
      Array target = random_array(rng, batch, width, 1.0);
      net.out_tape = net.tape.squared_error(h, net.tape.input(target));
      net.out_ref = net.ref.binary(testing::RefGraph::Op::squared_error, rh,
                                   net.ref.input(to_mat(target)));
      break;
    }
    default: {
      // softmax + log + one-hot style reduction
      Tape::Ref p = net.tape.log_(net.tape.softmax(h));
      int rp = net.ref.unary(testing::RefGraph::Op::log_fn,
                             net.ref.unary(testing::RefGraph::Op::softmax, rh));
      Array mask = Array::zeros({batch, width});
      for (uint32_t i = 0; i < batch; ++i) {
        mask.data()[size_t(i) * width + rng.below(width)] = 1.0f;
      }
      net.out_tape = net.tape.reduce_mean(net.tape.mul(p, net.tape.input(mask)));
      net.out_ref = net.ref.unary(testing::RefGraph::Op::reduce_mean,
                                  net.ref.binary(testing::RefGraph::Op::mul, rp,
                                                 net.ref.input(to_mat(mask))));
    }
  }
}

}  // namespace

TEST_CASE("backward: d/dx of sum(x^2) at x=[1,2] is [2,4]") {
  Tape tape;
  Tape::Ref x = tape.param("x", Array({1, 2}, {1.0f, 2.0f}));
  Tape::Ref sq = tape.mul(x, x);
  Tape::Ref sum = tape.matmul(sq, tape.input(Array({2, 1}, {1.0f, 1.0f})));
  GradMap g = tape.backward(sum);
  CHECK(g.at("x")[0] == doctest::Approx(2.0));
  CHECK(g.at("x")[1] == doctest::Approx(4.0));
}

TEST_CASE("backward: gradient of a constant w.r.t. any parameter is zero") {
  Tape tape;
  tape.param("unused", Array({2, 2}, {1, 2, 3, 4}));
  Tape::Ref c = tape.reduce_mean(tape.input(Array({3}, {5, 5, 5})));
  GradMap g = tape.backward(c);
  for (size_t i = 0; i < 4; ++i) CHECK(g.at("unused")[i] == 0.0f);
}

TEST_CASE("backward: non-scalar output is rejected") {
  Tape tape;
  Tape::Ref x = tape.param("x", Array({2}, {1, 2}));
  CHECK_THROWS_AS((void)tape.backward(x), std::invalid_argument);
}

TEST_CASE("backward: random two-layer net matches central finite differences") {
  DualNet net;
  build_random_graph(net, 0xFD01);
  GradMap ad = net.tape.backward(net.out_tape);
  auto fd = net.ref.finite_difference(net.out_ref, 1e-3);
  CHECK(testing::gradient_rel_error(ad, fd) <= 1e-4);
}

TEST_CASE("backward: relu gradient away from the kink") {
  Tape tape;
  testing::RefGraph ref;
  Array x({2, 3}, {0.5f, -0.7f, 1.2f, -0.3f, 0.9f, -1.1f});
  Array w({3, 2}, {0.4f, -0.2f, 0.3f, 0.6f, -0.5f, 0.1f});
  Array b({2}, {0.2f, -0.1f});
  Tape::Ref h = tape.relu_(tape.affine(tape.input(x), tape.param("w", w), tape.param("b", b)));
  Tape::Ref loss = tape.reduce_mean(h);
  int rh = ref.unary(testing::RefGraph::Op::relu_fn,
                     ref.affine(ref.input(to_mat(x)), ref.param("w", to_mat(w)),
                                ref.param("b", to_mat(b))));
  int rloss = ref.unary(testing::RefGraph::Op::reduce_mean, rh);
  GradMap ad = tape.backward(loss);
  auto fd = ref.finite_difference(rloss, 1e-4);
  CHECK(testing::gradient_rel_error(ad, fd) <= 1e-4);
}

TEST_CASE("backward: rejects non-finite graphs") {
  Tape tape;
  CHECK_THROWS_AS(tape.input(Array({1}, {std::numeric_limits<float>::infinity()})),
                  std::runtime_error);
}

TEST_CASE("clip_global_norm") {
  SUBCASE("norm under the limit is untouched") {
    GradMap g;
    g.emplace("a", Array({2}, {0.06f, 0.08f}));  // norm 0.1
    GradMap before = g;
    numkit::clip_global_norm(g, 0.2);
    CHECK(numkit::bitwise_equal(g.at("a"), before.at("a")));
  }
  SUBCASE("norm 5 clipped to 0.2 scales by 0.04") {
    GradMap g;
    g.emplace("a", Array({2}, {3.0f, 4.0f}));
    numkit::clip_global_norm(g, 0.2);
    CHECK(g.at("a")[0] == doctest::Approx(0.12).epsilon(1e-6));
    CHECK(g.at("a")[1] == doctest::Approx(0.16).epsilon(1e-6));
  }
  SUBCASE("multi-parameter: post-clip global norm equals max_norm") {
    Rng rng(7);
    GradMap g;
    for (int i = 0; i < 4; ++i) {
      Array a = Array::zeros({5, 3});
      numkit::fill_uniform(rng, a, -1.0, 1.0);
      g.emplace("p" + std::to_string(i), std::move(a));
    }
    numkit::clip_global_norm(g, 0.2);
    // Oracle: recompute the norm from scratch after clipping.
    double norm = 0.0;
    for (const auto& [name, a] : g) norm += numkit::sum_squares(a);
    norm = std::sqrt(norm);
    CHECK(norm == doctest::Approx(0.2).epsilon(1e-6));
  }
  SUBCASE("clipping is bitwise idempotent") {
    Rng rng(11);
    GradMap g;
    Array a = Array::zeros({64});
    numkit::fill_uniform(rng, a, -2.0, 2.0);
    g.emplace("a", std::move(a));
    numkit::clip_global_norm(g, 0.2);
    GradMap once = g;
    numkit::clip_global_norm(g, 0.2);
    CHECK(numkit::bitwise_equal(g.at("a"), once.at("a")));
  }
  SUBCASE("non-finite gradients are rejected") {
    GradMap g;
    Array a({1}, {1.0f});
    a[0] = std::numeric_limits<float>::quiet_NaN();
    g.emplace("a", std::move(a));
    CHECK_THROWS_AS(numkit::clip_global_norm(g, 0.2), std::runtime_error);
  }
}

TEST_CASE("adam_step") {
  AdamConfig cfg;  // betas (0.9, 0.95), eps 1e-8, wd 0

  SUBCASE("zero gradient leaves parameters bitwise unchanged") {
    ParamStore store;
    store.insert("p", Array({3}, {1.0f, -2.0f, 0.5f}));
    Array before = store.value("p");
    GradMap g;
    g.emplace("p", Array::zeros({3}));
    numkit::adam_step(store, g, 0.1, cfg);
    CHECK(numkit::bitwise_equal(store.value("p"), before));
    CHECK(store.step() == 1);
  }

  SUBCASE("first step approximates -lr * sign(g)") {
    ParamStore store;
    store.insert("p", Array({1}, {1.0f}));
    GradMap g;
    g.emplace("p", Array({1}, {0.5f}));
    numkit::adam_step(store, g, 0.1, cfg);
    // bias-corrected first step: update = -lr * g / (|g| + eps)
    CHECK(double(store.value("p")[0]) == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
  }

  SUBCASE("three-step scalar trace matches the frozen oracle sequence") {
    // Values computed with an independent float64 scalar Adam:
    // p0=1, grads {0.5, -0.3, 0.2}, lr=0.1, betas=(0.9,0.95), eps=1e-8.
    const double expected[3] = {0.900000002, 0.8807358764051797, 0.8455022411425613};
    ParamStore store;
    store.insert("p", Array({1}, {1.0f}));
    const float grads[3] = {0.5f, -0.3f, 0.2f};
    for (int t = 0; t < 3; ++t) {
      GradMap g;
      g.emplace("p", Array({1}, {grads[t]}));
      numkit::adam_step(store, g, 0.1, cfg);
      CHECK(std::fabs(double(store.value("p")[0]) - expected[t]) <= 1e-7);
    }
    CHECK(store.step() == 3);
  }

  SUBCASE("weight decay is decoupled") {
    AdamConfig wd = cfg;
    wd.weight_decay = 0.1;
    ParamStore store;
    store.insert("p", Array({1}, {2.0f}));
    GradMap g;
    g.emplace("p", Array::zeros({1}));
    numkit::adam_step(store, g, 0.5, wd);
    // zero gradient: update is pure decay p -= lr * wd * p
    CHECK(double(store.value("p")[0]) == doctest::Approx(2.0 - 0.5 * 0.1 * 2.0));
  }

  SUBCASE("shape mismatch is an error") {
    ParamStore store;
    store.insert("p", Array({2}, {1.0f, 2.0f}));
    GradMap g;
    g.emplace("p", Array({3}, {1.0f, 2.0f, 3.0f}));
    CHECK_THROWS_AS(numkit::adam_step(store, g, 0.1, cfg), std::invalid_argument);
  }
}

TEST_CASE("lr_at_step") {
  Schedule s{1e-4, 1e-6, 1000, 2000, 0.2};
  CHECK(numkit::lr_at_step(s, 0) == 0.0);
  CHECK(numkit::lr_at_step(s, 1000) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(numkit::lr_at_step(s, 2000) == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK_THROWS_AS(numkit::lr_at_step(s, 2001), std::out_of_range);

  SUBCASE("continuous at the warmup boundary") {
    const double gap = std::fabs(numkit::lr_at_step(s, 999) - numkit::lr_at_step(s, 1000));
    CHECK(gap <= s.peak_lr / double(s.warmup_steps) + 1e-12);
  }
  SUBCASE("piecewise linear") {
    CHECK(numkit::lr_at_step(s, 500) == doctest::Approx(5e-5));
    CHECK(numkit::lr_at_step(s, 1500) == doctest::Approx((1e-4 + 1e-6) / 2.0));
  }
}

TEST_CASE("training determinism: identical seeds give bitwise-identical parameters") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    ParamStore store;
    Array w = Array::zeros({4, 4});
    numkit::fill_uniform(rng, w, -0.5, 0.5);
    store.insert("w", std::move(w));
    for (int step = 0; step < 20; ++step) {
      Rng step_rng(numkit::mix_seed(seed, "step", uint64_t(step)));
      Tape tape;
      Tape::Ref wref = tape.param("w", store.value("w"));
      Array x = Array::zeros({3, 4});
      numkit::fill_normal(step_rng, x);
      Array target = Array::zeros({3, 4});
      numkit::fill_normal(step_rng, target);
      Tape::Ref loss = tape.squared_error(tape.tanh_(tape.matmul(tape.input(x), wref)),
                                          tape.input(target));
      GradMap g = tape.backward(loss);
      numkit::clip_global_norm(g, 0.2);
      numkit::adam_step(store, g, 1e-3, AdamConfig{});
    }
    return store.value("w");
  };
  CHECK(numkit::bitwise_equal(run(123), run(123)));
}

TEST_CASE("checkpoint roundtrip and byte determinism") {
  const fs::path dir = fs::temp_directory_path() / "flowdub_numkit_test";
  fs::create_directories(dir);
  Rng rng(99);
  ParamStore store;
  Array w = Array::zeros({3, 5});
  numkit::fill_normal(rng, w);
  store.insert("layer/w", std::move(w));
  store.insert("layer/b", Array::zeros({5}));
  GradMap g;
  g.emplace("layer/w", Array::full({3, 5}, 0.25f));
  numkit::adam_step(store, g, 0.01, AdamConfig{});

  std::map<std::string, Array> constants;
  constants.emplace("enc/fixed", Array({2, 2}, {1, 2, 3, 4}));
  numkit::save_checkpoint(dir / "a.fdck", store, constants);
  numkit::save_checkpoint(dir / "b.fdck", store, constants);

  auto read_bytes = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  };
  CHECK(read_bytes(dir / "a.fdck") == read_bytes(dir / "b.fdck"));

  numkit::Checkpoint loaded = numkit::load_checkpoint(dir / "a.fdck");
  CHECK(loaded.store.step() == 1);
  CHECK(numkit::bitwise_equal(loaded.store.value("layer/w"), store.value("layer/w")));
  CHECK(numkit::bitwise_equal(loaded.store.moment_m("layer/w"), store.moment_m("layer/w")));
  CHECK(numkit::bitwise_equal(loaded.store.moment_v("layer/w"), store.moment_v("layer/w")));
  CHECK(loaded.constants.count("enc/fixed") == 1);
  CHECK(numkit::bitwise_equal(loaded.constants.at("enc/fixed"), constants.at("enc/fixed")));
  fs::remove_all(dir);
}

TEST_CASE("rng: deterministic streams and sane normals") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng n(7);
  double mean = 0.0, var = 0.0;
  const int samples = 20000;
  std::vector<double> xs(samples);
  for (auto& x : xs) x = n.normal();
  for (double x : xs) mean += x;
  mean /= samples;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= samples;
  CHECK(std::fabs(mean) < 0.05);
  CHECK(std::fabs(var - 1.0) < 0.05);
}
