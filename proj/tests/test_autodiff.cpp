/*
 * Copyright 2026 The asdfuse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <asd/autodiff.hpp>
#include <asd/gradcheck.hpp>
#include <asd/optim.hpp>
#include <asd/rng.hpp>

#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>

#include "oracles.hpp"

using namespace asd;

namespace {

using Builder = std::function<Var(Tape&, std::map<std::string, Var>&)>;

// Reduce any tensor to a scalar with fixed pseudo-random weights so that
// finite differences see every output coordinate.
Var weighted_sum(Tape& tape, Var v, std::uint64_t seed) {
  Rng rng(seed);
  const Index n = v.value().size();
  Var flat = reshape(v, {n});
  Tensor w({n, 1});
  for (Index i = 0; i < n; ++i) w[i] = rng.uniform(0.25, 1.0);
  return dense(flat, tape.constant(w), tape.constant(Tensor::zeros({1})));
}

double run_builder(ParameterStore& store, GradientMap* grads, const Builder& build) {
  Tape tape;
  std::map<std::string, Var> vars;
  for (auto& [name, t] : store.params()) vars[name] = tape.parameter(t);
  Var loss = build(tape, vars);
  if (grads) {
    tape.backward(loss);
    for (auto& [name, v] : vars) (*grads)[name] = tape.grad(v);
  }
  return loss.value()[0];
}

void check_fd(ParameterStore& store, const Builder& build, double rel_tol = 1e-4) {
  GradCheckConfig cfg;
  cfg.rel_tol = rel_tol;
  auto comp = [&](const ParameterStore& p, GradientMap* g) {
    return run_builder(const_cast<ParameterStore&>(p), g, build);
  };
  auto report = check_gradients(comp, store, cfg);
  INFO(report.summary());
  CHECK(report.pass);
}

}  // namespace

TEST_CASE("dense: zero weights broadcast the bias") {
  Tape tape;
  Rng rng(1);
  Var x = tape.constant(oracle::random_tensor({3, 4}, rng));
  Var w = tape.constant(Tensor::zeros({4, 2}));
  Var b = tape.constant(Tensor::from_values({2}, {0.5, -1.25}));
  Var y = dense(x, w, b);
  for (Index r = 0; r < 3; ++r) {
    CHECK(y.value()[2 * r] == doctest::Approx(0.5));
    CHECK(y.value()[2 * r + 1] == doctest::Approx(-1.25));
  }
}

TEST_CASE("dense: identity weights with zero bias pass the input through") {
  Tape tape;
  Rng rng(2);
  Tensor x = oracle::random_tensor({5, 3}, rng);
  Tensor eye = Tensor::zeros({3, 3});
  for (Index i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
  Var y = dense(tape.constant(x), tape.constant(eye),
                tape.constant(Tensor::zeros({3})));
  for (Index i = 0; i < x.size(); ++i) {
    CHECK(y.value()[i] == doctest::Approx(x[i]).epsilon(1e-14));
  }
}

TEST_CASE("dense: random case matches the double-loop oracle to 1e-12") {
  Rng rng(3);
  Tensor x = oracle::random_tensor({3, 2}, rng);
  Tensor w = oracle::random_tensor({2, 4}, rng);
  Tensor b = oracle::random_tensor({4}, rng);
  Tape tape;
  Var y = dense(tape.constant(x), tape.constant(w), tape.constant(b));
  Tensor expect = oracle::dense(x, w, b);
  for (Index i = 0; i < expect.size(); ++i) {
    CHECK(std::abs(y.value()[i] - expect[i]) < 1e-12);
  }
}

TEST_CASE("conv2d: centered delta kernel is the identity") {
  Rng rng(4);
  Tensor x = oracle::random_tensor({1, 6, 5}, rng);
  Tensor k = Tensor::zeros({1, 1, 3, 3});
  k[4] = 1.0;  // center tap
  Tape tape;
  Var y = conv2d(tape.constant(x), tape.constant(k),
                 tape.constant(Tensor::zeros({1})));
  for (Index i = 0; i < x.size(); ++i) {
    CHECK(y.value()[i] == doctest::Approx(x[i]).epsilon(1e-14));
  }
}

TEST_CASE("conv2d: all-ones kernel on a constant image gives 9c inside") {
  const double c = 0.7;
  Tensor x = Tensor::constant({1, 5, 5}, c);
  Tensor k = Tensor::constant({1, 1, 3, 3}, 1.0);
  Tape tape;
  Var y = conv2d(tape.constant(x), tape.constant(k),
                 tape.constant(Tensor::zeros({1})));
  for (Index i = 1; i < 4; ++i) {
    for (Index j = 1; j < 4; ++j) {
      CHECK(y.value()[i * 5 + j] == doctest::Approx(9.0 * c));
    }
  }
  CHECK(y.value()[0] == doctest::Approx(4.0 * c));  // corner sees a 2x2 patch
}

TEST_CASE("conv2d: random input matches the nested-loop oracle to 1e-12") {
  Rng rng(5);
  Tensor x = oracle::random_tensor({1, 5, 5}, rng);
  Tensor k = oracle::random_tensor({2, 1, 3, 3}, rng);
  Tensor b = oracle::random_tensor({2}, rng);
  Tape tape;
  Var y = conv2d(tape.constant(x), tape.constant(k), tape.constant(b));
  Tensor expect = oracle::conv2d(x, k, b);
  for (Index i = 0; i < expect.size(); ++i) {
    CHECK(std::abs(y.value()[i] - expect[i]) < 1e-12);
  }
}

TEST_CASE("softmax: symmetric pair, temperature flattening, closed form") {
  Tape tape;
  Var even = softmax(tape.constant(Tensor::from_values({2}, {0.0, 0.0})));
  CHECK(even.value()[0] == doctest::Approx(0.5));

  Var flat = softmax(tape.constant(Tensor::from_values({2}, {3.0, -2.0})), 1e6);
  CHECK(std::abs(flat.value()[0] - 0.5) < 1e-5);
  CHECK(std::abs(flat.value()[1] - 0.5) < 1e-5);

  Var pair = softmax(tape.constant(Tensor::from_values({2}, {2.0, 1.0})));
  const double e = std::exp(1.0);
  CHECK(pair.value()[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-9));
  CHECK(pair.value()[1] == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-9));

  CHECK_THROWS(softmax(pair, 0.0));
}

TEST_CASE("softmax: rows sum to one and stay in [0,1] under extreme logits") {
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    Tensor logits({4, 5});
    for (Index i = 0; i < logits.size(); ++i) {
      logits[i] = rng.uniform(-1.0, 1.0) * 1e4;
    }
    Tape tape;
    Var s = softmax(tape.constant(logits));
    auto m = s.value().mat(4, 5);
    for (Index r = 0; r < 4; ++r) {
      CHECK(std::abs(m.row(r).sum() - 1.0) < 1e-6);
      CHECK(m.row(r).minCoeff() >= 0.0);
      CHECK(m.row(r).maxCoeff() <= 1.0);
    }
  }
}

TEST_CASE("cross entropy: confident, uniform, and 0.8 cases") {
  CHECK(binary_cross_entropy(1, 1.0 - 1e-7) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(binary_cross_entropy(1, 0.5) == doctest::Approx(std::log(2.0)));
  CHECK(binary_cross_entropy(0, 0.5) == doctest::Approx(std::log(2.0)));
  // Positive-class convention: -ln(0.8).
  CHECK(binary_cross_entropy(1, 0.8) == doctest::Approx(0.2231435513).epsilon(1e-8));
  // Nonnegative; zero only at the clamp boundary.
  CHECK(binary_cross_entropy(0, 1e-9) > 0.0);
  CHECK(binary_cross_entropy(1, 0.999) > 0.0);
}

TEST_CASE("gru cell: zero parameters halve the hidden state") {
  const Index hd = 4, in = 3;
  Tape tape;
  GruParams p{tape.constant(Tensor::zeros({in, 3 * hd})),
              tape.constant(Tensor::zeros({hd, 3 * hd})),
              tape.constant(Tensor::zeros({3 * hd})),
              tape.constant(Tensor::zeros({3 * hd}))};
  Rng rng(7);
  Var x = tape.constant(oracle::random_tensor({in}, rng));

  Var h_zero = gru_cell(x, tape.constant(Tensor::zeros({hd})), p);
  for (Index i = 0; i < hd; ++i) CHECK(h_zero.value()[i] == doctest::Approx(0.0));

  Tensor h = oracle::random_tensor({hd}, rng);
  Var h_next = gru_cell(x, tape.constant(h), p);
  for (Index i = 0; i < hd; ++i) {
    CHECK(h_next.value()[i] == doctest::Approx(0.5 * h[i]).epsilon(1e-12));
  }
}

TEST_CASE("gru: random two-step sequence matches the scalar oracle to 1e-10") {
  Rng rng(8);
  const Index in = 3, hd = 4;
  oracle::GruWeights w{oracle::random_tensor({in, 3 * hd}, rng),
                       oracle::random_tensor({hd, 3 * hd}, rng),
                       oracle::random_tensor({3 * hd}, rng),
                       oracle::random_tensor({3 * hd}, rng)};
  std::vector<Tensor> xs = {oracle::random_tensor({in}, rng),
                            oracle::random_tensor({in}, rng)};
  Tensor x_rows({2, in});
  x_rows.vec().segment(0, in) = xs[0].vec();
  x_rows.vec().segment(in, in) = xs[1].vec();

  Tape tape;
  GruParams p{tape.constant(w.w_ih), tape.constant(w.w_hh), tape.constant(w.b_ih),
              tape.constant(w.b_hh)};
  Var hs = gru_sequence(tape.constant(x_rows), tape.constant(Tensor::zeros({hd})),
                        p, false);
  auto expect = oracle::gru_sequence(xs, w, false);
  for (std::size_t t = 0; t < 2; ++t) {
    for (Index i = 0; i < hd; ++i) {
      CHECK(std::abs(hs.value()[static_cast<Index>(t) * hd + i] - expect[t][i]) <
            1e-10);
    }
  }
}

TEST_CASE("forward kernels equal naive oracles on 100+ random shapes") {
  Rng rng(9);
  for (int rep = 0; rep < 100; ++rep) {
    Tape tape;
    // dense
    {
      const Index n = 1 + static_cast<Index>(rng.index(4));
      const Index in = 1 + static_cast<Index>(rng.index(6));
      const Index out = 1 + static_cast<Index>(rng.index(6));
      Tensor x = oracle::random_tensor({n, in}, rng);
      Tensor w = oracle::random_tensor({in, out}, rng);
      Tensor b = oracle::random_tensor({out}, rng);
      Var y = dense(tape.constant(x), tape.constant(w), tape.constant(b));
      Tensor e = oracle::dense(x, w, b);
      for (Index i = 0; i < e.size(); ++i) CHECK(std::abs(y.value()[i] - e[i]) < 1e-10);
    }
    // conv2d
    {
      const Index C = 1 + static_cast<Index>(rng.index(3));
      const Index K = 1 + static_cast<Index>(rng.index(3));
      const Index H = 1 + static_cast<Index>(rng.index(6));
      const Index W = 1 + static_cast<Index>(rng.index(6));
      Tensor x = oracle::random_tensor({C, H, W}, rng);
      Tensor k = oracle::random_tensor({K, C, 3, 3}, rng);
      Tensor b = oracle::random_tensor({K}, rng);
      Var y = conv2d(tape.constant(x), tape.constant(k), tape.constant(b));
      Tensor e = oracle::conv2d(x, k, b);
      for (Index i = 0; i < e.size(); ++i) CHECK(std::abs(y.value()[i] - e[i]) < 1e-10);
    }
    // gru over a short random sequence
    {
      const Index in = 1 + static_cast<Index>(rng.index(4));
      const Index hd = 1 + static_cast<Index>(rng.index(4));
      const Index T = 1 + static_cast<Index>(rng.index(4));
      oracle::GruWeights w{oracle::random_tensor({in, 3 * hd}, rng),
                           oracle::random_tensor({hd, 3 * hd}, rng),
                           oracle::random_tensor({3 * hd}, rng),
                           oracle::random_tensor({3 * hd}, rng)};
      std::vector<Tensor> xs;
      Tensor x_rows({T, in});
      for (Index t = 0; t < T; ++t) {
        xs.push_back(oracle::random_tensor({in}, rng));
        x_rows.vec().segment(t * in, in) = xs.back().vec();
      }
      GruParams p{tape.constant(w.w_ih), tape.constant(w.w_hh),
                  tape.constant(w.b_ih), tape.constant(w.b_hh)};
      const bool rev = rng.bernoulli(0.5);
      Var hs = gru_sequence(tape.constant(x_rows),
                            tape.constant(Tensor::zeros({hd})), p, rev);
      auto e = oracle::gru_sequence(xs, w, rev);
      for (Index t = 0; t < T; ++t) {
        for (Index i = 0; i < hd; ++i) {
          CHECK(std::abs(hs.value()[t * hd + i] - e[static_cast<std::size_t>(t)][i]) <
                1e-10);
        }
      }
    }
  }
}

TEST_CASE("finite differences: dense, conv, pooling, activations") {
  Rng rng(10);
  ParameterStore store;
  store.add("x", oracle::random_tensor({3, 4}, rng));
  store.add("w", oracle::random_tensor({4, 2}, rng));
  store.add("b", oracle::random_tensor({2}, rng));
  check_fd(store, [](Tape& t, std::map<std::string, Var>& v) {
    return weighted_sum(t, dense(v["x"], v["w"], v["b"]), 42);
  });

  ParameterStore conv_store;
  conv_store.add("x", oracle::random_tensor({2, 5, 4}, rng));
  conv_store.add("k", oracle::random_tensor({3, 2, 3, 3}, rng));
  conv_store.add("b", oracle::random_tensor({3}, rng));
  check_fd(conv_store, [](Tape& t, std::map<std::string, Var>& v) {
    return weighted_sum(t, conv2d(v["x"], v["k"], v["b"]), 43);
  });

  // Keep inputs away from the relu kink and pooling ties.
  ParameterStore act_store;
  Tensor ax = oracle::random_tensor({2, 6, 6}, rng);
  for (Index i = 0; i < ax.size(); ++i) {
    if (std::abs(ax[i]) < 1e-2) ax[i] += ax[i] < 0 ? -1e-2 : 1e-2;
  }
  act_store.add("x", ax);
  check_fd(act_store, [](Tape& t, std::map<std::string, Var>& v) {
    return weighted_sum(t, global_avg_pool(maxpool2(relu(v["x"]))), 44);
  });

  ParameterStore odd_store;  // odd extents exercise replicate padding
  Tensor ox = oracle::random_tensor({1, 5, 3}, rng);
  odd_store.add("x", ox);
  check_fd(odd_store, [](Tape& t, std::map<std::string, Var>& v) {
    return weighted_sum(t, maxpool2(v["x"]), 45);
  });
}

TEST_CASE("finite differences: softmax, gru, attention stack, fusion ops") {
  Rng rng(11);
  ParameterStore sm;
  sm.add("x", oracle::random_tensor({3, 4}, rng));
  check_fd(sm, [](Tape& t, std::map<std::string, Var>& v) {
    return weighted_sum(t, softmax(v["x"], 1.7), 46);
  });

  ParameterStore gru_store;
  const Index in = 3, hd = 4, T = 5;
  gru_store.add("x", oracle::random_tensor({T, in}, rng));
  gru_store.add("w_ih", oracle::random_tensor({in, 3 * hd}, rng, 0.5));
  gru_store.add("w_hh", oracle::random_tensor({hd, 3 * hd}, rng, 0.5));
  gru_store.add("b_ih", oracle::random_tensor({3 * hd}, rng, 0.5));
  gru_store.add("b_hh", oracle::random_tensor({3 * hd}, rng, 0.5));
  check_fd(gru_store, [hd](Tape& t, std::map<std::string, Var>& v) {
    GruParams p{v["w_ih"], v["w_hh"], v["b_ih"], v["b_hh"]};
    Var h =
        bigru(v["x"], p, p, t.constant(Tensor::zeros({hd})),
              t.constant(Tensor::zeros({hd})));
    return weighted_sum(t, h, 47);
  });

  // Banded causal self-attention diagonal, gradients through H H^T.
  ParameterStore att;
  const Index AT = 6, d = 3;
  att.add("h", oracle::random_tensor({AT, d}, rng));
  Tensor bias({AT, AT});
  for (Index i = 0; i < AT; ++i) {
    for (Index j = 0; j < AT; ++j) {
      bias[i * AT + j] = (j <= i && j >= i - 3) ? 0.0 : -1e9;
    }
  }
  check_fd(att, [bias](Tape& t, std::map<std::string, Var>& v) {
    Var scores = softmax(add(matmul_nt(v["h"], v["h"]), t.constant(bias)));
    return weighted_sum(t, diag(scores), 48);
  });

  ParameterStore fuse;
  fuse.add("h", oracle::random_tensor({4, 5}, rng));
  fuse.add("s", oracle::random_tensor({4}, rng));
  check_fd(fuse, [](Tape& t, std::map<std::string, Var>& v) {
    return weighted_sum(t, scale_rows(v["h"], v["s"]), 49);
  });

  ParameterStore ce;
  Tensor logits = oracle::random_tensor({4, 2}, rng);
  ce.add("logits", logits);
  check_fd(ce, [](Tape& t, std::map<std::string, Var>& v) {
    Var probs = softmax(v["logits"]);
    return cross_entropy_sum(probs, {1, 0, 1, 1}, {1, 1, 0, 1});
  });
}

TEST_CASE("attention diagonal matches the dense-loop oracle") {
  Rng rng(12);
  const Index T = 8, d = 4;
  Tensor h = oracle::random_tensor({T, d}, rng);
  Tensor bias({T, T});
  for (Index i = 0; i < T; ++i) {
    for (Index j = 0; j < T; ++j) {
      bias[i * T + j] = (j <= i && j >= i - 3) ? 0.0 : -1e9;
    }
  }
  Tape tape;
  Var hv = tape.constant(h);
  Var scores = softmax(add(matmul_nt(hv, hv), tape.constant(bias)));
  Tensor expect = oracle::attention_scores(h, 4);
  for (Index i = 0; i < T; ++i) {
    CHECK(std::abs(scores.value()[i * T + i] - expect[i * T + i]) < 1e-12);
  }
}

TEST_CASE("gradient check harness: linear and constant functions") {
  ParameterStore store;
  Rng rng(13);
  store.add("w", oracle::random_tensor({6}, rng));

  // Linear: exact agreement.
  Tensor coef = oracle::random_tensor({6}, rng);
  auto linear_fn = [&coef](const ParameterStore& p, GradientMap* g) {
    const Tensor& w = p.at("w");
    if (g) (*g)["w"] = coef;
    return coef.vec().dot(w.vec());
  };
  auto linear_report = check_gradients(linear_fn, store);
  CHECK(linear_report.pass);
  CHECK(linear_report.max_rel_err < 1e-9);

  // Constant: both sides ~0, absolute tolerance applies.
  auto const_fn = [](const ParameterStore& p, GradientMap* g) {
    if (g) (*g)["w"] = Tensor::zeros(p.at("w").shape());
    return 3.25;
  };
  auto const_report = check_gradients(const_fn, store);
  CHECK(const_report.pass);
  CHECK(const_report.max_abs_diff < 1e-8);

  // A wrong gradient must be flagged.
  auto broken_fn = [&coef](const ParameterStore& p, GradientMap* g) {
    const Tensor& w = p.at("w");
    if (g) {
      (*g)["w"] = coef;
      (*g)["w"][0] += 0.5;
    }
    return coef.vec().dot(w.vec());
  };
  CHECK_FALSE(check_gradients(broken_fn, store).pass);
}

TEST_CASE("adagrad: worked examples and accumulator monotonicity") {
  AdagradConfig cfg;  // lr 0.015, eps 1e-10

  ParameterStore store;
  store.add("p", Tensor::from_values({1}, {1.0}));

  GradientMap zero;
  zero["p"] = Tensor::zeros({1});
  adagrad_step(store, zero, cfg);
  CHECK(store.at("p")[0] == doctest::Approx(1.0));
  CHECK(store.accumulator("p")[0] == doctest::Approx(0.0));

  GradientMap g3;
  g3["p"] = Tensor::from_values({1}, {3.0});
  adagrad_step(store, g3, cfg);
  // First step: accumulator 9, delta = -lr * 3 / (3 + eps) ~ -lr.
  CHECK(store.at("p")[0] == doctest::Approx(1.0 - 0.015).epsilon(1e-9));

  GradientMap g4;
  g4["p"] = Tensor::from_values({1}, {4.0});
  adagrad_step(store, g4, cfg);
  // 9 + 16 = 25; delta = -0.015 * 4 / (5 + eps).
  CHECK(store.at("p")[0] ==
        doctest::Approx(1.0 - 0.015 - 0.015 * 4.0 / 5.0).epsilon(1e-9));

  // Accumulators never decrease across random step sequences.
  Rng rng(14);
  ParameterStore s2;
  s2.add("q", oracle::random_tensor({5}, rng));
  Tensor prev = s2.accumulator("q");
  for (int step = 0; step < 50; ++step) {
    GradientMap g;
    g["q"] = oracle::random_tensor({5}, rng);
    adagrad_step(s2, g, cfg);
    const Tensor& acc = s2.accumulator("q");
    for (Index i = 0; i < acc.size(); ++i) CHECK(acc[i] >= prev[i]);
    prev = acc;
  }

  GradientMap bad;
  bad["q"] = Tensor::zeros({4});
  CHECK_THROWS(adagrad_step(s2, bad, cfg));
}

TEST_CASE("tape rejects shape mismatches and non-scalar backward seeds") {
  Tape tape;
  Rng rng(15);
  Var a = tape.parameter(oracle::random_tensor({3}, rng));
  Var b = tape.parameter(oracle::random_tensor({4}, rng));
  CHECK_THROWS(add(a, b));
  CHECK_THROWS(dense(a, b, a));
  Var m = tape.parameter(oracle::random_tensor({2, 2}, rng));
  CHECK_THROWS(tape.backward(m));
}
