/*
 * Copyright 2026 The TabCF Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <vector>

#include "doctest.h"
#include "grad_cases.h"
#include "tabcf/autodiff.h"
#include "tabcf/errors.h"
#include "tabcf/optim.h"
#include "test_support.h"

namespace tabcf {
namespace {

using testing::CheckGradients;
using testing::RandomTensor;

TEST_CASE("primitive gradients match central differences") {
  for (const auto& pc : testing::PrimitiveCases()) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      Rng rng(seed);
      const auto check = CheckGradients(pc.inputs(rng), pc.build);
      INFO(pc.name, " seed ", seed, " worst ", check.worst);
      CHECK(check.checked > 0);
      CHECK(check.max_rel_error <= 1e-4);
    }
  }
}

TEST_CASE("composed pipelines match central differences") {
  const auto enc = testing::EncoderKlPipeline(7);
  INFO("encoder worst ", enc.worst);
  CHECK(enc.checked > 100);
  CHECK(enc.max_rel_error <= 1e-4);
  const auto dec = testing::DecoderHingePipeline(7);
  INFO("decoder worst ", dec.worst);
  CHECK(dec.checked > 100);
  CHECK(dec.max_rel_error <= 1e-4);
}

TEST_CASE("hand-computed gradient of a small expression") {
  // f = sum(a * b + a) at a = [1, 2], b = [3, -1]: df/da = b + 1, df/db = a.
  Tensor a = Tensor::Vector({1.0, 2.0});
  Tensor b = Tensor::Vector({3.0, -1.0});
  a.requires_grad = true;
  b.requires_grad = true;
  ad::Tape tape;
  ad::Var va = tape.Param(a);
  ad::Var vb = tape.Param(b);
  ad::Var f = ad::Sum(va * vb + va);
  CHECK(f.value().item() == doctest::Approx(3.0 - 2.0 + 3.0));
  tape.Backward(f);
  REQUIRE(a.grad.has_value());
  CHECK((*a.grad)[0] == 4.0);
  CHECK((*a.grad)[1] == 0.0);
  CHECK((*b.grad)[0] == 1.0);
  CHECK((*b.grad)[1] == 2.0);
}

TEST_CASE("param without requires_grad receives nothing") {
  Tensor a = Tensor::Vector({1.0, 2.0});
  ad::Tape tape;
  ad::Var va = tape.Param(a);
  tape.Backward(ad::Sum(va * va));
  CHECK_FALSE(a.grad.has_value());
}

TEST_CASE("a tape runs backward once") {
  ad::Tape tape;
  ad::Var x = tape.Constant(Tensor::Vector({1.0, 2.0}));
  ad::Var loss = ad::Sum(x * x);
  tape.Backward(loss);
  CHECK(tape.consumed());
  CHECK_THROWS_AS(tape.Backward(loss), ContractError);
}

TEST_CASE("backward needs a single-element target") {
  ad::Tape tape;
  ad::Var x = tape.Constant(Tensor::Vector({1.0, 2.0}));
  CHECK_THROWS(tape.Backward(x));
}

TEST_CASE("broadcasting outside the supported rules is a shape error") {
  ad::Tape tape;
  ad::Var a = tape.Constant(Tensor({2, 3}, 1.0));
  ad::Var b = tape.Constant(Tensor({2, 4}, 1.0));
  ad::Var c = tape.Constant(Tensor({2}, 1.0));
  CHECK_THROWS_AS(a + b, ShapeError);
  CHECK_THROWS_AS(a * c, ShapeError);
  CHECK_THROWS_AS(ad::MatMul(a, a), ShapeError);
}

TEST_CASE("log rejects non-positive input") {
  ad::Tape tape;
  ad::Var x = tape.Constant(Tensor::Vector({1.0, 0.0}));
  CHECK_THROWS_AS(ad::Log(x), DomainError);
}

TEST_CASE("softmax rows lie on the simplex, even for extreme logits") {
  Rng rng(11);
  for (double scale : {1.0, 50.0, 700.0}) {
    Tensor t = RandomTensor({4, 5}, rng, -scale, scale);
    ad::Tape tape;
    const Tensor& p = ad::SoftmaxLastDim(tape.Constant(t)).value();
    for (std::size_t r = 0; r < 4; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < 5; ++c) {
        CHECK(p.at(r, c) >= 0.0);
        CHECK(std::isfinite(p.at(r, c)));
        sum += p.at(r, c);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("kinked primitives use zero subgradients at the kink") {
  Tensor x = Tensor::Vector({0.0, 0.0});
  ad::Tape tape;
  ad::Var v = tape.Watch(x);
  tape.Backward(ad::Sum(ad::Abs(v)) + ad::L2Norm(v));
  for (double g : tape.grad(v)) CHECK(g == 0.0);
}

TEST_CASE("straight-through forwards hard and routes the gradient to soft") {
  Tensor soft = Tensor::Matrix(1, 3, {0.2, 0.5, 0.3});
  Tensor hard = Tensor::Matrix(1, 3, {0.0, 1.0, 0.0});
  ad::Tape tape;
  ad::Var s = tape.Watch(soft);
  ad::Var out = ad::StraightThrough(s, hard);
  CHECK(out.value().data() == hard.data());
  ad::Var w = tape.Constant(Tensor::Matrix(1, 3, {1.0, -2.0, 3.0}));
  tape.Backward(ad::Sum(out * w));
  const auto g = tape.grad(s);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == -2.0);
  CHECK(g[2] == 3.0);
  ad::Tape t2;
  CHECK_THROWS_AS(ad::StraightThrough(t2.Constant(soft), Tensor({1, 2})), ShapeError);
}

TEST_CASE("sgd step moves against the gradient") {
  Tensor p = Tensor::Vector({1.0, 2.0});
  p.grad = std::vector<double>{0.5, -1.0};
  Tensor* params[] = {&p};
  SgdStep(params, 0.1);
  CHECK(p[0] == doctest::Approx(0.95));
  CHECK(p[1] == doctest::Approx(2.1));
  CHECK_FALSE(p.grad.has_value());
  CHECK_THROWS_AS(SgdStep(params, 0.1), ContractError);
}

TEST_CASE("sgd with zero learning rate leaves parameters unchanged") {
  Tensor p = Tensor::Vector({1.0, -3.0});
  p.grad = std::vector<double>{4.0, 4.0};
  Tensor* params[] = {&p};
  SgdStep(params, 0.0);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -3.0);
}

TEST_CASE("sgd on a quadratic converges to its minimum") {
  // f(p) = sum((p - c)^2), minimum at c.
  Tensor p = Tensor::Vector({5.0, -4.0});
  p.requires_grad = true;
  const Tensor c = Tensor::Vector({1.0, 2.0});
  for (int step = 0; step < 200; ++step) {
    ad::Tape tape;
    ad::Var d = tape.Param(p) - tape.ConstantRef(c);
    tape.Backward(ad::Sum(d * d));
    Tensor* params[] = {&p};
    SgdStep(params, 0.1);
  }
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p[1] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("gradient clipping caps the global norm") {
  Tensor a = Tensor::Vector({3.0});
  Tensor b = Tensor::Vector({4.0});
  a.grad = std::vector<double>{3.0};
  b.grad = std::vector<double>{4.0};
  Tensor* params[] = {&a, &b};
  CHECK(GradNorm(params) == doctest::Approx(5.0));
  CHECK(ClipGradNorm(params, 1.0) == doctest::Approx(5.0));
  CHECK(GradNorm(params) == doctest::Approx(1.0));
  CHECK((*a.grad)[0] == doctest::Approx(0.6));
  CHECK(ClipGradNorm(params, 10.0) == doctest::Approx(1.0));
  CHECK(GradNorm(params) == doctest::Approx(1.0));
}

}  // namespace
}  // namespace tabcf
