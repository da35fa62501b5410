// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "autodiff.hpp"
#include "helpers.hpp"

using namespace hydra;
using ad::Tape;
using ad::Tensor;
using testutil::finite_difference_grad;
using testutil::max_rel_err;
using testutil::random_tensor;

TEST_CASE("matmul identity and direct arithmetic") {
  Tensor eye = Tensor::leaf({2, 2}, {1, 0, 0, 1});
  Tensor x = Tensor::leaf({2}, {3.5, -1.25});
  Tensor y = ad::matmul(nullptr, eye, x);
  CHECK(y.shape() == ad::Shape{2});
  CHECK(y.values()[0] == 3.5);
  CHECK(y.values()[1] == -1.25);

  Tensor a = Tensor::leaf({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::leaf({2, 1}, {1, 1});
  Tensor c = ad::matmul(nullptr, a, b);
  CHECK(c.values() == std::vector<double>{3, 7});
}

TEST_CASE("matmul rejects mismatched inner dimensions, naming both shapes") {
  Tensor a = Tensor::leaf({2, 3}, std::vector<double>(6, 1.0));
  Tensor b = Tensor::leaf({2, 2}, std::vector<double>(4, 1.0));
  CHECK_THROWS_WITH_AS(ad::matmul(nullptr, a, b),
                       doctest::Contains("(2x3)"), DimensionError);
  try {
    ad::matmul(nullptr, a, b);
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("(2x2)") != std::string::npos);
  }
}

TEST_CASE("matmul gradient of sum(a*b) matches finite differences") {
  std::mt19937_64 rng(7);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);

  auto loss_value = [&]() { return testutil::value_sum(ad::matmul(nullptr, a, b)); };

  Tape tape;
  Tensor loss = ad::reduce_sum(&tape, ad::matmul(&tape, a, b));
  tape.backward(loss);

  CHECK(max_rel_err(a.grad(), finite_difference_grad(a, loss_value)) < 1e-6);
  CHECK(max_rel_err(b.grad(), finite_difference_grad(b, loss_value)) < 1e-6);
}

TEST_CASE("elementwise trivial values") {
  Tensor zero = Tensor::scalar(0.0);
  CHECK(ad::sigmoid(nullptr, zero).scalar_value() == 0.5);
  CHECK(ad::tanh(nullptr, zero).scalar_value() == 0.0);
  CHECK(ad::relu(nullptr, Tensor::scalar(-3.0)).scalar_value() == 0.0);
  CHECK(ad::relu(nullptr, Tensor::scalar(2.5)).scalar_value() == 2.5);
  CHECK(ad::exp(nullptr, zero).scalar_value() == 1.0);
  CHECK(ad::log1p(nullptr, zero).scalar_value() == 0.0);
}

TEST_CASE("sigmoid derivative at zero is one quarter") {
  Tensor x = Tensor::scalar(0.0, true);
  Tape tape;
  tape.backward(ad::sigmoid(&tape, x));
  CHECK(x.grad()[0] == doctest::Approx(0.25).epsilon(1e-12));

  auto loss_value = [&]() { return ad::sigmoid(nullptr, x).scalar_value(); };
  auto fd = finite_difference_grad(x, loss_value);
  CHECK(testutil::rel_err(x.grad()[0], fd[0]) < 1e-4);
}

TEST_CASE("log1p rejects values at or below -1") {
  Tensor bad = Tensor::leaf({2}, {0.5, -1.0});
  CHECK_THROWS_AS(ad::log1p(nullptr, bad), DataError);
}

TEST_CASE("every primitive gradient matches central finite differences") {
  std::mt19937_64 rng(12345);
  const double tol = 1e-4;

  auto check_unary = [&](auto op, double lo, double hi) {
    for (int rep = 0; rep < 5; ++rep) {
      Tensor x = random_tensor({2, 3}, rng, lo, hi);
      Tape tape;
      Tensor loss = ad::reduce_sum(&tape, op(&tape, x));
      tape.backward(loss);
      auto loss_value = [&]() { return testutil::value_sum(op(nullptr, x)); };
      CHECK(max_rel_err(x.grad(), finite_difference_grad(x, loss_value)) < tol);
    }
  };

  check_unary([](Tape* t, const Tensor& x) { return ad::sigmoid(t, x); }, -2, 2);
  check_unary([](Tape* t, const Tensor& x) { return ad::tanh(t, x); }, -2, 2);
  check_unary([](Tape* t, const Tensor& x) { return ad::exp(t, x); }, -2, 2);
  check_unary([](Tape* t, const Tensor& x) { return ad::log1p(t, x); }, -0.9, 2);
  // keep relu inputs away from the kink where the derivative jumps
  check_unary([](Tape* t, const Tensor& x) { return ad::relu(t, x); }, 0.1, 2);
  check_unary([](Tape* t, const Tensor& x) { return ad::relu(t, x); }, -2, -0.1);
  check_unary([](Tape* t, const Tensor& x) { return ad::scale(t, x, -1.7); }, -2, 2);

  auto check_binary = [&](auto op, ad::Shape sa, ad::Shape sb) {
    for (int rep = 0; rep < 5; ++rep) {
      Tensor a = random_tensor(sa, rng);
      Tensor b = random_tensor(sb, rng);
      Tape tape;
      Tensor loss = ad::reduce_sum(&tape, op(&tape, a, b));
      tape.backward(loss);
      auto loss_value = [&]() { return testutil::value_sum(op(nullptr, a, b)); };
      CHECK(max_rel_err(a.grad(), finite_difference_grad(a, loss_value)) < tol);
      CHECK(max_rel_err(b.grad(), finite_difference_grad(b, loss_value)) < tol);
    }
  };

  auto add_op = [](Tape* t, const Tensor& a, const Tensor& b) { return ad::add(t, a, b); };
  auto sub_op = [](Tape* t, const Tensor& a, const Tensor& b) { return ad::sub(t, a, b); };
  auto mul_op = [](Tape* t, const Tensor& a, const Tensor& b) { return ad::mul(t, a, b); };
  check_binary(add_op, {3, 2}, {3, 2});
  check_binary(sub_op, {3, 2}, {3, 2});
  check_binary(mul_op, {3, 2}, {3, 2});
  // scalar and row broadcasting
  check_binary(add_op, {3, 2}, {});
  check_binary(mul_op, {}, {3, 2});
  check_binary(add_op, {3, 4}, {4});
  check_binary(mul_op, {3, 4}, {1, 4});
  check_binary(sub_op, {4}, {3, 4});

  // structural ops
  for (int rep = 0; rep < 3; ++rep) {
    Tensor m = random_tensor({3, 5}, rng);
    Tape tape;
    Tensor loss = ad::reduce_sum(
        &tape, ad::mul(&tape, ad::slice_cols(&tape, m, 1, 4),
                       ad::slice_cols(&tape, m, 0, 3)));
    tape.backward(loss);
    auto loss_value = [&]() {
      auto s1 = ad::slice_cols(nullptr, m, 1, 4);
      auto s2 = ad::slice_cols(nullptr, m, 0, 3);
      return testutil::value_sum(ad::mul(nullptr, s1, s2));
    };
    CHECK(max_rel_err(m.grad(), finite_difference_grad(m, loss_value)) < tol);
  }

  {
    Tensor m = random_tensor({4, 3}, rng);
    Tape tape;
    Tensor loss = ad::reduce_mean(
        &tape, ad::mul(&tape, ad::transpose(&tape, m), ad::transpose(&tape, m)));
    tape.backward(loss);
    auto loss_value = [&]() {
      auto t = ad::transpose(nullptr, m);
      return testutil::value_sum(ad::mul(nullptr, t, t)) / 12.0;
    };
    CHECK(max_rel_err(m.grad(), finite_difference_grad(m, loss_value)) < tol);
  }
}

TEST_CASE("concat identity, shape arithmetic, and gradient splitting") {
  std::mt19937_64 rng(99);
  Tensor x = random_tensor({4, 8}, rng);
  Tensor lone = ad::concat(nullptr, {x}, 0);
  CHECK(lone.values() == x.values());
  CHECK(lone.shape() == x.shape());

  Tensor y = random_tensor({4, 2}, rng);
  Tensor joined = ad::concat(nullptr, {x, y}, 1);
  CHECK(joined.shape() == ad::Shape{4, 10});

  // gradient of each part equals the matching slice of the whole's gradient
  Tensor wide = random_tensor({4, 10}, rng, -1, 1, false);
  {
    Tape tape;
    Tensor loss = ad::reduce_sum(&tape, ad::mul(&tape, ad::concat(&tape, {x, y}, 1), wide));
    tape.backward(loss);
  }
  auto loss_from_parts = [&]() {
    auto j = ad::concat(nullptr, {x, y}, 1);
    double s = 0;
    const auto& w = wide.values();
    for (size_t i = 0; i < w.size(); ++i) s += j.values()[i] * w[i];
    return s;
  };
  CHECK(max_rel_err(x.grad(), finite_difference_grad(x, loss_from_parts)) < 1e-6);
  CHECK(max_rel_err(y.grad(), finite_difference_grad(y, loss_from_parts)) < 1e-6);

  Tensor badrows = random_tensor({3, 8}, rng);
  CHECK_THROWS_AS(ad::concat(nullptr, {x, badrows}, 1), DimensionError);
}

TEST_CASE("backward contract cases") {
  std::mt19937_64 rng(5);
  Tensor w = random_tensor({3}, rng);

  SUBCASE("constant loss leaves parameters untouched") {
    Tape tape;
    Tensor c = Tensor::scalar(4.2);
    // w participates in the tape but the loss does not depend on it
    ad::reduce_sum(&tape, ad::mul(&tape, w, w));
    tape.backward(c);
    CHECK_FALSE(w.has_grad());
  }

  SUBCASE("loss = sum(w) gives all-ones gradient") {
    Tape tape;
    tape.backward(ad::reduce_sum(&tape, w));
    CHECK(w.grad() == std::vector<double>{1, 1, 1});
  }

  SUBCASE("two backward calls without reset double the gradient") {
    Tape tape;
    Tensor loss = ad::reduce_sum(&tape, ad::mul(&tape, w, w));
    tape.backward(loss);
    auto first = w.grad();
    tape.backward(loss);
    for (size_t i = 0; i < first.size(); ++i) {
      CHECK(w.grad()[i] == doctest::Approx(2 * first[i]).epsilon(1e-12));
    }
    w.zero_grad();
    tape.backward(loss);
    CHECK(w.grad() == first);
  }

  SUBCASE("non-scalar loss is rejected") {
    Tape tape;
    Tensor v = ad::mul(&tape, w, w);
    CHECK_THROWS_AS(tape.backward(v), Error);
  }

  SUBCASE("gradients accumulate across multiple uses of one tensor") {
    Tape tape;
    Tensor doubled = ad::add(&tape, w, w);
    tape.backward(ad::reduce_sum(&tape, doubled));
    CHECK(w.grad() == std::vector<double>{2, 2, 2});
  }
}

TEST_CASE("forward evaluation is deterministic") {
  std::mt19937_64 rng(31);
  Tensor a = random_tensor({5, 5}, rng);
  Tensor b = random_tensor({5, 5}, rng);
  auto run = [&]() {
    return ad::tanh(nullptr, ad::matmul(nullptr, a, b)).values();
  };
  CHECK(run() == run());
}

TEST_CASE("grad of a non-requires-grad leaf is never allocated") {
  Tensor a = Tensor::leaf({2}, {1, 2}, false);
  Tensor w = Tensor::leaf({2}, {3, 4}, true);
  Tape tape;
  tape.backward(ad::reduce_sum(&tape, ad::mul(&tape, a, w)));
  CHECK_FALSE(a.has_grad());
  CHECK(w.grad() == std::vector<double>{1, 2});
}
