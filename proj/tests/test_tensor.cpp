#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/gradcheck.hpp"
#include "ulem/optim.hpp"
#include "ulem/tensor.hpp"

using namespace ulem;
using ulem::testgrad::random_mat;

TEST_CASE("softmax of zeros is uniform and rows sum to one") {
  Graph g;
  int x = g.constant(Mat::Zero(1, 4));
  int y = g.softmax_rows(x);
  for (int i = 0; i < 4; ++i) CHECK(g.value(y)(0, i) == Catch::Approx(0.25));

  Rng rng(3);
  int z = g.softmax_rows(g.constant(random_mat(rng, 5, 7, 3.0)));
  for (long r = 0; r < 5; ++r) {
    double sum = 0.0;
    for (long c = 0; c < 7; ++c) {
      CHECK(g.value(z)(r, c) >= 0.0);
      sum += g.value(z)(r, c);
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("sigmoid and tanh at zero") {
  Graph g;
  int x = g.constant(Mat::Zero(1, 1));
  CHECK(g.value(g.sigmoid(x))(0, 0) == Catch::Approx(0.5));
  CHECK(g.value(g.tanh_(x))(0, 0) == 0.0);
}

TEST_CASE("cross entropy of uniform two-way logits is ln 2") {
  Graph g;
  int logits = g.constant(Mat::Zero(1, 2));
  int loss = g.cross_entropy(logits, {0}, {1.0});
  CHECK(g.value(loss)(0, 0) == Catch::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("shape mismatches report both shapes") {
  Graph g;
  int a = g.constant(Mat::Zero(2, 3));
  int b = g.constant(Mat::Zero(3, 2));
  CHECK_THROWS_WITH(g.add(a, b), Catch::Matchers::ContainsSubstring("[2x3]") &&
                                     Catch::Matchers::ContainsSubstring("[3x2]"));
  CHECK_THROWS_WITH(g.matmul(a, a), Catch::Matchers::ContainsSubstring("[2x3]"));
}

TEST_CASE("gradient of a linear map is the input structure") {
  // loss = sum(W x) with fixed x: dloss/dW[i,j] = x[j].
  Parameter w("w", Mat::Zero(3, 4));
  Rng rng(11);
  Mat x = random_mat(rng, 4, 1);
  Graph g;
  int prod = g.matmul(g.param(w), g.constant(x));          // [3 x 1]
  int loss = g.matmul(g.constant(Mat::Ones(1, 3)), prod);  // sum
  g.backward(loss);
  for (long r = 0; r < 3; ++r)
    for (long c = 0; c < 4; ++c) CHECK(w.grad(r, c) == Catch::Approx(x(c, 0)).epsilon(1e-12));
}

TEST_CASE("parameter not on the loss path gets zero gradient") {
  Parameter used("used", Mat::Ones(1, 1));
  Parameter unused("unused", Mat::Ones(1, 1));
  Graph g;
  g.param(unused);
  int loss = g.scale(g.param(used), 2.0);
  g.backward(loss);
  CHECK(used.grad(0, 0) == 2.0);
  CHECK(unused.grad(0, 0) == 0.0);
}

TEST_CASE("backward twice is an error") {
  Graph g;
  Parameter p("p", Mat::Ones(1, 1));
  int loss = g.scale(g.param(p), 1.0);
  g.backward(loss);
  CHECK_THROWS_AS(g.backward(loss), std::logic_error);
}

TEST_CASE("backward requires a scalar loss") {
  Graph g;
  Parameter p("p", Mat::Ones(2, 2));
  int node = g.param(p);
  CHECK_THROWS_AS(g.backward(node), std::invalid_argument);
}

TEST_CASE("every op passes central finite-difference checks") {
  for (const auto& check : testgrad::all_op_checks()) {
    INFO(check.name);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      double violation = check.run(seed);
      INFO("seed " << seed << " violation " << violation);
      REQUIRE(violation <= 1.0);
    }
  }
}

TEST_CASE("dropout is the identity in evaluation mode") {
  Rng rng(5);
  Mat x = random_mat(rng, 4, 4);
  Graph g(false, 99);
  int a = g.constant(x);
  int d = g.dropout(a, 0.7);
  CHECK(d == a);
  CHECK(g.value(d) == x);
}

TEST_CASE("dropout scales retained activations in training mode") {
  Graph g(true, 7);
  int a = g.constant(Mat::Ones(50, 50));
  int d = g.dropout(a, 0.5);
  double sum = 0.0;
  int zeros = 0;
  for (long r = 0; r < 50; ++r)
    for (long c = 0; c < 50; ++c) {
      double v = g.value(d)(r, c);
      CHECK((v == 0.0 || v == 2.0));
      sum += v;
      zeros += v == 0.0;
    }
  CHECK(zeros > 1000);
  CHECK(zeros < 1500);
  CHECK(sum / 2500.0 == Catch::Approx(1.0).margin(0.1));
}

TEST_CASE("one adam step follows the bias-corrected update") {
  Parameter p("p", Mat::Ones(1, 1));
  p.grad(0, 0) = 1.0;
  adam_step({&p}, 0.1);
  // mhat = vhat = 1 at t=1, so the step is lr / (1 + eps).
  CHECK(p.value(0, 0) == Catch::Approx(0.9).margin(1e-6));
  CHECK(p.step == 1);
  CHECK(p.grad(0, 0) == 0.0);
}

TEST_CASE("zero gradient leaves the value unchanged while moments decay") {
  Parameter p("p", Mat::Ones(1, 1));
  p.grad(0, 0) = 1.0;
  adam_step({&p}, 0.1);
  double after_one = p.value(0, 0);
  double m1 = p.adam_m(0, 0);
  adam_step({&p}, 0.1);  // grad is zero now
  CHECK(p.value(0, 0) < after_one);  // bias-corrected momentum still pushes
  CHECK(p.adam_m(0, 0) == Catch::Approx(0.9 * m1));

  Parameter q("q", Mat::Ones(1, 1));
  adam_step({&q}, 0.1);  // zero grad from the start: no movement
  CHECK(q.value(0, 0) == 1.0);
}

TEST_CASE("adam steps are bit-for-bit reproducible") {
  auto run = [] {
    Rng rng(123);
    Parameter p("p", random_mat(rng, 3, 3));
    for (int i = 0; i < 10; ++i) {
      p.grad = random_mat(rng, 3, 3);
      clip_gradients({&p}, 5.0);
      adam_step({&p}, 0.01);
    }
    return p.value;
  };
  Mat a = run();
  Mat b = run();
  CHECK(a == b);
}

TEST_CASE("parameter values stay float32-representable after updates") {
  Rng rng(9);
  Parameter p("p", random_mat(rng, 2, 2));
  p.grad = random_mat(rng, 2, 2);
  adam_step({&p}, 0.037);
  for (long r = 0; r < 2; ++r)
    for (long c = 0; c < 2; ++c)
      CHECK(p.value(r, c) == static_cast<double>(static_cast<float>(p.value(r, c))));
}

TEST_CASE("gradient clipping rescales to the max norm") {
  Parameter p("p", Mat::Zero(1, 2));
  p.grad(0, 0) = 3.0;
  p.grad(0, 1) = 4.0;  // norm 5
  double norm = clip_gradients({&p}, 1.0);
  CHECK(norm == Catch::Approx(5.0));
  CHECK(std::sqrt(p.grad.squaredNorm()) == Catch::Approx(1.0));

  Parameter q("q", Mat::Zero(1, 1));
  q.grad(0, 0) = 0.5;
  clip_gradients({&q}, 1.0);
  CHECK(q.grad(0, 0) == 0.5);  // under the cap: untouched
}
