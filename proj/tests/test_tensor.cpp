// Copyright 2026 The srnlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "srnlab/errors.hpp"
#include "srnlab/tensor.hpp"

using srnlab::Matrix;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(r, c);
  for (auto& v : m.values()) v = dist(rng);
  return m;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

// Entry-wise triple loop, summed in j-order.
Matrix triple_loop(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.same_shape(b));
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

}  // namespace

TEST_CASE("matmul by identity returns the operand") {
  const Matrix eye = Matrix::from_rows({{1, 0}, {0, 1}});
  const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(srnlab::matmul(eye, m) == m);
}

TEST_CASE("matmul of a row and a column is a dot product") {
  const Matrix r = Matrix::from_rows({{1, 2}});
  const Matrix c = Matrix::from_rows({{3}, {4}});
  const Matrix p = srnlab::matmul(r, c);
  REQUIRE(p.rows() == 1);
  REQUIRE(p.cols() == 1);
  CHECK(p(0, 0) == 11.0);
}

TEST_CASE("matmul variants agree with the triple-loop oracle") {
  std::mt19937_64 rng(3);
  const Matrix a = random_matrix(5, 7, rng);
  const Matrix b = random_matrix(7, 3, rng);
  const Matrix ref = triple_loop(a, b);
  CHECK(max_abs_diff(srnlab::matmul(a, b), ref) < 1e-12);
  CHECK(max_abs_diff(srnlab::matmul_tn(transpose(a), b), ref) < 1e-12);
  CHECK(max_abs_diff(srnlab::matmul_nt(a, transpose(b)), ref) < 1e-12);

  Matrix acc(7, 3, 1.0);
  const Matrix c = random_matrix(5, 3, rng);
  srnlab::accumulate_matmul_tn(a, c, acc);
  const Matrix expect = triple_loop(transpose(a), c);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    CHECK(acc.values()[i] == doctest::Approx(expect.values()[i] + 1.0).epsilon(1e-12));
  }
}

TEST_CASE("matmul rejects mismatched shapes and names them") {
  const Matrix a(2, 3);
  const Matrix b(4, 2);
  try {
    (void)srnlab::matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const srnlab::DimensionError& e) {
    const std::string what = e.what();
    CHECK(what.find("2x3") != std::string::npos);
    CHECK(what.find("4x2") != std::string::npos);
  }
}

TEST_CASE("row vector broadcast and column sums") {
  Matrix m = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  srnlab::add_row_vector(m, Matrix::from_rows({{10, 20}}));
  CHECK(m == Matrix::from_rows({{11, 22}, {13, 24}, {15, 26}}));
  Matrix sums(1, 2);
  srnlab::accumulate_column_sums(m, sums);
  CHECK(sums == Matrix::from_rows({{39, 72}}));
}

TEST_CASE("softmax closed forms") {
  const Matrix p = srnlab::softmax_rows(Matrix::from_rows({{0, 0}, {std::log(2.0), 0}}));
  CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p(1, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(p(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("softmax does not overflow on large logits") {
  const double c = 5e5;
  const Matrix p = srnlab::softmax_rows(Matrix::from_rows({{c, c + 1000}}));
  CHECK(srnlab::all_finite(p));
  CHECK(p(0, 0) < 1e-300);
  CHECK(p(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix x = random_matrix(4, 9, rng);
    for (auto& v : x.values()) v *= 10.0;
    Matrix shifted = x;
    std::uniform_real_distribution<double> shift(-50.0, 50.0);
    const double c = shift(rng);
    for (auto& v : shifted.values()) v += c;
    const Matrix p = srnlab::softmax_rows(x);
    const Matrix q = srnlab::softmax_rows(shifted);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double s = 0.0;
      for (double v : p.row(r)) s += v;
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
    CHECK(max_abs_diff(p, q) < 1e-12);
  }
}

TEST_CASE("adam leaves values unchanged for a zero gradient") {
  srnlab::Parameter p("w", Matrix::from_rows({{0.5, -1.5}}));
  srnlab::AdamConfig cfg;
  cfg.step_count = 1;
  srnlab::adam_step(p, cfg);
  CHECK(p.value == Matrix::from_rows({{0.5, -1.5}}));
}

TEST_CASE("first adam step moves by about the learning rate against the gradient sign") {
  srnlab::Parameter p("w", Matrix::from_rows({{1.0, 1.0}}));
  p.grad = Matrix::from_rows({{3.0, -0.02}});
  srnlab::AdamConfig cfg;
  cfg.step_count = 1;
  srnlab::adam_step(p, cfg);
  CHECK(p.value(0, 0) == doctest::Approx(1.0 - 0.001).epsilon(1e-9));
  CHECK(p.value(0, 1) == doctest::Approx(1.0 + 0.001).epsilon(1e-6));
}

TEST_CASE("adam matches a scalar oracle over successive steps") {
  const double lr = 0.01, b1 = 0.8, b2 = 0.95, eps = 1e-6;
  const std::vector<double> grads = {0.7, 0.7, 0.7, -0.3, 2.5};
  srnlab::Parameter p("w", Matrix(1, 1, 0.25));
  srnlab::AdamConfig cfg{lr, b1, b2, eps, 0};
  double x = 0.25, m = 0.0, v = 0.0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, static_cast<double>(t)));
    const double vhat = v / (1 - std::pow(b2, static_cast<double>(t)));
    x -= lr * mhat / (std::sqrt(vhat) + eps);

    p.grad(0, 0) = g;
    cfg.step_count = t;
    srnlab::adam_step(p, cfg);
    CHECK(std::abs(p.value(0, 0) - x) < 1e-12);
  }
}

TEST_CASE("adam rejects non-finite gradients and a zero step count") {
  srnlab::Parameter p("gru.w_z", Matrix(1, 2));
  srnlab::AdamConfig cfg;
  CHECK_THROWS_AS(srnlab::adam_step(p, cfg), srnlab::ConfigError);
  cfg.step_count = 1;
  p.grad(0, 1) = std::nan("");
  try {
    srnlab::adam_step(p, cfg);
    FAIL("expected NumericError");
  } catch (const srnlab::NumericError& e) {
    CHECK(std::string(e.what()).find("gru.w_z") != std::string::npos);
  }
}

TEST_CASE("gradient check is exact for a quadratic") {
  std::mt19937_64 rng(5);
  srnlab::Parameter w("w", random_matrix(6, 5, rng));
  auto loss = [&w] {
    double s = 0.0;
    for (double v : w.value.values()) s += 0.5 * v * v;
    return s;
  };
  w.grad = w.value;
  srnlab::Parameter* list[] = {&w};
  const auto result = srnlab::finite_difference_check(loss, list);
  CHECK(result.coordinates_checked == 30);
  CHECK(result.max_relative_error < 1e-8);
}

TEST_CASE("gradient check flags a wrong gradient") {
  srnlab::Parameter w("w", Matrix::from_rows({{1.0, 2.0}}));
  auto loss = [&w] { return w.value(0, 0) * w.value(0, 0) + 3.0 * w.value(0, 1); };
  w.grad = Matrix::from_rows({{2.0, 2.0}});
  srnlab::Parameter* list[] = {&w};
  const auto result = srnlab::finite_difference_check(loss, list);
  CHECK(result.max_relative_error > 0.3);
  CHECK(result.worst_parameter == "w");
  CHECK(result.worst_index == 1);
}
