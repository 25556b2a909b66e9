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
#include <numeric>
#include <random>
#include <vector>

#include "srnlab/errors.hpp"
#include "srnlab/losses.hpp"
#include "srnlab/tensor.hpp"

using namespace srnlab;

namespace {

std::vector<double> softmax(const std::vector<double>& z) {
  Matrix m(1, z.size());
  std::copy(z.begin(), z.end(), m.values().begin());
  const Matrix p = softmax_rows(m);
  return {p.values().begin(), p.values().end()};
}

// Central differences of f at z, one coordinate at a time.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> z, double eps = 1e-6) {
  std::vector<double> g(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double keep = z[i];
    z[i] = keep + eps;
    const double up = f(z);
    z[i] = keep - eps;
    const double down = f(z);
    z[i] = keep;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-4});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

std::vector<double> random_logits(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.5);
  std::vector<double> z(n);
  for (auto& v : z) v = d(rng);
  return z;
}

}  // namespace

TEST_CASE("onehot vectors") {
  CHECK(onehot(3, 5) == std::vector<double>{0, 0, 0, 1, 0});
  for (ItemIndex i = 1; i < 6; ++i) {
    const auto a = onehot(i, 6);
    CHECK(std::accumulate(a.begin(), a.end(), 0.0) == 1.0);
    for (ItemIndex j = 1; j < 6; ++j) {
      const auto b = onehot(j, 6);
      CHECK(std::inner_product(a.begin(), a.end(), b.begin(), 0.0) == (i == j ? 1.0 : 0.0));
    }
  }
  CHECK_THROWS_AS(onehot(0, 5), IndexError);
  CHECK_THROWS_AS(onehot(5, 5), IndexError);
}

TEST_CASE("cross-entropy closed forms") {
  const std::vector<double> certain = {0, 0, 1, 0};
  CHECK(cross_entropy_loss(certain, 2).loss == 0.0);
  const std::vector<double> uniform(7, 1.0 / 7.0);
  CHECK(cross_entropy_loss(uniform, 4).loss == doctest::Approx(std::log(7.0)).epsilon(1e-14));
  const std::vector<double> zero = {0.5, 0.5, 0.0};
  const auto clamped = cross_entropy_loss(zero, 2);
  CHECK(clamped.clamped);
  CHECK(std::isfinite(clamped.loss));
}

TEST_CASE("fused cross-entropy gradient matches finite differences") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto z = random_logits(9, rng);
    const ItemIndex label = 1 + trial % 8;
    const auto analytic = cross_entropy_loss(softmax(z), label).gradient;
    const auto numeric = numeric_gradient(
        [&](const std::vector<double>& x) { return cross_entropy_loss(softmax(x), label).loss; }, z);
    CHECK(max_rel(analytic, numeric) < 1e-6);
  }
}

TEST_CASE("distillation with lambda zero is plain cross-entropy bit for bit") {
  std::mt19937_64 rng(8);
  const auto z = random_logits(12, rng);
  const auto teacher = softmax(random_logits(12, rng));
  const auto ce = cross_entropy_loss(softmax(z), 5);
  DistillConfig cfg{0.0, 2.5};
  const auto d = distillation_loss(z, 5, teacher, cfg);
  CHECK(d.loss == ce.loss);
  CHECK(d.gradient == ce.gradient);
}

TEST_CASE("distillation with lambda one and a onehot teacher is cross-entropy") {
  std::mt19937_64 rng(9);
  const auto z = random_logits(12, rng);
  const auto teacher = onehot(7, 12);
  const auto ce = cross_entropy_loss(softmax(z), 7);
  const auto d = distillation_loss(z, 7, teacher, DistillConfig{1.0, 1.0});
  CHECK(std::abs(d.loss - ce.loss) < 1e-12);
  for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(d.gradient[i] - ce.gradient[i]) < 1e-12);
}

TEST_CASE("distillation matches a scalar oracle on three classes") {
  const std::vector<double> z = {0.3, -1.2, 2.0};
  const std::vector<double> q = {0.1, 0.6, 0.3};
  const double t = 2.0;
  const ItemIndex label = 1;
  double e[3], et[3], s = 0, st = 0;
  for (int i = 0; i < 3; ++i) {
    e[i] = std::exp(z[i]);
    et[i] = std::exp(z[i] / t);
    s += e[i];
    st += et[i];
  }
  const double hard = -std::log(e[label] / s);
  double soft = 0.0;
  for (int i = 0; i < 3; ++i) soft -= q[i] * std::log(et[i] / st);
  const auto d = distillation_loss(z, label, q, DistillConfig{0.2, t});
  CHECK(std::abs(d.loss - (0.8 * hard + 0.2 * soft)) < 1e-12);
}

TEST_CASE("distillation gradient matches finite differences") {
  std::mt19937_64 rng(10);
  for (double lambda : {0.0, 0.2, 1.0}) {
    for (double t : {1.0, 3.0}) {
      const auto z = random_logits(10, rng);
      const auto teacher = tempered_softmax(random_logits(10, rng), t);
      const DistillConfig cfg{lambda, t};
      const auto analytic = distillation_loss(z, 4, teacher, cfg).gradient;
      const auto numeric = numeric_gradient(
          [&](const std::vector<double>& x) { return distillation_loss(x, 4, teacher, cfg).loss; },
          z);
      CHECK(max_rel(analytic, numeric) < 1e-6);
    }
  }
}

TEST_CASE("temperature extremes") {
  const std::vector<double> z = {0.1, 2.0, 1.9, -3.0};
  const auto cold = tempered_softmax(z, 1e-3);
  CHECK(cold[1] == doctest::Approx(1.0));
  CHECK(cold[2] < 1e-30);
  const auto warm = tempered_softmax(z, 1.0);
  const auto plain = softmax(z);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(warm[i] == plain[i]);
  CHECK_THROWS_AS(tempered_softmax(z, 0.0), ConfigError);
  CHECK_THROWS_AS(DistillConfig({1.5, 1.0}).validate(), ConfigError);
}

TEST_CASE("soft term at temperature one equals cross-entropy against the teacher") {
  std::mt19937_64 rng(12);
  const auto z = random_logits(8, rng);
  const auto q = softmax(random_logits(8, rng));
  const auto p = softmax(z);
  double oracle = 0.0;
  for (std::size_t i = 0; i < 8; ++i) oracle -= q[i] * std::log(p[i]);
  const auto d = distillation_loss(z, 3, q, DistillConfig{1.0, 1.0});
  CHECK(std::abs(d.loss - oracle) < 1e-12);
}

TEST_CASE("cosine loss closed forms") {
  const std::vector<double> t = {1.0, -2.0, 0.5};
  CHECK(std::abs(cosine_loss(t, t).loss) < 1e-15);
  const std::vector<double> scaled = {3.0, -6.0, 1.5};
  CHECK(std::abs(cosine_loss(scaled, t).loss) < 1e-15);
  const std::vector<double> neg = {-1.0, 2.0, -0.5};
  CHECK(cosine_loss(neg, t).loss == doctest::Approx(2.0).epsilon(1e-14));
  const std::vector<double> a = {1.0, 0.0}, b = {0.0, 4.0};
  CHECK(cosine_loss(a, b).loss == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("cosine loss edge cases") {
  const std::vector<double> zero = {0.0, 0.0, 0.0};
  const std::vector<double> t = {0.0, 3.0, 4.0};
  const auto r = cosine_loss(zero, t);
  CHECK(r.loss == 1.0);
  CHECK(r.gradient == std::vector<double>{0.0, -0.6, -0.8});
  CHECK_THROWS_AS(cosine_loss(t, zero), DataError);
}

TEST_CASE("cosine gradient matches finite differences") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_logits(6, rng);
    const auto t = random_logits(6, rng);
    const auto analytic = cosine_loss(p, t).gradient;
    const auto numeric = numeric_gradient(
        [&](const std::vector<double>& x) { return cosine_loss(x, t).loss; }, p);
    CHECK(max_rel(analytic, numeric) < 1e-6);
  }
}
