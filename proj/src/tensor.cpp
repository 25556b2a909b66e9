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

#include "srnlab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "srnlab/errors.hpp"

namespace srnlab {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw DimensionError("from_rows: ragged initializer");
    }
    std::copy(row.begin(), row.end(), m.row(i++).begin());
  }
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_string() +
                         " and " + b.shape_string());
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    const double* ar = a.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double s = ar[k];
      const double* br = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += s * br[j];
    }
  }
  return out;
}

void accumulate_matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  if (out.rows() != a.cols() || out.cols() != b.cols()) {
    throw DimensionError("matmul_tn: output is " + out.shape_string() + ", expected " +
                         std::to_string(a.cols()) + "x" + std::to_string(b.cols()));
  }
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* ar = a.row(r).data();
    const double* br = b.row(r).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s = ar[i];
      if (s == 0.0) continue;
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += s * br[j];
    }
  }
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix out(a.cols(), b.cols());
  accumulate_matmul_tn(a, b, out);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  Matrix out(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ar = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* br = b.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += ar[k] * br[k];
      out(i, j) = s;
    }
  }
  return out;
}

void add_row_vector(Matrix& m, const Matrix& bias) {
  require(bias.rows() == 1 && bias.cols() == m.cols(), "add_row_vector", m, bias);
  const double* b = bias.row(0).data();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double* r = m.row(i).data();
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += b[j];
  }
}

void accumulate_column_sums(const Matrix& m, Matrix& out) {
  require(out.rows() == 1 && out.cols() == m.cols(), "column_sums", m, out);
  double* o = out.row(0).data();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i).data();
    for (std::size_t j = 0; j < m.cols(); ++j) o[j] += r[j];
  }
}

Matrix softmax_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    auto o = out.row(i);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    const double inv = 1.0 / total;
    for (double& v : o) v *= inv;
  }
  return out;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Parameter::Parameter(std::string name_in, Matrix initial)
    : name(std::move(name_in)),
      value(std::move(initial)),
      grad(value.rows(), value.cols()),
      adam_m(value.rows(), value.cols()),
      adam_v(value.rows(), value.cols()) {}

void Parameter::reset_optimizer() {
  adam_m.fill(0.0);
  adam_v.fill(0.0);
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in (0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

void adam_step(Parameter& p, const AdamConfig& cfg) {
  if (cfg.step_count == 0) {
    throw ConfigError("adam_step: step_count must be incremented before the first step");
  }
  if (!all_finite(p.grad)) {
    throw NumericError("non-finite gradient in parameter '" + p.name + "'");
  }
  const double t = static_cast<double>(cfg.step_count);
  const double m_correction = 1.0 - std::pow(cfg.beta1, t);
  const double v_correction = 1.0 - std::pow(cfg.beta2, t);
  auto value = p.value.values();
  auto grad = p.grad.values();
  auto m = p.adam_m.values();
  auto v = p.adam_v.values();
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double g = grad[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = m[i] / m_correction;
    const double v_hat = v[i] / v_correction;
    value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

GradientCheckResult finite_difference_check(const std::function<double()>& loss_fn,
                                            std::span<Parameter* const> params,
                                            const GradientCheckOptions& options) {
  GradientCheckResult result;
  std::mt19937_64 rng(options.seed);
  for (Parameter* p : params) {
    auto values = p->value.values();
    const auto grads = p->grad.values();
    std::vector<std::size_t> coords(values.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
    }
    for (std::size_t idx : coords) {
      const double saved = values[idx];
      values[idx] = saved + options.eps;
      const double plus = loss_fn();
      values[idx] = saved - options.eps;
      const double minus = loss_fn();
      values[idx] = saved;
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double analytic = grads[idx];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double err = std::abs(analytic - numeric) / denom;
      ++result.coordinates_checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = p->name;
        result.worst_index = idx;
      }
    }
  }
  return result;
}

}  // namespace srnlab
