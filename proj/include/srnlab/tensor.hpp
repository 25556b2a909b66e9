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

// Dense row-major matrices, the handful of kernels the GRU network needs,
// Adam, and a central-difference gradient checker.

#ifndef SRNLAB_TENSOR_HPP_
#define SRNLAB_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace srnlab {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a * b. Throws DimensionError when a.cols() != b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// out += a^T * b, shapes must already agree.
void accumulate_matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);

// Adds the 1 x cols row vector to every row.
void add_row_vector(Matrix& m, const Matrix& bias);
// Column sums accumulated into a 1 x cols matrix.
void accumulate_column_sums(const Matrix& m, Matrix& out);

// Row-wise softmax with per-row max subtraction.
Matrix softmax_rows(const Matrix& x);

bool all_finite(std::span<const double> values);
inline bool all_finite(const Matrix& m) { return all_finite(m.values()); }

struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Matrix initial);

  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  void zero_grad() { grad.fill(0.0); }
  void reset_optimizer();
};

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Shared across all parameters; bump once per optimizer step before
  // calling adam_step on each parameter.
  std::uint64_t step_count = 0;

  void validate() const;
};

// Bias-corrected Adam update of p.value. Leaves p.grad untouched.
// Throws NumericError naming the parameter on a non-finite gradient.
void adam_step(Parameter& p, const AdamConfig& cfg);

struct GradientCheckOptions {
  double eps = 1e-5;
  // Coordinates sampled per parameter; parameters with fewer scalars are
  // checked exhaustively.
  std::size_t max_coords_per_param = 64;
  std::uint64_t seed = 17;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t coordinates_checked = 0;
};

// Compares the analytic gradients already stored in each Parameter::grad
// with central differences of loss_fn. loss_fn must read the current
// parameter values and be deterministic.
GradientCheckResult finite_difference_check(const std::function<double()>& loss_fn,
                                            std::span<Parameter* const> params,
                                            const GradientCheckOptions& options = {});

}  // namespace srnlab

#endif  // SRNLAB_TENSOR_HPP_
