/*
 * Copyright 2026 The ITD Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace itd::transport {

inline constexpr double kWeightSumTolerance = 1e-12;

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Discrete probability measure: n points in R^d with nonnegative weights
/// summing to one. Coordinates are stored flat, one point per row.
class PointCloud {
 public:
  PointCloud(std::size_t dim, std::vector<double> coords, std::vector<double> weights);

  /// Uniform weights 1/n.
  static PointCloud uniform(std::size_t dim, std::vector<double> coords);
  static PointCloud from_points(const std::vector<std::vector<double>>& points);
  static PointCloud from_points(const std::vector<std::vector<double>>& points,
                                std::vector<double> weights);

  std::size_t size() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> point(std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const double> coords() const noexcept { return coords_; }
  std::span<const double> weights() const noexcept { return weights_; }

  bool operator==(const PointCloud&) const = default;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

/// Validates a probability vector: nonnegative, finite, sums to one within
/// kWeightSumTolerance. Throws InvalidArgument otherwise.
void validate_weights(std::span<const double> w, const char* what);

/// Ground cost ||x_i - y_j||^p under the Euclidean metric.
class CostMatrix {
 public:
  CostMatrix(DenseMatrix entries, double order);

  std::size_t rows() const noexcept { return entries_.rows(); }
  std::size_t cols() const noexcept { return entries_.cols(); }
  double order() const noexcept { return order_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return entries_(i, j); }
  const DenseMatrix& entries() const noexcept { return entries_; }

 private:
  DenseMatrix entries_;
  double order_;
};

/// ||x - y||^p; p == 2 is the plain sum of squares, with no sqrt round trip.
double ground_cost(std::span<const double> x, std::span<const double> y, double p) noexcept;

CostMatrix cost_matrix(const PointCloud& xs, const PointCloud& ys, double p);

}  // namespace itd::transport
