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

#include "itd/point_cloud.hpp"

#include <cmath>
#include <string>

#include "itd/error.hpp"
#include "itd/summation.hpp"

namespace itd::transport {

std::vector<double> DenseMatrix::row_sums() const {
  std::vector<double> out(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = compensated_sum(row(i));
  return out;
}

std::vector<double> DenseMatrix::col_sums() const {
  std::vector<CompensatedSum> acc(cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) acc[j].add((*this)(i, j));
  std::vector<double> out(cols_);
  for (std::size_t j = 0; j < cols_; ++j) out[j] = acc[j].value();
  return out;
}

void validate_weights(std::span<const double> w, const char* what) {
  if (w.empty()) throw InvalidArgument(std::string(what) + ": empty weight vector");
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0)
      throw InvalidArgument(std::string(what) + ": weights must be finite and nonnegative");
  }
  const double total = compensated_sum(w);
  if (std::abs(total - 1.0) > kWeightSumTolerance)
    throw InvalidArgument(std::string(what) + ": weights sum to " + std::to_string(total) +
                          ", expected 1");
}

PointCloud::PointCloud(std::size_t dim, std::vector<double> coords, std::vector<double> weights)
    : dim_(dim), coords_(std::move(coords)), weights_(std::move(weights)) {
  if (dim_ == 0) throw InvalidArgument("PointCloud: dimension must be >= 1");
  if (weights_.empty()) throw InvalidArgument("PointCloud: empty point set");
  if (coords_.size() != weights_.size() * dim_)
    throw InvalidArgument("PointCloud: coordinate count does not match size * dim");
  for (double c : coords_) {
    if (!std::isfinite(c)) throw InvalidArgument("PointCloud: non-finite coordinate");
  }
  validate_weights(weights_, "PointCloud");
}

PointCloud PointCloud::uniform(std::size_t dim, std::vector<double> coords) {
  if (dim == 0) throw InvalidArgument("PointCloud: dimension must be >= 1");
  const std::size_t n = coords.size() / dim;
  if (n == 0) throw InvalidArgument("PointCloud: empty point set");
  return PointCloud(dim, std::move(coords), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

namespace {

std::vector<double> flatten(const std::vector<std::vector<double>>& points, std::size_t& dim) {
  if (points.empty()) throw InvalidArgument("PointCloud: empty point set");
  dim = points.front().size();
  std::vector<double> flat;
  flat.reserve(points.size() * dim);
  for (const auto& p : points) {
    if (p.size() != dim) throw InvalidArgument("PointCloud: points differ in dimension");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return flat;
}

}  // namespace

PointCloud PointCloud::from_points(const std::vector<std::vector<double>>& points) {
  std::size_t dim = 0;
  auto flat = flatten(points, dim);
  return uniform(dim, std::move(flat));
}

PointCloud PointCloud::from_points(const std::vector<std::vector<double>>& points,
                                   std::vector<double> weights) {
  std::size_t dim = 0;
  auto flat = flatten(points, dim);
  return PointCloud(dim, std::move(flat), std::move(weights));
}

CostMatrix::CostMatrix(DenseMatrix entries, double order)
    : entries_(std::move(entries)), order_(order) {
  if (!(order_ >= 1.0)) throw InvalidArgument("CostMatrix: order p must be >= 1");
  if (entries_.rows() == 0 || entries_.cols() == 0)
    throw InvalidArgument("CostMatrix: empty cost matrix");
  for (double c : entries_.data()) {
    if (!std::isfinite(c) || c < 0.0)
      throw InvalidArgument("CostMatrix: entries must be finite and nonnegative");
  }
}

double ground_cost(std::span<const double> x, std::span<const double> y, double p) noexcept {
  double sq = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - y[k];
    sq += diff * diff;
  }
  if (p == 2.0) return sq;
  const double dist = std::sqrt(sq);
  if (p == 1.0) return dist;
  return std::pow(dist, p);
}

CostMatrix cost_matrix(const PointCloud& xs, const PointCloud& ys, double p) {
  if (xs.dim() != ys.dim()) throw InvalidArgument("cost_matrix: dimension mismatch");
  if (!(p >= 1.0)) throw InvalidArgument("cost_matrix: order p must be >= 1");
  DenseMatrix c(xs.size(), ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto xi = xs.point(i);
    for (std::size_t j = 0; j < ys.size(); ++j) c(i, j) = ground_cost(xi, ys.point(j), p);
  }
  return CostMatrix(std::move(c), p);
}

}  // namespace itd::transport
