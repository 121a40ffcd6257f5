/*
 * Copyright 2026 The volfc Authors.
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

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "volfc/common.hpp"
#include "volfc/io.hpp"

namespace volfc {

/// Column-wise min-max scaler, (x - min) / (max - min). Values outside the
/// fitted range extrapolate linearly. A constant column maps to 0 and inverts
/// back to its single observed value.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;

  /// Rows are samples, columns are features.
  static MinMaxScaler fit(const Eigen::MatrixXd& x) {
    if (x.rows() == 0 || x.cols() == 0) throw DataError("scaler_fit: empty matrix");
    MinMaxScaler s;
    s.min_ = x.colwise().minCoeff().transpose();
    s.max_ = x.colwise().maxCoeff().transpose();
    return s;
  }

  Eigen::Index features() const { return min_.size(); }
  const Eigen::VectorXd& min() const { return min_; }
  const Eigen::VectorXd& max() const { return max_; }

  bool constant(Eigen::Index j) const { return max_[j] == min_[j]; }

  /// Indices of columns whose fitted range is zero.
  std::vector<Eigen::Index> constant_columns() const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index j = 0; j < features(); ++j)
      if (constant(j)) out.push_back(j);
    return out;
  }

  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const {
    check(x);
    Eigen::MatrixXd y(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (constant(j)) {
        y.col(j).setZero();
      } else {
        y.col(j) = (x.col(j).array() - min_[j]) / (max_[j] - min_[j]);
      }
    }
    return y;
  }

  Eigen::MatrixXd inverse(const Eigen::MatrixXd& y) const {
    check(y);
    Eigen::MatrixXd x(y.rows(), y.cols());
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      if (constant(j)) {
        x.col(j).setConstant(min_[j]);
      } else {
        x.col(j) = y.col(j).array() * (max_[j] - min_[j]) + min_[j];
      }
    }
    return x;
  }

  double transform_value(Eigen::Index j, double v) const {
    return constant(j) ? 0.0 : (v - min_[j]) / (max_[j] - min_[j]);
  }
  double inverse_value(Eigen::Index j, double v) const {
    return constant(j) ? min_[j] : v * (max_[j] - min_[j]) + min_[j];
  }

  void to_kv(io::KeyValue& kv, const std::string& prefix) const {
    kv.set(prefix + "features", static_cast<long long>(features()));
    for (Eigen::Index j = 0; j < features(); ++j) {
      kv.set(prefix + "min." + std::to_string(j), min_[j]);
      kv.set(prefix + "max." + std::to_string(j), max_[j]);
    }
  }

 private:
  void check(const Eigen::MatrixXd& x) const {
    if (x.cols() != features())
      throw DataError("scaler: expected " + std::to_string(features()) + " columns, got " +
                      std::to_string(x.cols()));
  }

  Eigen::VectorXd min_;
  Eigen::VectorXd max_;
};

}  // namespace volfc
