// Copyright 2026 The cdrnde Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CDRNDE_TENSOR_HPP
#define CDRNDE_TENSOR_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cdrnde {

/// Dense row-major storage shared by every numeric object in the library.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::string shape_string(Eigen::Index rows, Eigen::Index cols);

/// A persistent array of 64-bit reals with an optional gradient slot.
///
/// Ranks 0, 1 and 2 are supported. A rank-1 tensor of extent n is held as an
/// n x 1 matrix and a scalar as 1 x 1, so value() is always a Matrix.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::span<const double> values,
         bool requires_grad = false);

  static Tensor from_matrix(const Matrix& m, bool requires_grad = false);
  static Tensor from_vector(const Vector& v, bool requires_grad = false);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return static_cast<std::size_t>(value_.size()); }

  Matrix& value() { return value_; }
  const Matrix& value() const { return value_; }

  /// Row-major element view.
  std::span<double> data() { return {value_.data(), size()}; }
  std::span<const double> data() const { return {value_.data(), size()}; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on) { requires_grad_ = on; }

  std::optional<Matrix>& grad() { return grad_; }
  const std::optional<Matrix>& grad() const { return grad_; }
  void zero_grad();
  void clear_grad() { grad_.reset(); }

  bool all_finite() const { return value_.allFinite(); }

 private:
  Shape shape_;
  Matrix value_;
  bool requires_grad_ = false;
  std::optional<Matrix> grad_;
};

/// Non-owning handle used to enumerate a model's parameters.
struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

}  // namespace cdrnde

#endif  // CDRNDE_TENSOR_HPP
