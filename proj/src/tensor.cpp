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

#include "cdrnde/tensor.hpp"

#include <algorithm>

#include "cdrnde/errors.hpp"

namespace cdrnde {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

namespace {

std::pair<Eigen::Index, Eigen::Index> layout(const Shape& shape) {
  switch (shape.size()) {
    case 0:
      return {1, 1};
    case 1:
      return {static_cast<Eigen::Index>(shape[0]), 1};
    case 2:
      return {static_cast<Eigen::Index>(shape[0]),
              static_cast<Eigen::Index>(shape[1])};
    default:
      throw DimensionError("tensor rank " + std::to_string(shape.size()) +
                           " unsupported (max 2): " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, bool requires_grad)
    : shape_(std::move(shape)), requires_grad_(requires_grad) {
  auto [r, c] = layout(shape_);
  value_ = Matrix::Zero(r, c);
}

Tensor::Tensor(Shape shape, std::span<const double> values, bool requires_grad)
    : Tensor(std::move(shape), requires_grad) {
  if (values.size() != size()) {
    throw DimensionError("tensor " + shape_string(shape_) + " needs " +
                         std::to_string(size()) + " values, got " +
                         std::to_string(values.size()));
  }
  std::copy(values.begin(), values.end(), value_.data());
}

Tensor Tensor::from_matrix(const Matrix& m, bool requires_grad) {
  Tensor t({static_cast<std::size_t>(m.rows()),
            static_cast<std::size_t>(m.cols())},
           requires_grad);
  t.value_ = m;
  return t;
}

Tensor Tensor::from_vector(const Vector& v, bool requires_grad) {
  Tensor t({static_cast<std::size_t>(v.size())}, requires_grad);
  t.value_ = v;
  return t;
}

void Tensor::zero_grad() { grad_ = Matrix::Zero(value_.rows(), value_.cols()); }

}  // namespace cdrnde
