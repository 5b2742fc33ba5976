// Copyright 2026 The pbmvfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PBMVFL_TENSOR_HPP_
#define PBMVFL_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "pbmvfl/errors.hpp"

namespace pbmvfl {

/// Dense row-major matrix of doubles.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw ShapeError("tensor: data length does not match shape");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Tensor2&, const Tensor2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline void require_shape(const Tensor2& t, std::size_t rows, std::size_t cols, const char* what) {
  if (t.rows() != rows || t.cols() != cols) {
    std::ostringstream msg;
    msg << what << ": expected " << rows << "x" << cols << ", got " << t.rows() << "x" << t.cols();
    throw ShapeError(msg.str());
  }
}

/// Rows of `src` selected by `index`, in index order.
inline Tensor2 gather_rows(const Tensor2& src, std::span<const std::size_t> index) {
  Tensor2 out(index.size(), src.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= src.rows()) throw ShapeError("tensor: row index out of range");
    auto from = src.row(index[i]);
    std::copy(from.begin(), from.end(), out.row(i).begin());
  }
  return out;
}

inline void add_inplace(Tensor2& acc, const Tensor2& x) {
  require_shape(x, acc.rows(), acc.cols(), "tensor add");
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += x.data()[i];
}

}  // namespace pbmvfl

#endif  // PBMVFL_TENSOR_HPP_
