#include "runcsp/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace runcsp {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw std::invalid_argument("tensor data does not match shape");
}

Tensor Tensor::transposed() const {
  Tensor t(cols_, rows_);
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < rows_; i0 += kBlock)
    for (std::size_t j0 = 0; j0 < cols_; j0 += kBlock)
      for (std::size_t i = i0; i < std::min(rows_, i0 + kBlock); ++i)
        for (std::size_t j = j0; j < std::min(cols_, j0 + kBlock); ++j)
          t.data_[j * rows_ + i] = data_[i * cols_ + j];
  return t;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace runcsp
