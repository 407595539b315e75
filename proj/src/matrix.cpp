#include "ichdet/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ichdet/errors.hpp"

namespace ichdet {

namespace {

void check_dims(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw shape_error("matrix dimensions must be positive, got " +
                      std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
  check_dims(rows, cols);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  check_dims(rows, cols);
  if (values_.size() != rows * cols) {
    throw shape_error("matrix value count " + std::to_string(values_.size()) +
                      " does not match " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw std::invalid_argument("matrix value at index " + std::to_string(i) +
                                  " is not finite");
    }
  }
}

Matrix Matrix::constant(std::size_t rows, std::size_t cols, double value) {
  return Matrix(rows, cols, std::vector<double>(rows * cols, value));
}

double Matrix::min_value() const {
  return *std::min_element(values_.begin(), values_.end());
}

double Matrix::max_value() const {
  return *std::max_element(values_.begin(), values_.end());
}

}  // namespace ichdet
