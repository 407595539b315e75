#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ichdet {

/// Dense row-major matrix of doubles: the shared carrier for CT slices,
/// feature maps and attention maps. Constructors reject non-finite values
/// and zero dimensions.
class Matrix {
 public:
  Matrix() = default;

  /// Zero-filled rows x cols matrix.
  Matrix(std::size_t rows, std::size_t cols);

  /// Takes ownership of row-major values; values.size() must equal rows*cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix constant(std::size_t rows, std::size_t cols, double value);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator()(std::size_t r, std::size_t c) const {
    return values_[r * cols_ + c];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return values_[r * cols_ + c];
  }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  double min_value() const;
  double max_value() const;

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace ichdet
