#include "ichdet/resize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ichdet/errors.hpp"

namespace ichdet {

Matrix bilinear_resize(const Matrix& src, std::size_t rows, std::size_t cols) {
  if (src.empty()) throw shape_error("bilinear_resize: empty source");
  if (rows == 0 || cols == 0) throw shape_error("bilinear_resize: zero target");
  if (rows == src.rows() && cols == src.cols()) return src;

  const double row_scale =
      rows > 1 ? static_cast<double>(src.rows() - 1) / static_cast<double>(rows - 1) : 0.0;
  const double col_scale =
      cols > 1 ? static_cast<double>(src.cols() - 1) / static_cast<double>(cols - 1) : 0.0;

  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const double sy = static_cast<double>(i) * row_scale;
    std::size_t y0 = static_cast<std::size_t>(sy);
    if (y0 >= src.rows() - 1) y0 = src.rows() - 1;
    const std::size_t y1 = std::min(y0 + 1, src.rows() - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t j = 0; j < cols; ++j) {
      const double sx = static_cast<double>(j) * col_scale;
      std::size_t x0 = static_cast<std::size_t>(sx);
      if (x0 >= src.cols() - 1) x0 = src.cols() - 1;
      const std::size_t x1 = std::min(x0 + 1, src.cols() - 1);
      const double fx = sx - static_cast<double>(x0);
      const double top = (1.0 - fx) * src(y0, x0) + fx * src(y0, x1);
      const double bottom = (1.0 - fx) * src(y1, x0) + fx * src(y1, x1);
      out(i, j) = (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

}  // namespace ichdet
