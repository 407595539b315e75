#pragma once

#include "ichdet/matrix.hpp"

namespace ichdet {

/// Bilinear resize with the align-corners convention: output corner pixels
/// map exactly onto input corner pixels, interior samples at
/// i * (in-1) / (out-1). A size-1 axis is treated as constant.
Matrix bilinear_resize(const Matrix& src, std::size_t rows, std::size_t cols);

}  // namespace ichdet
