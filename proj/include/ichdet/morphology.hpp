#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "ichdet/matrix.hpp"
#include "ichdet/types.hpp"

namespace ichdet {

/// Grayscale dilation: each pixel becomes the maximum over the square window
/// of side 2*radius+1 centered on it, clipped at the borders.
Matrix gray_dilate(const Matrix& m, Footprint footprint);

/// Morphological reconstruction by dilation (8-connected): the fixed point of
/// r <- min(gray_dilate(r, radius 1), mask) starting from marker. Requires
/// marker <= mask elementwise. Implemented with the hybrid raster/queue scan,
/// which reaches the exact fixed point.
Matrix morph_reconstruct_dilation(const Matrix& marker, const Matrix& mask);

/// h-maxima transform: reconstruction of (m - h) under m. Suppresses every
/// regional maximum of prominence smaller than h; h = 0 returns m bit-exactly.
Matrix h_maxima(const Matrix& m, double h);

/// One plateau of local-maximum candidates: the 8-connected component of
/// pixels equal to their windowed maximum. All member pixels share the same
/// value.
struct PlateauComponent {
  std::vector<std::pair<int, int>> pixels;  // (x, y), sorted row-major
  double value = 0.0;
};

/// Local-maximum candidates are pixels where m equals its dilation; grouped
/// into 8-connected components in row-major discovery order. Components
/// touching the border are kept; a constant matrix yields one component
/// covering everything.
std::vector<PlateauComponent> local_maxima(const Matrix& m, Footprint footprint);

/// Full detector: h-maxima transform, plateau extraction, value threshold
/// (strictly greater than T), then greedy minimum-distance suppression in
/// descending value order (ties broken row-major). Detections come back
/// sorted by value descending and are at least params.d apart (Euclidean).
std::vector<Detection> detect_peaks(const Matrix& map, const DetectorParams& params,
                                    Footprint footprint = {},
                                    std::string_view slice_id = {});

}  // namespace ichdet
