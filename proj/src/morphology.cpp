#include "ichdet/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>

#include "ichdet/errors.hpp"

namespace ichdet {

namespace {

/// Sliding window maximum along one axis; window side 2*radius+1, clipped at
/// the borders. Separable passes compose to the square-footprint dilation.
void dilate_rows(const Matrix& src, Matrix& dst, int radius) {
  const int rows = static_cast<int>(src.rows());
  const int cols = static_cast<int>(src.cols());
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const int lo = std::max(0, x - radius);
      const int hi = std::min(cols - 1, x + radius);
      double best = src(y, lo);
      for (int i = lo + 1; i <= hi; ++i) best = std::max(best, src(y, i));
      dst(y, x) = best;
    }
  }
}

void dilate_cols(const Matrix& src, Matrix& dst, int radius) {
  const int rows = static_cast<int>(src.rows());
  const int cols = static_cast<int>(src.cols());
  for (int y = 0; y < rows; ++y) {
    const int lo = std::max(0, y - radius);
    const int hi = std::min(rows - 1, y + radius);
    for (int x = 0; x < cols; ++x) {
      double best = src(lo, x);
      for (int i = lo + 1; i <= hi; ++i) best = std::max(best, src(i, x));
      dst(y, x) = best;
    }
  }
}

}  // namespace

Matrix gray_dilate(const Matrix& m, Footprint footprint) {
  footprint.validate();
  if (m.empty()) throw shape_error("gray_dilate: empty matrix");
  Matrix horizontal(m.rows(), m.cols());
  dilate_rows(m, horizontal, footprint.radius);
  Matrix out(m.rows(), m.cols());
  dilate_cols(horizontal, out, footprint.radius);
  return out;
}

Matrix morph_reconstruct_dilation(const Matrix& marker, const Matrix& mask) {
  if (!marker.same_shape(mask)) {
    throw shape_error("reconstruction requires marker and mask of equal shape");
  }
  const auto marker_values = marker.values();
  const auto mask_values = mask.values();
  for (std::size_t i = 0; i < marker_values.size(); ++i) {
    if (marker_values[i] > mask_values[i]) {
      throw std::invalid_argument("marker exceeds mask at index " + std::to_string(i));
    }
  }

  const int rows = static_cast<int>(marker.rows());
  const int cols = static_cast<int>(marker.cols());
  Matrix r = marker;

  // Raster scan with the causal half of the 8-neighborhood.
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double best = r(y, x);
      if (y > 0) {
        if (x > 0) best = std::max(best, r(y - 1, x - 1));
        best = std::max(best, r(y - 1, x));
        if (x + 1 < cols) best = std::max(best, r(y - 1, x + 1));
      }
      if (x > 0) best = std::max(best, r(y, x - 1));
      r(y, x) = std::min(mask(y, x), best);
    }
  }

  // Anti-raster scan with the anti-causal half; pixels whose neighbor could
  // still grow seed the queue.
  std::deque<std::pair<int, int>> queue;
  for (int y = rows - 1; y >= 0; --y) {
    for (int x = cols - 1; x >= 0; --x) {
      double best = r(y, x);
      if (y + 1 < rows) {
        if (x + 1 < cols) best = std::max(best, r(y + 1, x + 1));
        best = std::max(best, r(y + 1, x));
        if (x > 0) best = std::max(best, r(y + 1, x - 1));
      }
      if (x + 1 < cols) best = std::max(best, r(y, x + 1));
      r(y, x) = std::min(mask(y, x), best);

      const auto needs_queue = [&](int ny, int nx) {
        return r(ny, nx) < r(y, x) && r(ny, nx) < mask(ny, nx);
      };
      bool enqueue = false;
      if (y + 1 < rows) {
        enqueue = needs_queue(y + 1, x) || (x > 0 && needs_queue(y + 1, x - 1)) ||
                  (x + 1 < cols && needs_queue(y + 1, x + 1));
      }
      if (!enqueue && x + 1 < cols) enqueue = needs_queue(y, x + 1);
      if (enqueue) queue.emplace_back(y, x);
    }
  }

  while (!queue.empty()) {
    const auto [y, x] = queue.front();
    queue.pop_front();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dy == 0 && dx == 0) continue;
        const int ny = y + dy;
        const int nx = x + dx;
        if (ny < 0 || ny >= rows || nx < 0 || nx >= cols) continue;
        if (r(ny, nx) < r(y, x) && r(ny, nx) != mask(ny, nx)) {
          r(ny, nx) = std::min(r(y, x), mask(ny, nx));
          queue.emplace_back(ny, nx);
        }
      }
    }
  }
  return r;
}

Matrix h_maxima(const Matrix& m, double h) {
  if (!(h >= 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("h-maxima requires finite h >= 0");
  }
  if (h == 0.0) return m;
  std::vector<double> marker(m.size());
  const auto values = m.values();
  for (std::size_t i = 0; i < marker.size(); ++i) marker[i] = values[i] - h;
  return morph_reconstruct_dilation(Matrix(m.rows(), m.cols(), std::move(marker)), m);
}

std::vector<PlateauComponent> local_maxima(const Matrix& m, Footprint footprint) {
  const Matrix dilated = gray_dilate(m, footprint);
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());

  std::vector<char> candidate(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    candidate[i] = m.values()[i] == dilated.values()[i];
  }

  std::vector<PlateauComponent> components;
  std::vector<char> visited(m.size(), 0);
  std::deque<std::pair<int, int>> frontier;
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * cols + x;
      if (!candidate[idx] || visited[idx]) continue;
      PlateauComponent component;
      component.value = m(y, x);
      visited[idx] = 1;
      frontier.emplace_back(y, x);
      while (!frontier.empty()) {
        const auto [cy, cx] = frontier.front();
        frontier.pop_front();
        component.pixels.emplace_back(cx, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dy == 0 && dx == 0) continue;
            const int ny = cy + dy;
            const int nx = cx + dx;
            if (ny < 0 || ny >= rows || nx < 0 || nx >= cols) continue;
            const std::size_t nidx = static_cast<std::size_t>(ny) * cols + nx;
            if (!candidate[nidx] || visited[nidx]) continue;
            visited[nidx] = 1;
            frontier.emplace_back(ny, nx);
          }
        }
      }
      std::sort(component.pixels.begin(), component.pixels.end(),
                [](const auto& a, const auto& b) {
                  return a.second != b.second ? a.second < b.second : a.first < b.first;
                });
      components.push_back(std::move(component));
    }
  }
  return components;
}

std::vector<Detection> detect_peaks(const Matrix& map, const DetectorParams& params,
                                    Footprint footprint, std::string_view slice_id) {
  params.validate();
  footprint.validate();

  const Matrix transformed = h_maxima(map, params.h);
  const auto components = local_maxima(transformed, footprint);

  struct Peak {
    int x;
    int y;
    double value;
  };
  std::vector<Peak> peaks;
  peaks.reserve(components.size());
  for (const auto& component : components) {
    if (!(component.value > params.T)) continue;
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& [px, py] : component.pixels) {
      sx += px;
      sy += py;
    }
    const double n = static_cast<double>(component.pixels.size());
    peaks.push_back(Peak{static_cast<int>(std::llround(sx / n)),
                         static_cast<int>(std::llround(sy / n)), component.value});
  }

  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  const double min_dist_sq = params.d * params.d;
  std::vector<Detection> accepted;
  for (const Peak& peak : peaks) {
    bool keep = true;
    for (const Detection& other : accepted) {
      const long long dx = peak.x - other.x;
      const long long dy = peak.y - other.y;
      if (static_cast<double>(dx * dx + dy * dy) < min_dist_sq) {
        keep = false;
        break;
      }
    }
    if (keep) {
      accepted.push_back(Detection{std::string(slice_id), peak.x, peak.y, peak.value});
    }
  }
  return accepted;
}

}  // namespace ichdet
