#include "ichdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ichdet/errors.hpp"
#include "ichdet/rng.hpp"

namespace ichdet {

void SceneConfig::validate() const {
  if (rows < 32 || cols < 32) {
    throw std::invalid_argument("scene dimensions must be at least 32");
  }
  if (min_blobs > max_blobs) {
    throw std::invalid_argument("blob count range is inverted");
  }
  if (!(min_amplitude > 0.0) || min_amplitude > max_amplitude) {
    throw std::invalid_argument("blob amplitude range is invalid");
  }
  if (!(min_sigma > 0.0) || min_sigma > max_sigma) {
    throw std::invalid_argument("blob sigma range is invalid");
  }
  if (noise_amplitude < 0.0) {
    throw std::invalid_argument("noise amplitude must be >= 0");
  }
  const double margin = 2.0 * max_sigma;
  if (2.0 * margin + 1.0 >= static_cast<double>(std::min(rows, cols))) {
    throw std::invalid_argument("max sigma too large for the scene dimensions");
  }
}

Scene generate_scene(const SceneConfig& config, std::size_t index) {
  config.validate();
  Rng rng(derive_seed(config.seed, index));

  const int rows = static_cast<int>(config.rows);
  const int cols = static_cast<int>(config.cols);
  const int margin = static_cast<int>(std::ceil(2.0 * config.max_sigma));
  const double min_separation = 4.0 * config.max_sigma;

  const std::size_t blob_count =
      config.min_blobs +
      rng.uniform_int(config.max_blobs - config.min_blobs + 1);

  struct Blob {
    int cx;
    int cy;
    double amplitude;
    double sigma;
  };
  std::vector<Blob> blobs;
  for (std::size_t b = 0; b < blob_count; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const int cx = margin + static_cast<int>(rng.uniform_int(cols - 2 * margin));
      const int cy = margin + static_cast<int>(rng.uniform_int(rows - 2 * margin));
      bool separated = true;
      for (const Blob& other : blobs) {
        const double dx = cx - other.cx;
        const double dy = cy - other.cy;
        if (std::sqrt(dx * dx + dy * dy) < min_separation) {
          separated = false;
          break;
        }
      }
      if (!separated) continue;
      blobs.push_back(Blob{cx, cy,
                           rng.uniform(config.min_amplitude, config.max_amplitude),
                           rng.uniform(config.min_sigma, config.max_sigma)});
      placed = true;
    }
    if (!placed) {
      throw numeric_error("could not place blob " + std::to_string(b) +
                          " under the separation constraint after 1000 attempts");
    }
  }

  Matrix map(config.rows, config.cols);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double value = rng.uniform(0.0, config.noise_amplitude);
      for (const Blob& blob : blobs) {
        const double dx = x - blob.cx;
        const double dy = y - blob.cy;
        value += blob.amplitude *
                 std::exp(-(dx * dx + dy * dy) / (2.0 * blob.sigma * blob.sigma));
      }
      map(y, x) = std::max(0.0, value);
    }
  }

  Scene scene;
  char name[32];
  std::snprintf(name, sizeof(name), "scene_%04zu", index);
  scene.slice_id = name;
  scene.map = std::move(map);
  for (const Blob& blob : blobs) {
    const int extent = static_cast<int>(std::ceil(3.0 * blob.sigma));
    BoundingBox box;
    box.slice_id = scene.slice_id;
    box.x0 = std::max(0, blob.cx - extent);
    box.y0 = std::max(0, blob.cy - extent);
    box.x1 = std::min(cols, blob.cx + extent + 1);
    box.y1 = std::min(rows, blob.cy + extent + 1);
    box.validate();
    scene.boxes.push_back(std::move(box));
  }
  return scene;
}

std::vector<double> BagConfig::effective_witness_mean() const {
  if (!witness_mean.empty()) return witness_mean;
  return std::vector<double>(M, 2.0);
}

void BagConfig::validate() const {
  if (K == 0 || M == 0) throw std::invalid_argument("bag dimensions must be positive");
  if (min_witnesses == 0 || min_witnesses > max_witnesses || max_witnesses > K) {
    throw std::invalid_argument("witness count range is invalid");
  }
  if (!(background_std > 0.0) || !(witness_std >= 0.0)) {
    throw std::invalid_argument("noise scales are invalid");
  }
  const auto mean = effective_witness_mean();
  if (mean.size() != M) {
    throw shape_error("witness mean must have M entries");
  }
  double max_gap = 0.0;
  for (const double v : mean) max_gap = std::max(max_gap, std::abs(v - background_mean));
  if (max_gap < 1.0) {
    throw std::invalid_argument(
        "witness mean must differ from the background mean by at least 1.0 in "
        "some coordinate");
  }
}

namespace {

/// Near-square grid layout covering K positions exactly.
std::pair<std::size_t, std::size_t> grid_for(std::size_t K) {
  std::size_t rows = static_cast<std::size_t>(std::sqrt(static_cast<double>(K)));
  while (rows > 1 && K % rows != 0) --rows;
  return {rows, K / rows};
}

}  // namespace

std::vector<SynthBag> generate_bags(const BagConfig& config, std::size_t n_pos,
                                    std::size_t n_neg) {
  config.validate();
  Rng rng(derive_seed(config.seed, 0x42616773ull));  // bags stream
  const auto witness_mean = config.effective_witness_mean();
  const auto [grid_rows, grid_cols] = grid_for(config.K);

  std::vector<SynthBag> bags;
  bags.reserve(n_pos + n_neg);
  for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
    const bool positive = i < n_pos;
    Matrix H(config.K, config.M);
    for (auto& v : H.values()) {
      v = rng.normal(config.background_mean, config.background_std);
    }
    std::vector<std::size_t> witnesses;
    if (positive) {
      const std::size_t count =
          config.min_witnesses +
          rng.uniform_int(config.max_witnesses - config.min_witnesses + 1);
      std::vector<std::size_t> positions(config.K);
      std::iota(positions.begin(), positions.end(), std::size_t{0});
      rng.shuffle(positions);
      witnesses.assign(positions.begin(), positions.begin() + count);
      std::sort(witnesses.begin(), witnesses.end());
      for (const std::size_t k : witnesses) {
        for (std::size_t m = 0; m < config.M; ++m) {
          H(k, m) = witness_mean[m] + rng.normal(0.0, config.witness_std);
        }
      }
    }
    bags.push_back(SynthBag{EmbeddingBag(std::move(H), grid_rows, grid_cols),
                            positive ? 1 : 0, std::move(witnesses)});
  }
  return bags;
}

}  // namespace ichdet
