#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ichdet/matrix.hpp"
#include "ichdet/mil.hpp"
#include "ichdet/types.hpp"

namespace ichdet {

/// Synthetic attention-map scene generator: isotropic Gaussian blobs over a
/// low uniform noise floor, one ground-truth box per blob with half-width
/// ceil(3 sigma), clipped to the map.
struct SceneConfig {
  std::size_t rows = 64;
  std::size_t cols = 64;
  std::size_t min_blobs = 1;
  std::size_t max_blobs = 3;
  double min_amplitude = 0.3;
  double max_amplitude = 1.0;
  double min_sigma = 2.0;
  double max_sigma = 4.0;
  double noise_amplitude = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  std::string slice_id;
  Matrix map;
  std::vector<BoundingBox> boxes;
};

/// Deterministic per (config.seed, index). Blob centers sit on integer pixels,
/// at least 2*max_sigma from every border and pairwise at least 4*max_sigma
/// apart; placement gives up with an error after 1000 attempts.
Scene generate_scene(const SceneConfig& config, std::size_t index);

/// Synthetic MIL bags. Positive bags plant 1..max witnesses near the witness
/// mean; all other rows are background noise.
struct BagConfig {
  std::size_t K = 16;
  std::size_t M = 8;
  std::vector<double> witness_mean;  // empty selects all-2.0
  double background_mean = 0.0;
  double background_std = 1.0;
  double witness_std = 0.1;
  std::size_t min_witnesses = 1;
  std::size_t max_witnesses = 3;
  std::uint64_t seed = 0;

  std::vector<double> effective_witness_mean() const;
  void validate() const;
};

struct SynthBag {
  EmbeddingBag bag;
  int label = 0;
  std::vector<std::size_t> witness_positions;  // empty for negative bags
};

/// n_pos positive bags followed by n_neg negative bags, deterministic per
/// config.seed.
std::vector<SynthBag> generate_bags(const BagConfig& config, std::size_t n_pos,
                                    std::size_t n_neg);

}  // namespace ichdet
