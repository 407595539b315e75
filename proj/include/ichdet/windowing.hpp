#pragma once

#include <array>
#include <filesystem>
#include <span>

#include "ichdet/matrix.hpp"

namespace ichdet {

/// Radiological window: level L (center) and width W in Hounsfield units.
struct WindowSpec {
  double level = 0.0;
  double width = 1.0;

  void validate() const;
};

inline constexpr WindowSpec kBrainWindow{40.0, 80.0};
inline constexpr WindowSpec kSubduralWindow{50.0, 130.0};

/// Dataset-level normalization constants. std is the population standard
/// deviation over every pixel of the dataset.
struct StandardizationStats {
  double mean = 0.0;
  double std = 1.0;

  void validate() const;
};

/// Linear window with clamping: (v - (level - width/2)) / width, clipped to
/// [0, 1]. Monotone non-decreasing; level maps to 0.5 exactly.
Matrix apply_window(const Matrix& hu, WindowSpec window);

/// (m - mean) / std elementwise.
Matrix standardize(const Matrix& m, StandardizationStats stats);

/// Welford-accumulated mean and population std over all pixels of all
/// matrices. Throws numeric_error when the dataset is constant.
StandardizationStats compute_stats(std::span<const Matrix> dataset);

/// The three standardized network input channels: raw slice, brain window
/// (L=40, W=80), subdural window (L=50, W=130). Channels are windowed first,
/// then standardized.
struct ChannelStack {
  Matrix raw;
  Matrix brain;
  Matrix subdural;
};

/// All three channels standardized with the same global stats.
ChannelStack build_input_channels(const Matrix& hu, StandardizationStats stats);

/// Per-channel stats variant (order: raw, brain, subdural).
ChannelStack build_input_channels(const Matrix& hu,
                                  const std::array<StandardizationStats, 3>& stats);

StandardizationStats read_stats(const std::filesystem::path& path);
void write_stats(StandardizationStats stats, const std::filesystem::path& path);

}  // namespace ichdet
