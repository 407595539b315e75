#include "ichdet/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "ichdet/errors.hpp"
#include "ichdet/io.hpp"

namespace ichdet {

void WindowSpec::validate() const {
  if (!(width > 0.0) || !std::isfinite(width) || !std::isfinite(level)) {
    throw std::invalid_argument("window width must be finite and > 0");
  }
}

void StandardizationStats::validate() const {
  if (!(std > 0.0) || !std::isfinite(std) || !std::isfinite(mean)) {
    throw std::invalid_argument("standardization std must be finite and > 0");
  }
}

Matrix apply_window(const Matrix& hu, WindowSpec window) {
  window.validate();
  const double low = window.level - window.width / 2.0;
  std::vector<double> out(hu.size());
  auto values = hu.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::clamp((values[i] - low) / window.width, 0.0, 1.0);
  }
  return Matrix(hu.rows(), hu.cols(), std::move(out));
}

Matrix standardize(const Matrix& m, StandardizationStats stats) {
  stats.validate();
  std::vector<double> out(m.size());
  auto values = m.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = (values[i] - stats.mean) / stats.std;
  }
  return Matrix(m.rows(), m.cols(), std::move(out));
}

StandardizationStats compute_stats(std::span<const Matrix> dataset) {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  for (const Matrix& m : dataset) {
    for (const double v : m.values()) {
      ++n;
      const double delta = v - mean;
      mean += delta / static_cast<double>(n);
      m2 += delta * (v - mean);
    }
  }
  if (n < 2) {
    throw std::invalid_argument("compute_stats needs at least 2 elements");
  }
  const double variance = m2 / static_cast<double>(n);
  const double std = std::sqrt(variance);
  if (!(std > 0.0)) {
    throw numeric_error("degenerate dataset: zero standard deviation");
  }
  return {mean, std};
}

ChannelStack build_input_channels(const Matrix& hu, StandardizationStats stats) {
  return build_input_channels(hu, {stats, stats, stats});
}

ChannelStack build_input_channels(const Matrix& hu,
                                  const std::array<StandardizationStats, 3>& stats) {
  ChannelStack out;
  out.raw = standardize(hu, stats[0]);
  out.brain = standardize(apply_window(hu, kBrainWindow), stats[1]);
  out.subdural = standardize(apply_window(hu, kSubduralWindow), stats[2]);
  return out;
}

StandardizationStats read_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("mean") ||
      !doc.contains("std") || !doc["mean"].is_number() || !doc["std"].is_number()) {
    throw format_error(path.string() + ": expected JSON object {mean, std}");
  }
  StandardizationStats stats{doc["mean"].get<double>(), doc["std"].get<double>()};
  try {
    stats.validate();
  } catch (const std::invalid_argument& e) {
    throw format_error(path.string() + ": " + e.what());
  }
  return stats;
}

void write_stats(StandardizationStats stats, const std::filesystem::path& path) {
  stats.validate();
  const nlohmann::json doc = {{"mean", stats.mean}, {"std", stats.std}};
  atomic_write(path, doc.dump(2) + "\n");
}

}  // namespace ichdet
