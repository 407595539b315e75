#include <doctest.h>

#include <cmath>
#include <vector>

#include "ichdet/errors.hpp"
#include "ichdet/rng.hpp"
#include "ichdet/windowing.hpp"
#include "oracles.hpp"

using namespace ichdet;

TEST_CASE("window edges and center are exact for both clinical windows") {
  const Matrix probe(1, 3, {0.0, 40.0, 80.0});
  const Matrix brain = apply_window(probe, kBrainWindow);
  CHECK(brain(0, 0) == 0.0);
  CHECK(brain(0, 1) == 0.5);
  CHECK(brain(0, 2) == 1.0);

  const Matrix probe2(1, 3, {-15.0, 50.0, 115.0});
  const Matrix subdural = apply_window(probe2, kSubduralWindow);
  CHECK(subdural(0, 0) == 0.0);
  CHECK(subdural(0, 1) == 0.5);
  CHECK(subdural(0, 2) == 1.0);
}

TEST_CASE("window clamps and is monotone") {
  Rng rng(3);
  std::vector<double> values(64);
  for (auto& v : values) v = rng.uniform(-500.0, 500.0);
  std::sort(values.begin(), values.end());
  const Matrix windowed = apply_window(Matrix(1, 64, values), kBrainWindow);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(windowed(0, i) >= 0.0);
    CHECK(windowed(0, i) <= 1.0);
    if (i > 0) CHECK(windowed(0, i) >= windowed(0, i - 1));
    if (values[i] <= 0.0) CHECK(windowed(0, i) == 0.0);    // level - width/2
    if (values[i] >= 80.0) CHECK(windowed(0, i) == 1.0);   // level + width/2
  }
  CHECK_THROWS_AS(apply_window(Matrix(1, 1, {0.0}), WindowSpec{0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("standardize arithmetic") {
  const Matrix constant = Matrix::constant(2, 2, 3.0);
  const Matrix zeros = standardize(constant, {3.0, 2.0});
  for (const double v : zeros.values()) CHECK(v == 0.0);

  const Matrix m(1, 2, {2.0, 4.0});
  const Matrix identity = standardize(m, {0.0, 1.0});
  CHECK(identity(0, 0) == 2.0);
  CHECK(identity(0, 1) == 4.0);

  const Matrix shifted = standardize(m, {3.0, 1.0});
  CHECK(shifted(0, 0) == -1.0);
  CHECK(shifted(0, 1) == 1.0);

  CHECK_THROWS_AS(standardize(m, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("standardize round-trips through the inverse transform") {
  Rng rng(17);
  std::vector<double> values(100);
  for (auto& v : values) v = rng.uniform(-1000.0, 1000.0);
  const Matrix m(10, 10, values);
  const StandardizationStats stats{12.5, 77.0};
  const Matrix z = standardize(m, stats);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double recovered = z.values()[i] * stats.std + stats.mean;
    CHECK(recovered == doctest::Approx(m.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("compute_stats matches the two-pass oracle") {
  SUBCASE("tiny dataset") {
    const std::vector<Matrix> data = {Matrix(1, 2, {0.0, 2.0})};
    const auto stats = compute_stats(data);
    CHECK(stats.mean == 1.0);
    CHECK(stats.std == 1.0);
  }
  SUBCASE("constant dataset is degenerate") {
    const std::vector<Matrix> data = {Matrix(1, 2, {5.0, 5.0})};
    CHECK_THROWS_AS(compute_stats(data), numeric_error);
  }
  SUBCASE("too small") {
    const std::vector<Matrix> data = {Matrix(1, 1, {5.0})};
    CHECK_THROWS_AS(compute_stats(data), std::invalid_argument);
  }
  SUBCASE("100 random matrices") {
    Rng rng(23);
    std::vector<Matrix> data;
    for (int i = 0; i < 100; ++i) {
      std::vector<double> values(12);
      for (auto& v : values) v = rng.uniform(-50.0, 150.0);
      data.emplace_back(3, 4, std::move(values));
    }
    const auto stats = compute_stats(data);
    const auto expected = oracles::two_pass_stats(data);
    CHECK(stats.mean == doctest::Approx(expected.mean).epsilon(1e-12));
    CHECK(stats.std == doctest::Approx(expected.std).epsilon(1e-12));
  }
}

TEST_CASE("input channels compose window and standardization") {
  // Ramp slice across the interesting HU range.
  std::vector<double> values(128);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = -40.0 + static_cast<double>(i) * 1.25;
  }
  const Matrix hu(8, 16, values);
  const StandardizationStats stats{30.0, 55.0};
  const ChannelStack channels = build_input_channels(hu, stats);

  CHECK(channels.raw.same_shape(hu));
  CHECK(channels.brain.same_shape(hu));
  CHECK(channels.subdural.same_shape(hu));

  const Matrix expected_raw = standardize(hu, stats);
  const Matrix expected_brain = standardize(apply_window(hu, kBrainWindow), stats);
  const Matrix expected_subdural =
      standardize(apply_window(hu, kSubduralWindow), stats);
  CHECK(channels.raw == expected_raw);
  CHECK(channels.brain == expected_brain);
  CHECK(channels.subdural == expected_subdural);

  // Constant slice at the brain level: channel 2 is 0.5 before standardization.
  const Matrix level_slice = Matrix::constant(4, 4, 40.0);
  const Matrix windowed = apply_window(level_slice, kBrainWindow);
  for (const double v : windowed.values()) CHECK(v == 0.5);

  // Per-channel stats variant standardizes each channel with its own stats.
  const std::array<StandardizationStats, 3> per_channel = {
      StandardizationStats{0.0, 1.0}, StandardizationStats{0.5, 0.25},
      StandardizationStats{0.5, 0.25}};
  const ChannelStack split = build_input_channels(hu, per_channel);
  CHECK(split.raw == hu);
  CHECK(split.brain == standardize(apply_window(hu, kBrainWindow), per_channel[1]));
}
