#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>
#include <vector>

#include "ichdet/errors.hpp"
#include "ichdet/morphology.hpp"
#include "ichdet/rng.hpp"
#include "oracles.hpp"

using namespace ichdet;

namespace {

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.same_shape(b) &&
         std::memcmp(a.values().data(), b.values().data(),
                     a.size() * sizeof(double)) == 0;
}

Matrix random_map(Rng& rng, std::size_t rows, std::size_t cols,
                  double quantum = 0.0) {
  std::vector<double> values(rows * cols);
  for (auto& v : values) {
    v = rng.uniform(0.0, 1.0);
    if (quantum > 0.0) v = std::round(v / quantum) * quantum;
  }
  return Matrix(rows, cols, std::move(values));
}

/// Isotropic Gaussian bump on a zero background.
Matrix bump_map(std::size_t rows, std::size_t cols, double cx, double cy,
                double amplitude, double sigma) {
  Matrix m(rows, cols);
  for (std::size_t y = 0; y < rows; ++y) {
    for (std::size_t x = 0; x < cols; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      m(y, x) = amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  }
  return m;
}

Matrix add(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.values()[i] = a.values()[i] + b.values()[i];
  }
  return out;
}

}  // namespace

TEST_CASE("gray dilation basics") {
  const Matrix constant = Matrix::constant(4, 5, 0.3);
  CHECK(bitwise_equal(gray_dilate(constant, {1}), constant));

  Matrix impulse(5, 5);
  impulse(2, 2) = 1.0;
  const Matrix dilated = gray_dilate(impulse, {1});
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) {
      const bool in_block = std::abs(y - 2) <= 1 && std::abs(x - 2) <= 1;
      CHECK(dilated(y, x) == (in_block ? 1.0 : 0.0));
    }
  }

  CHECK_THROWS_AS(gray_dilate(impulse, {0}), std::invalid_argument);
}

TEST_CASE("gray dilation equals the window-scan oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix m = random_map(rng, 16, 16);
    const int radius = 1 + static_cast<int>(rng.uniform_int(3));
    CHECK(bitwise_equal(gray_dilate(m, {radius}), oracles::dilate_scan(m, radius)));
  }
}

TEST_CASE("reconstruction by dilation") {
  SUBCASE("marker equal to mask is already a fixed point") {
    Rng rng(7);
    const Matrix mask = random_map(rng, 8, 8);
    CHECK(bitwise_equal(morph_reconstruct_dilation(mask, mask), mask));
  }

  SUBCASE("constant-offset marker under a unimodal mask plateaus at peak - c") {
    const Matrix mask = bump_map(15, 15, 7.0, 7.0, 1.0, 3.0);
    const double c = 0.3;
    std::vector<double> marker_values(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
      marker_values[i] = mask.values()[i] - c;
    }
    const Matrix result = morph_reconstruct_dilation(
        Matrix(15, 15, std::move(marker_values)), mask);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      const double expected = std::min(mask.values()[i], 1.0 - c);
      CHECK(result.values()[i] == doctest::Approx(expected).epsilon(1e-15));
    }
  }

  SUBCASE("random pairs equal the queue-based oracle bitwise") {
    Rng rng(19);
    for (int trial = 0; trial < 100; ++trial) {
      const Matrix mask = random_map(rng, 12, 12);
      std::vector<double> marker_values(mask.size());
      for (std::size_t i = 0; i < mask.size(); ++i) {
        marker_values[i] = mask.values()[i] - std::abs(rng.normal(0.0, 0.3));
      }
      const Matrix marker(12, 12, std::move(marker_values));
      const Matrix got = morph_reconstruct_dilation(marker, mask);
      CHECK(bitwise_equal(got, oracles::reconstruct_queue(marker, mask)));
      if (trial < 10) {
        CHECK(bitwise_equal(got, oracles::reconstruct_iterate(marker, mask)));
      }
      // marker <= result <= mask
      for (std::size_t i = 0; i < mask.size(); ++i) {
        CHECK(got.values()[i] >= marker.values()[i]);
        CHECK(got.values()[i] <= mask.values()[i]);
      }
    }
  }

  SUBCASE("marker above mask is rejected") {
    const Matrix mask = Matrix::constant(3, 3, 0.5);
    const Matrix marker = Matrix::constant(3, 3, 0.6);
    CHECK_THROWS_AS(morph_reconstruct_dilation(marker, mask), std::invalid_argument);
  }
}

TEST_CASE("h-maxima transform") {
  Rng rng(29);

  SUBCASE("h = 0 is the identity, bitwise") {
    const Matrix m = random_map(rng, 10, 10);
    CHECK(bitwise_equal(h_maxima(m, 0.0), m));
  }

  SUBCASE("small peaks are merged into their surroundings") {
    const Matrix tall = bump_map(20, 40, 10.0, 10.0, 1.0, 2.5);
    const Matrix small = bump_map(20, 40, 30.0, 10.0, 0.3, 2.5);
    const Matrix m = add(tall, small);
    const Matrix out = h_maxima(m, 0.5);

    // The tall bump survives, its top flattened to 1.0 - 0.5.
    CHECK(out(10, 10) == doctest::Approx(0.5).epsilon(1e-9));
    // The small bump no longer rises above its own neighborhood: every local
    // maximum candidate around it has the background value.
    const auto components = local_maxima(out, {1});
    for (const auto& component : components) {
      for (const auto& [x, y] : component.pixels) {
        const bool near_small = std::abs(x - 30) <= 6 && std::abs(y - 10) <= 6;
        if (near_small) CHECK(component.value <= 0.05);
      }
    }
  }

  SUBCASE("anti-extensive and monotone in h") {
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix m = random_map(rng, 12, 12);
      const Matrix low = h_maxima(m, 0.1);
      const Matrix high = h_maxima(m, 0.2);
      for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(low.values()[i] <= m.values()[i]);
        CHECK(high.values()[i] <= low.values()[i]);
      }
    }
  }

  SUBCASE("negative h is rejected") {
    CHECK_THROWS_AS(h_maxima(Matrix::constant(2, 2, 0.0), -0.1),
                    std::invalid_argument);
  }
}

TEST_CASE("local maxima candidates and plateaus") {
  SUBCASE("strictly unimodal map yields a single one-pixel component") {
    const Matrix m = bump_map(11, 11, 5.0, 5.0, 1.0, 2.0);
    const auto components = local_maxima(m, {1});
    REQUIRE(components.size() == 1);
    REQUIRE(components[0].pixels.size() == 1);
    CHECK(components[0].pixels[0] == std::pair<int, int>{5, 5});
  }

  SUBCASE("two equal peaks give two components") {
    Matrix m(7, 15);
    m(3, 3) = 1.0;
    m(3, 11) = 1.0;
    const auto components = local_maxima(m, {1});
    // The flat zero background forms candidate plateaus as well; count the
    // components that carry the peak value.
    int peak_components = 0;
    for (const auto& component : components) {
      if (component.value == 1.0) ++peak_components;
    }
    CHECK(peak_components == 2);
  }

  SUBCASE("constant matrix is one all-covering component") {
    const auto components = local_maxima(Matrix::constant(6, 7, 0.2), {1});
    REQUIRE(components.size() == 1);
    CHECK(components[0].pixels.size() == 42);
  }

  SUBCASE("candidate pixels equal the neighborhood-scan oracle") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
      const Matrix m = random_map(rng, 16, 16, trial % 2 == 0 ? 0.05 : 0.0);
      const int radius = 1 + static_cast<int>(rng.uniform_int(2));
      const auto components = local_maxima(m, {radius});
      std::set<std::pair<int, int>> got;
      for (const auto& component : components) {
        for (const auto& pixel : component.pixels) got.insert(pixel);
      }
      const auto mask = oracles::local_max_mask_scan(m, radius);
      std::set<std::pair<int, int>> expected;
      for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
          if (mask[y * 16 + x]) expected.insert({x, y});
        }
      }
      CHECK(got == expected);
    }
  }
}

TEST_CASE("detect_peaks") {
  SUBCASE("constant map yields nothing once T reaches the value") {
    const Matrix m = Matrix::constant(16, 16, 0.4);
    CHECK(detect_peaks(m, {0.0, 0.4, 5.0}).empty());
    CHECK(detect_peaks(m, {0.1, 0.5, 5.0}).empty());
  }

  SUBCASE("published pooling parameters find a single planted bump") {
    const Matrix m = bump_map(41, 41, 20.0, 20.0, 0.9, 3.0);
    const auto detections = detect_peaks(m, {0.024, 0.76, 10.0}, {1}, "s");
    REQUIRE(detections.size() == 1);
    CHECK(detections[0].x == 20);
    CHECK(detections[0].y == 20);
    CHECK(detections[0].slice_id == "s");
    CHECK(detections[0].score > 0.76);
  }

  SUBCASE("minimum distance suppression keeps the higher peak") {
    const Matrix two = add(bump_map(21, 31, 12.0, 10.0, 0.9, 1.5),
                           bump_map(21, 31, 18.0, 10.0, 0.7, 1.5));
    const auto far_apart = detect_peaks(two, {0.01, 0.3, 10.0});
    REQUIRE(far_apart.size() == 1);
    CHECK(far_apart[0].x == 12);

    const auto close_ok = detect_peaks(two, {0.01, 0.3, 5.0});
    REQUIRE(close_ok.size() == 2);
    CHECK(close_ok[0].x == 12);  // sorted by value descending
    CHECK(close_ok[1].x == 18);
  }

  SUBCASE("matches the stage-wise reference on random maps") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix m = random_map(rng, 16, 16, 0.05);
      const double h = 0.05 * (1 + rng.uniform_int(4));
      const double T = 0.05 * (4 + rng.uniform_int(8));
      const double d = 1.0 + rng.uniform(0.0, 6.0);
      const auto got = detect_peaks(m, {h, T, d});
      const auto expected = oracles::detect_reference(m, h, T, d, 1);
      REQUIRE(got.size() == expected.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].x == expected[i].x);
        CHECK(got[i].y == expected[i].y);
        CHECK(got[i].score == expected[i].value);
      }
    }
  }

  SUBCASE("returned peaks respect the distance and threshold invariants") {
    Rng rng(43);
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix m = random_map(rng, 20, 20);
      const DetectorParams params{0.05, 0.55, 3.0};
      const auto detections = detect_peaks(m, params);
      for (std::size_t i = 0; i < detections.size(); ++i) {
        CHECK(detections[i].score > params.T);
        if (i > 0) CHECK(detections[i - 1].score >= detections[i].score);
        for (std::size_t j = 0; j < i; ++j) {
          const double dx = detections[i].x - detections[j].x;
          const double dy = detections[i].y - detections[j].y;
          CHECK(std::sqrt(dx * dx + dy * dy) >= params.d);
        }
      }
    }
  }

  SUBCASE("shifting map and threshold together leaves detections unchanged") {
    Rng rng(47);
    for (int trial = 0; trial < 20; ++trial) {
      // Values quantized to 1/64 and shifted by an integer keep the float
      // arithmetic exact, so the comparison can be strict.
      const Matrix m = random_map(rng, 16, 16, 1.0 / 64.0);
      Matrix shifted(16, 16);
      for (std::size_t i = 0; i < m.size(); ++i) {
        shifted.values()[i] = m.values()[i] + 3.0;
      }
      const DetectorParams params{0.125, 0.5, 4.0};
      const DetectorParams shifted_params{0.125, 3.5, 4.0};
      const auto base = detect_peaks(m, params);
      const auto moved = detect_peaks(shifted, shifted_params);
      REQUIRE(base.size() == moved.size());
      for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(base[i].x == moved[i].x);
        CHECK(base[i].y == moved[i].y);
        CHECK(moved[i].score == base[i].score + 3.0);
      }
    }
  }
}
