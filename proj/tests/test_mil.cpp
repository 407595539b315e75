#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ichdet/errors.hpp"
#include "ichdet/mil.hpp"
#include "ichdet/rng.hpp"
#include "ichdet/synth.hpp"
#include "oracles.hpp"

using namespace ichdet;

namespace {

EmbeddingBag row_bag(std::vector<double> values) {
  const std::size_t k = values.size();
  return EmbeddingBag(Matrix(k, 1, std::move(values)), 1, k);
}

EmbeddingBag random_bag(Rng& rng, std::size_t K, std::size_t M) {
  std::vector<double> values(K * M);
  for (auto& v : values) v = rng.normal(0.0, 1.0);
  return EmbeddingBag(Matrix(K, M, std::move(values)), 1, K);
}

AttentionParams random_params(Rng& rng, std::size_t M, std::size_t L) {
  AttentionParams params;
  params.w.resize(L);
  params.V = Matrix(L, M);
  params.U = Matrix(L, M);
  for (auto& v : params.w) v = rng.normal(0.0, 0.7);
  for (auto& v : params.V.values()) v = rng.normal(0.0, 0.7);
  for (auto& v : params.U.values()) v = rng.normal(0.0, 0.7);
  return params;
}

ClassifierHead random_head(Rng& rng, std::size_t M) {
  ClassifierHead head;
  head.theta.resize(M);
  for (auto& v : head.theta) v = rng.normal(0.0, 0.7);
  head.bias = rng.normal(0.0, 0.5);
  return head;
}

double forward_loss(const EmbeddingBag& bag, const AttentionParams& params,
                    const ClassifierHead& head, int label, double pos_weight) {
  const auto a = gated_attention_weights(bag, params);
  const auto z = attention_pool(bag, a);
  return weighted_cross_entropy(classify(z, head), label, pos_weight);
}

/// Central finite differences over every parameter entry; returns the
/// normwise relative error against the analytic gradients.
double gradient_relative_error(const EmbeddingBag& bag, AttentionParams params,
                               ClassifierHead head, int label, double pos_weight,
                               double step = 1e-6) {
  const HeadGradients analytic = backward(bag, params, head, label, pos_weight);

  std::vector<double*> slots;
  std::vector<double> expected;
  for (std::size_t l = 0; l < params.w.size(); ++l) {
    slots.push_back(&params.w[l]);
    expected.push_back(analytic.dw[l]);
  }
  for (std::size_t i = 0; i < params.V.size(); ++i) {
    slots.push_back(&params.V.values()[i]);
    expected.push_back(analytic.dV.values()[i]);
  }
  for (std::size_t i = 0; i < params.U.size(); ++i) {
    slots.push_back(&params.U.values()[i]);
    expected.push_back(analytic.dU.values()[i]);
  }
  for (std::size_t m = 0; m < head.theta.size(); ++m) {
    slots.push_back(&head.theta[m]);
    expected.push_back(analytic.dtheta[m]);
  }
  slots.push_back(&head.bias);
  expected.push_back(analytic.dbias);

  double max_diff = 0.0;
  double fd_norm = 0.0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double saved = *slots[i];
    *slots[i] = saved + step;
    const double up = forward_loss(bag, params, head, label, pos_weight);
    *slots[i] = saved - step;
    const double down = forward_loss(bag, params, head, label, pos_weight);
    *slots[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    max_diff = std::max(max_diff, std::abs(fd - expected[i]));
    fd_norm = std::max(fd_norm, std::abs(fd));
  }
  return max_diff / std::max(fd_norm, 1e-8);
}

}  // namespace

TEST_CASE("max pooling picks the first maximal position") {
  const auto result = max_pool_score(row_bag({0.1, 0.9, 0.3}));
  CHECK(result.z == 0.9);
  CHECK(result.argmax == 1);

  const auto tied = max_pool_score(row_bag({0.4, 0.4, 0.4}));
  CHECK(tied.z == 0.4);
  CHECK(tied.argmax == 0);

  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> values(1 + rng.uniform_int(32));
    for (auto& v : values) v = rng.uniform(-10.0, 10.0);
    const auto got = max_pool_score(row_bag(values));
    double best = values[0];
    std::size_t best_k = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
      if (values[k] > best) {
        best = values[k];
        best_k = k;
      }
    }
    CHECK(got.z == best);
    CHECK(got.argmax == best_k);
  }

  CHECK_THROWS_AS(max_pool_score(EmbeddingBag(Matrix(2, 2, {1, 2, 3, 4}), 1, 2)),
                  shape_error);
}

TEST_CASE("gated attention weights") {
  Rng rng(9);

  SUBCASE("single instance gets weight 1") {
    const auto bag = random_bag(rng, 1, 3);
    const auto params = random_params(rng, 3, 2);
    const auto a = gated_attention_weights(bag, params);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == 1.0);
  }

  SUBCASE("identical instances share weight uniformly") {
    std::vector<double> row = {0.3, -0.7};
    std::vector<double> values;
    for (int k = 0; k < 5; ++k) values.insert(values.end(), row.begin(), row.end());
    const EmbeddingBag bag(Matrix(5, 2, values), 1, 5);
    const auto a = gated_attention_weights(bag, random_params(rng, 2, 3));
    for (const double v : a) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
  }

  SUBCASE("matches the scalar-loop evaluation") {
    const EmbeddingBag bag(Matrix(3, 2, {0.2, -0.4, 1.1, 0.5, -0.9, 0.3}), 1, 3);
    AttentionParams params;
    params.w = {0.6, -0.8};
    params.V = Matrix(2, 2, {0.5, -0.3, 0.2, 0.9});
    params.U = Matrix(2, 2, {-0.1, 0.4, 0.8, -0.6});
    const auto got = gated_attention_weights(bag, params);
    const auto expected =
        oracles::gated_attention_scalar(bag.H, params.w, params.V, params.U);
    REQUIRE(got.size() == expected.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
      CHECK(got[k] == doctest::Approx(expected[k]).epsilon(1e-12));
    }
  }

  SUBCASE("normalization, permutation equivariance, softmax shift invariance") {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t K = 2 + rng.uniform_int(6);
      const std::size_t M = 1 + rng.uniform_int(4);
      const std::size_t L = 1 + rng.uniform_int(4);
      const auto bag = random_bag(rng, K, M);
      const auto params = random_params(rng, M, L);
      const auto a = gated_attention_weights(bag, params);

      const double sum = std::accumulate(a.begin(), a.end(), 0.0);
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      for (const double v : a) {
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
      }

      // Permute the bag rows; weights must permute along, pooled z unchanged.
      std::vector<std::size_t> perm(K);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      Rng perm_rng(trial);
      perm_rng.shuffle(perm);
      Matrix permuted(K, M);
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t m = 0; m < M; ++m) permuted(k, m) = bag.H(perm[k], m);
      }
      const EmbeddingBag permuted_bag(permuted, 1, K);
      const auto a_perm = gated_attention_weights(permuted_bag, params);
      for (std::size_t k = 0; k < K; ++k) {
        CHECK(std::abs(a_perm[k] - a[perm[k]]) <= 1e-12);
      }
      const auto z = attention_pool(bag, a);
      const auto z_perm = attention_pool(permuted_bag, a_perm);
      for (std::size_t m = 0; m < M; ++m) {
        CHECK(std::abs(z[m] - z_perm[m]) <= 1e-12);
      }

      // Adding a constant to every score leaves the softmax unchanged.
      auto scores = gated_attention_scores(bag, params);
      const auto base = stable_softmax(scores);
      for (auto& s : scores) s += 7.25;
      const auto shifted = stable_softmax(scores);
      for (std::size_t k = 0; k < K; ++k) {
        CHECK(std::abs(base[k] - shifted[k]) <= 1e-12);
      }
    }
  }

  SUBCASE("shape mismatch") {
    const auto bag = random_bag(rng, 3, 2);
    CHECK_THROWS_AS(gated_attention_weights(bag, random_params(rng, 5, 2)),
                    shape_error);
  }
}

TEST_CASE("attention pooling") {
  Rng rng(13);

  SUBCASE("one-hot selects a row") {
    const auto bag = random_bag(rng, 4, 3);
    std::vector<double> a = {0.0, 0.0, 1.0, 0.0};
    const auto z = attention_pool(bag, a);
    for (std::size_t m = 0; m < 3; ++m) CHECK(z[m] == bag.H(2, m));
  }

  SUBCASE("uniform weights average columns") {
    const auto bag = random_bag(rng, 5, 2);
    const std::vector<double> a(5, 0.2);
    const auto z = attention_pool(bag, a);
    for (std::size_t m = 0; m < 2; ++m) {
      double mean = 0.0;
      for (std::size_t k = 0; k < 5; ++k) mean += bag.H(k, m) / 5.0;
      CHECK(z[m] == doctest::Approx(mean).epsilon(1e-12));
    }
  }

  SUBCASE("matches the double-loop oracle and stays in the convex hull") {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t K = 1 + rng.uniform_int(8);
      const std::size_t M = 1 + rng.uniform_int(5);
      const auto bag = random_bag(rng, K, M);
      std::vector<double> a(K);
      double total = 0.0;
      for (auto& v : a) {
        v = rng.uniform(0.01, 1.0);
        total += v;
      }
      for (auto& v : a) v /= total;
      const auto z = attention_pool(bag, a);
      const auto expected = oracles::attention_pool_loops(bag.H, a);
      for (std::size_t m = 0; m < M; ++m) {
        CHECK(z[m] == doctest::Approx(expected[m]).epsilon(1e-12));
        double lo = bag.H(0, m);
        double hi = bag.H(0, m);
        for (std::size_t k = 1; k < K; ++k) {
          lo = std::min(lo, bag.H(k, m));
          hi = std::max(hi, bag.H(k, m));
        }
        CHECK(z[m] >= lo - 1e-12);
        CHECK(z[m] <= hi + 1e-12);
      }
    }
  }

  SUBCASE("rejects bad weight vectors") {
    const auto bag = random_bag(rng, 3, 2);
    CHECK_THROWS_AS(attention_pool(bag, std::vector<double>{0.5, 0.5}), shape_error);
    CHECK_THROWS_AS(attention_pool(bag, std::vector<double>{0.5, 0.2, 0.2}),
                    std::invalid_argument);
  }
}

TEST_CASE("classifier and loss scalar contracts") {
  const ClassifierHead zero{{0.0, 0.0}, 0.0};
  CHECK(classify(std::vector<double>{1.0, -2.0}, zero) == 0.5);

  const ClassifierHead saturated{{0.0}, 50.0};
  CHECK(classify(std::vector<double>{0.0}, saturated) >= 1.0 - 1e-9);

  CHECK(weighted_cross_entropy(0.5, 1, 1.0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(weighted_cross_entropy(1.0 - 1e-12, 1, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-9));

  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t M = 1 + rng.uniform_int(4);
    std::vector<double> z(M);
    for (auto& v : z) v = rng.normal(0.0, 1.0);
    const auto head = random_head(rng, M);
    double logit = head.bias;
    for (std::size_t m = 0; m < M; ++m) logit += head.theta[m] * z[m];
    const double expected_p = 1.0 / (1.0 + std::exp(-logit));
    const double p = classify(z, head);
    CHECK(p == doctest::Approx(expected_p).epsilon(1e-12));

    const int y = rng.uniform_int(2) == 0 ? 0 : 1;
    const double pos_weight = rng.uniform(0.5, 3.0);
    const double expected_loss =
        -(pos_weight * y * std::log(p) + (1 - y) * std::log(1.0 - p));
    CHECK(weighted_cross_entropy(p, y, pos_weight) ==
          doctest::Approx(expected_loss).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  SUBCASE("all-zero parameters on a symmetric bag") {
    const EmbeddingBag bag(Matrix(4, 2, {1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0}),
                           2, 2);
    AttentionParams params;
    params.w = {0.0, 0.0};
    params.V = Matrix(2, 2);
    params.U = Matrix(2, 2);
    const ClassifierHead head{{0.0, 0.0}, 0.0};
    const auto grads = backward(bag, params, head, 1, 1.0);
    for (const double g : grads.dw) CHECK(std::isfinite(g));
    CHECK(gradient_relative_error(bag, params, head, 1, 1.0) < 1e-6);
  }

  SUBCASE("directional derivative vanishes at a 1-parameter optimum") {
    Rng rng(31);
    const auto bag0 = random_bag(rng, 3, 2);
    const auto bag1 = random_bag(rng, 3, 2);
    const auto params = random_params(rng, 2, 2);
    ClassifierHead head = random_head(rng, 2);

    // Ternary-search the bias that minimizes the two-bag loss.
    double lo = -10.0;
    double hi = 10.0;
    auto total_loss = [&](double bias) {
      ClassifierHead probe = head;
      probe.bias = bias;
      return forward_loss(bag0, params, probe, 0, 1.0) +
             forward_loss(bag1, params, probe, 1, 1.0);
    };
    for (int iter = 0; iter < 200; ++iter) {
      const double m1 = lo + (hi - lo) / 3.0;
      const double m2 = hi - (hi - lo) / 3.0;
      if (total_loss(m1) < total_loss(m2)) {
        hi = m2;
      } else {
        lo = m1;
      }
    }
    head.bias = 0.5 * (lo + hi);
    const double derivative = backward(bag0, params, head, 0, 1.0).dbias +
                              backward(bag1, params, head, 1, 1.0).dbias;
    CHECK(std::abs(derivative) < 1e-6);
  }

  SUBCASE("100 random small instances stay under 1e-6 relative error") {
    Rng rng(37);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t K = 1 + rng.uniform_int(8);
      const std::size_t M = 1 + rng.uniform_int(4);
      const std::size_t L = 1 + rng.uniform_int(4);
      const auto bag = random_bag(rng, K, M);
      const auto params = random_params(rng, M, L);
      const auto head = random_head(rng, M);
      const int y = rng.uniform_int(2) == 0 ? 0 : 1;
      const double pos_weight = rng.uniform(0.5, 3.0);
      worst = std::max(worst,
                       gradient_relative_error(bag, params, head, y, pos_weight));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("training decreases loss deterministically") {
  BagConfig cfg;
  cfg.K = 8;
  cfg.M = 4;
  cfg.seed = 99;
  const auto synth_bags = generate_bags(cfg, 20, 20);
  std::vector<LabeledBag> dataset;
  for (const auto& b : synth_bags) dataset.push_back({b.bag, b.label});

  TrainConfig train_cfg;
  train_cfg.attention_dim = 8;
  train_cfg.epochs = 15;
  train_cfg.seed = 7;

  const TrainResult result = train_mil_head(dataset, train_cfg);
  CHECK_FALSE(result.single_class_warning);
  REQUIRE(result.loss_history.size() == train_cfg.epochs + 1);
  CHECK(result.loss_history.back() <= result.loss_history.front());

  SUBCASE("zero epochs returns the seeded initialization unchanged") {
    TrainConfig zero_cfg = train_cfg;
    zero_cfg.epochs = 0;
    const TrainResult untouched = train_mil_head(dataset, zero_cfg);
    const AttentionParams init =
        init_attention_params(cfg.M, zero_cfg.attention_dim, zero_cfg.seed);
    const ClassifierHead init_head = init_classifier_head(cfg.M, zero_cfg.seed);
    CHECK(untouched.params.w == init.w);
    CHECK(untouched.params.V == init.V);
    CHECK(untouched.params.U == init.U);
    CHECK(untouched.head.theta == init_head.theta);
    CHECK(untouched.head.bias == init_head.bias);
    CHECK(untouched.loss_history.size() == 1);
  }

  SUBCASE("identical seeds give bitwise-identical trajectories") {
    const TrainResult again = train_mil_head(dataset, train_cfg);
    CHECK(again.params.w == result.params.w);
    CHECK(again.params.V == result.params.V);
    CHECK(again.params.U == result.params.U);
    CHECK(again.head.theta == result.head.theta);
    CHECK(again.head.bias == result.head.bias);
    CHECK(again.loss_history == result.loss_history);
  }

  SUBCASE("single-class dataset warns but trains") {
    std::vector<LabeledBag> positives(dataset.begin(), dataset.begin() + 20);
    TrainConfig quick = train_cfg;
    quick.epochs = 1;
    const TrainResult warned = train_mil_head(positives, quick);
    CHECK(warned.single_class_warning);
  }
}

TEST_CASE("attention map resizing") {
  SUBCASE("matching target is a pure reshape") {
    const std::vector<double> a = {0.1, 0.2, 0.3, 0.4};
    const Matrix map = attention_map_from_weights(a, 2, 2, 2, 2);
    CHECK(map(0, 0) == 0.1);
    CHECK(map(0, 1) == 0.2);
    CHECK(map(1, 0) == 0.3);
    CHECK(map(1, 1) == 0.4);
  }

  SUBCASE("constant weights resize to a constant 1/K map") {
    const std::vector<double> a(6, 1.0 / 6.0);
    const Matrix map = attention_map_from_weights(a, 2, 3, 8, 9);
    CHECK(map.rows() == 8);
    CHECK(map.cols() == 9);
    for (const double v : map.values()) {
      CHECK(v == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    }
  }

  SUBCASE("2x2 to 4x4 matches hand-computed align-corners bilinear") {
    const std::vector<double> a = {0.0, 0.0, 0.0, 1.0};
    const Matrix map = attention_map_from_weights(a, 2, 2, 4, 4);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        const double expected =
            (static_cast<double>(i) / 3.0) * (static_cast<double>(j) / 3.0);
        CHECK(map(i, j) == doctest::Approx(expected).epsilon(1e-14));
      }
    }
  }

  SUBCASE("rejects shrinking targets and non-distributions") {
    const std::vector<double> a = {0.25, 0.25, 0.25, 0.25};
    CHECK_THROWS_AS(attention_map_from_weights(a, 2, 2, 1, 4), shape_error);
    const std::vector<double> bad = {0.5, 0.5, 0.5, 0.5};
    CHECK_THROWS_AS(attention_map_from_weights(bad, 2, 2, 4, 4),
                    std::invalid_argument);
  }
}

TEST_CASE("activation maps from scalar features") {
  SUBCASE("constant features collapse to zero") {
    const EmbeddingBag bag(Matrix::constant(9, 1, 3.7), 3, 3);
    const Matrix map = activation_map_from_features(bag, 6, 6);
    for (const double v : map.values()) CHECK(v == 0.0);
  }

  SUBCASE("one-hot grid becomes a single bilinear bump") {
    std::vector<double> features(9, 0.0);
    features[4] = 1.0;  // grid center of a 3x3
    const EmbeddingBag bag(Matrix(9, 1, features), 3, 3);
    const Matrix map = activation_map_from_features(bag, 5, 5);
    const double tent[5] = {0.0, 0.5, 1.0, 0.5, 0.0};
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        CHECK(map(i, j) == doctest::Approx(tent[i] * tent[j]).epsilon(1e-14));
      }
    }
  }

  SUBCASE("resized argmax stays within one cell of the grid argmax") {
    Rng rng(43);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t g = 3 + rng.uniform_int(4);          // 3..6
      const std::size_t scale = 2 + rng.uniform_int(3);      // 2..4
      const std::size_t target = scale * (g - 1) + 1;
      std::vector<double> features(g * g);
      for (auto& v : features) v = rng.uniform(0.0, 1.0);
      const EmbeddingBag bag(Matrix(g * g, 1, features), g, g);

      std::size_t grid_arg = 0;
      for (std::size_t i = 1; i < features.size(); ++i) {
        if (features[i] > features[grid_arg]) grid_arg = i;
      }
      const auto grid_y = static_cast<double>(grid_arg / g);
      const auto grid_x = static_cast<double>(grid_arg % g);

      const Matrix map = activation_map_from_features(bag, target, target);
      std::size_t map_arg = 0;
      for (std::size_t i = 1; i < map.size(); ++i) {
        if (map.values()[i] > map.values()[map_arg]) map_arg = i;
      }
      const double map_y = static_cast<double>(map_arg / target) /
                           static_cast<double>(scale);
      const double map_x = static_cast<double>(map_arg % target) /
                           static_cast<double>(scale);
      CHECK(std::abs(map_y - grid_y) <= 1.0);
      CHECK(std::abs(map_x - grid_x) <= 1.0);
    }
  }

  SUBCASE("requires scalar features") {
    CHECK_THROWS_AS(
        activation_map_from_features(EmbeddingBag(Matrix(2, 2, {1, 2, 3, 4}), 1, 2), 4, 4),
        shape_error);
  }
}
