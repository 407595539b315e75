#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "ichdet/matrix.hpp"

namespace ichdet {

/// A bag of K position-indexed embeddings of dimension M. Row k of H is the
/// embedding at position k; positions form a grid_rows x grid_cols grid in
/// row-major order.
struct EmbeddingBag {
  Matrix H;  // K x M
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;

  EmbeddingBag() = default;
  EmbeddingBag(Matrix embeddings, std::size_t rows, std::size_t cols);

  std::size_t instance_count() const { return H.rows(); }  // K
  std::size_t embedding_dim() const { return H.cols(); }   // M
};

/// Parameters of the gated attention network: score of position k is
/// w^T (tanh(V h_k) * sigmoid(U h_k)), softmaxed over k.
struct AttentionParams {
  std::vector<double> w;  // L
  Matrix V;               // L x M
  Matrix U;               // L x M

  std::size_t attention_dim() const { return w.size(); }  // L
  std::size_t embedding_dim() const { return V.cols(); }  // M
  void validate() const;
};

/// Final linear classifier: sigmoid(theta . z + bias).
struct ClassifierHead {
  std::vector<double> theta;
  double bias = 0.0;
};

struct MaxPoolResult {
  double z = 0.0;
  std::size_t argmax = 0;  // first maximal position in row-major order
};

/// Global max-pooling over a scalar feature map (M must be 1).
MaxPoolResult max_pool_score(const EmbeddingBag& bag);

/// Pre-softmax attention scores s_k = w^T (tanh(V h_k) * sigmoid(U h_k)).
std::vector<double> gated_attention_scores(const EmbeddingBag& bag,
                                           const AttentionParams& params);

/// Softmax with max-score subtraction; never overflows for finite scores.
std::vector<double> stable_softmax(std::span<const double> scores);

/// Softmax attention weights, computed with max-score subtraction. Sums to 1.
std::vector<double> gated_attention_weights(const EmbeddingBag& bag,
                                            const AttentionParams& params);

/// z = sum_k a_k h_k. Requires a to be a distribution over the K positions.
std::vector<double> attention_pool(const EmbeddingBag& bag,
                                   std::span<const double> attention);

/// sigmoid(theta . z + bias), strictly inside (0, 1).
double classify(std::span<const double> z, const ClassifierHead& head);

/// -[pos_weight * y * log(p) + (1-y) * log(1-p)], with p clamped to
/// [1e-12, 1-1e-12] before the logs.
double weighted_cross_entropy(double p, int label, double pos_weight);

/// Loss and analytic gradients of the full attention head (gated attention ->
/// pooling -> classifier -> weighted cross-entropy) for one bag.
struct HeadGradients {
  std::vector<double> dw;
  Matrix dV;
  Matrix dU;
  std::vector<double> dtheta;
  double dbias = 0.0;
  double loss = 0.0;
  double probability = 0.0;
};

HeadGradients backward(const EmbeddingBag& bag, const AttentionParams& params,
                       const ClassifierHead& head, int label, double pos_weight);

struct LabeledBag {
  EmbeddingBag bag;
  int label = 0;
};

struct TrainConfig {
  std::size_t attention_dim = 16;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t epochs = 40;
  double pos_weight = 1.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  AttentionParams params;
  ClassifierHead head;
  /// Entry 0 is the pre-training average loss; entry e is the average loss
  /// after epoch e. Never guaranteed monotone.
  std::vector<double> loss_history;
  bool single_class_warning = false;
};

/// Deterministic seeded initialization used by train_mil_head.
AttentionParams init_attention_params(std::size_t embedding_dim,
                                      std::size_t attention_dim,
                                      std::uint64_t seed);
ClassifierHead init_classifier_head(std::size_t embedding_dim, std::uint64_t seed);

/// SGD with momentum over per-bag gradients, deterministic per seed.
TrainResult train_mil_head(std::span<const LabeledBag> dataset,
                           const TrainConfig& config);

/// Attention weights reshaped onto the bag grid and bilinearly resized
/// (align-corners) to the target resolution. Target must not be smaller than
/// the grid. Input weights must sum to 1 within 1e-9.
Matrix attention_map_from_weights(std::span<const double> attention,
                                  std::size_t grid_rows, std::size_t grid_cols,
                                  std::size_t target_rows, std::size_t target_cols);

/// Scalar feature values (M == 1) reshaped onto the grid, shifted so the
/// minimum is 0, then bilinearly resized.
Matrix activation_map_from_features(const EmbeddingBag& bag,
                                    std::size_t target_rows,
                                    std::size_t target_cols);

/// Bag file layout: <stem>.amap holds the K x M matrix, <stem>.json holds
/// {grid_rows, grid_cols, label}.
void save_bag(const EmbeddingBag& bag, int label,
              const std::filesystem::path& stem);
std::pair<EmbeddingBag, int> load_bag(const std::filesystem::path& stem);

/// Head parameter directory layout: w.amap (L x 1), V.amap, U.amap,
/// theta.amap (M x 1) and params.json holding {bias}.
void save_head_params(const AttentionParams& params, const ClassifierHead& head,
                      const std::filesystem::path& dir);
std::pair<AttentionParams, ClassifierHead> load_head_params(
    const std::filesystem::path& dir);

}  // namespace ichdet
