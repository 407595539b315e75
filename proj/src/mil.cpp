#include "ichdet/mil.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ichdet/errors.hpp"
#include "ichdet/io.hpp"
#include "ichdet/resize.hpp"
#include "ichdet/rng.hpp"

namespace fs = std::filesystem;

namespace ichdet {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

/// Pre-softmax scores s_k plus the tanh/sigmoid branch activations, reused by
/// the backward pass.
struct AttentionForward {
  std::vector<double> scores;  // K
  Matrix tanh_branch;          // K x L
  Matrix gate_branch;          // K x L
};

AttentionForward attention_forward(const EmbeddingBag& bag,
                                   const AttentionParams& params) {
  params.validate();
  if (params.embedding_dim() != bag.embedding_dim()) {
    throw shape_error("attention params expect M=" +
                      std::to_string(params.embedding_dim()) + ", bag has M=" +
                      std::to_string(bag.embedding_dim()));
  }
  const std::size_t K = bag.instance_count();
  const std::size_t L = params.attention_dim();
  AttentionForward fwd;
  fwd.scores.resize(K);
  fwd.tanh_branch = Matrix(K, L);
  fwd.gate_branch = Matrix(K, L);
  for (std::size_t k = 0; k < K; ++k) {
    const auto h = bag.H.row(k);
    double score = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      const double t = std::tanh(dot(params.V.row(l), h));
      const double g = sigmoid(dot(params.U.row(l), h));
      fwd.tanh_branch(k, l) = t;
      fwd.gate_branch(k, l) = g;
      score += params.w[l] * t * g;
    }
    fwd.scores[k] = score;
  }
  return fwd;
}

void check_distribution(std::span<const double> attention, std::size_t K) {
  if (attention.size() != K) {
    throw shape_error("attention length " + std::to_string(attention.size()) +
                      " does not match bag size " + std::to_string(K));
  }
  const double sum = std::accumulate(attention.begin(), attention.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("attention weights must sum to 1, got " +
                                std::to_string(sum));
  }
}

}  // namespace

EmbeddingBag::EmbeddingBag(Matrix embeddings, std::size_t rows, std::size_t cols)
    : H(std::move(embeddings)), grid_rows(rows), grid_cols(cols) {
  if (grid_rows * grid_cols != H.rows()) {
    throw shape_error("bag grid " + std::to_string(grid_rows) + "x" +
                      std::to_string(grid_cols) + " does not cover K=" +
                      std::to_string(H.rows()));
  }
}

void AttentionParams::validate() const {
  if (V.rows() != w.size() || !V.same_shape(U)) {
    throw shape_error("attention params shapes inconsistent: w has " +
                      std::to_string(w.size()) + " entries, V is " +
                      std::to_string(V.rows()) + "x" + std::to_string(V.cols()) +
                      ", U is " + std::to_string(U.rows()) + "x" +
                      std::to_string(U.cols()));
  }
}

std::vector<double> gated_attention_scores(const EmbeddingBag& bag,
                                           const AttentionParams& params) {
  return attention_forward(bag, params).scores;
}

std::vector<double> stable_softmax(std::span<const double> scores) {
  if (scores.empty()) throw shape_error("softmax of an empty score vector");
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] - top);
    total += out[k];
  }
  for (double& v : out) v /= total;
  return out;
}

MaxPoolResult max_pool_score(const EmbeddingBag& bag) {
  if (bag.embedding_dim() != 1) {
    throw shape_error("max_pool_score requires a scalar feature map (M == 1)");
  }
  MaxPoolResult result{bag.H(0, 0), 0};
  for (std::size_t k = 1; k < bag.instance_count(); ++k) {
    if (bag.H(k, 0) > result.z) {
      result.z = bag.H(k, 0);
      result.argmax = k;
    }
  }
  return result;
}

std::vector<double> gated_attention_weights(const EmbeddingBag& bag,
                                            const AttentionParams& params) {
  return stable_softmax(attention_forward(bag, params).scores);
}

std::vector<double> attention_pool(const EmbeddingBag& bag,
                                   std::span<const double> attention) {
  check_distribution(attention, bag.instance_count());
  std::vector<double> z(bag.embedding_dim(), 0.0);
  for (std::size_t k = 0; k < bag.instance_count(); ++k) {
    const auto h = bag.H.row(k);
    for (std::size_t m = 0; m < z.size(); ++m) z[m] += attention[k] * h[m];
  }
  return z;
}

double classify(std::span<const double> z, const ClassifierHead& head) {
  if (z.size() != head.theta.size()) {
    throw shape_error("classifier expects " + std::to_string(head.theta.size()) +
                      " features, got " + std::to_string(z.size()));
  }
  return sigmoid(dot(head.theta, z) + head.bias);
}

double weighted_cross_entropy(double p, int label, double pos_weight) {
  if (!(pos_weight > 0.0)) {
    throw std::invalid_argument("pos_weight must be > 0");
  }
  const double q = std::clamp(p, 1e-12, 1.0 - 1e-12);
  const double y = label != 0 ? 1.0 : 0.0;
  return -(pos_weight * y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

HeadGradients backward(const EmbeddingBag& bag, const AttentionParams& params,
                       const ClassifierHead& head, int label, double pos_weight) {
  const std::size_t K = bag.instance_count();
  const std::size_t M = bag.embedding_dim();
  const std::size_t L = params.attention_dim();

  const AttentionForward fwd = attention_forward(bag, params);
  const std::vector<double> a = stable_softmax(fwd.scores);
  std::vector<double> z(M, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const auto h = bag.H.row(k);
    for (std::size_t m = 0; m < M; ++m) z[m] += a[k] * h[m];
  }
  const double p = classify(z, head);
  const double y = label != 0 ? 1.0 : 0.0;

  HeadGradients grad;
  grad.loss = weighted_cross_entropy(p, label, pos_weight);
  grad.probability = p;

  // d loss / d logit of the classifier.
  const double dq = (1.0 - y) * p - pos_weight * y * (1.0 - p);

  grad.dtheta.resize(M);
  for (std::size_t m = 0; m < M; ++m) grad.dtheta[m] = dq * z[m];
  grad.dbias = dq;

  // d loss / d z, then d loss / d a_k.
  std::vector<double> dz(M);
  for (std::size_t m = 0; m < M; ++m) dz[m] = dq * head.theta[m];
  std::vector<double> da(K);
  for (std::size_t k = 0; k < K; ++k) da[k] = dot(dz, bag.H.row(k));

  // Softmax Jacobian: ds_k = a_k (da_k - sum_j a_j da_j).
  double weighted = 0.0;
  for (std::size_t k = 0; k < K; ++k) weighted += a[k] * da[k];
  std::vector<double> ds(K);
  for (std::size_t k = 0; k < K; ++k) ds[k] = a[k] * (da[k] - weighted);

  grad.dw.assign(L, 0.0);
  grad.dV = Matrix(L, M);
  grad.dU = Matrix(L, M);
  for (std::size_t k = 0; k < K; ++k) {
    const auto h = bag.H.row(k);
    for (std::size_t l = 0; l < L; ++l) {
      const double t = fwd.tanh_branch(k, l);
      const double g = fwd.gate_branch(k, l);
      grad.dw[l] += ds[k] * t * g;
      const double v_coef = ds[k] * params.w[l] * g * (1.0 - t * t);
      const double u_coef = ds[k] * params.w[l] * t * g * (1.0 - g);
      for (std::size_t m = 0; m < M; ++m) {
        grad.dV(l, m) += v_coef * h[m];
        grad.dU(l, m) += u_coef * h[m];
      }
    }
  }
  return grad;
}

AttentionParams init_attention_params(std::size_t embedding_dim,
                                      std::size_t attention_dim,
                                      std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x41747450ull));  // attention stream
  AttentionParams params;
  params.w.resize(attention_dim);
  params.V = Matrix(attention_dim, embedding_dim);
  params.U = Matrix(attention_dim, embedding_dim);
  for (auto& v : params.w) v = rng.normal(0.0, 0.1);
  for (auto& v : params.V.values()) v = rng.normal(0.0, 0.1);
  for (auto& v : params.U.values()) v = rng.normal(0.0, 0.1);
  return params;
}

ClassifierHead init_classifier_head(std::size_t embedding_dim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x436c7348ull));  // classifier stream
  ClassifierHead head;
  head.theta.resize(embedding_dim);
  for (auto& v : head.theta) v = rng.normal(0.0, 0.1);
  head.bias = 0.0;
  return head;
}

TrainResult train_mil_head(std::span<const LabeledBag> dataset,
                           const TrainConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
  const std::size_t M = dataset.front().bag.embedding_dim();
  for (const auto& item : dataset) {
    if (item.bag.embedding_dim() != M) {
      throw shape_error("bags in one dataset must share the embedding dimension");
    }
  }

  TrainResult result;
  result.params = init_attention_params(M, config.attention_dim, config.seed);
  result.head = init_classifier_head(M, config.seed);

  const bool has_pos = std::any_of(dataset.begin(), dataset.end(),
                                   [](const LabeledBag& b) { return b.label != 0; });
  const bool has_neg = std::any_of(dataset.begin(), dataset.end(),
                                   [](const LabeledBag& b) { return b.label == 0; });
  result.single_class_warning = !(has_pos && has_neg);

  auto average_loss = [&] {
    double total = 0.0;
    for (const auto& item : dataset) {
      const auto a = gated_attention_weights(item.bag, result.params);
      const auto z = attention_pool(item.bag, a);
      const double p = classify(z, result.head);
      total += weighted_cross_entropy(p, item.label, config.pos_weight);
    }
    return total / static_cast<double>(dataset.size());
  };
  result.loss_history.push_back(average_loss());

  // Momentum buffers, one per parameter block.
  std::vector<double> vel_w(config.attention_dim, 0.0);
  Matrix vel_V(config.attention_dim, M);
  Matrix vel_U(config.attention_dim, M);
  std::vector<double> vel_theta(M, 0.0);
  double vel_bias = 0.0;

  Rng order_rng(derive_seed(config.seed, 0x4f726472ull));  // epoch-order stream
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (const std::size_t idx : order) {
      const auto& item = dataset[idx];
      const HeadGradients g =
          backward(item.bag, result.params, result.head, item.label, config.pos_weight);
      auto step = [&](double& velocity, double& param, double gradient) {
        velocity = config.momentum * velocity - config.learning_rate * gradient;
        param += velocity;
      };
      for (std::size_t l = 0; l < config.attention_dim; ++l) {
        step(vel_w[l], result.params.w[l], g.dw[l]);
      }
      for (std::size_t i = 0; i < vel_V.size(); ++i) {
        step(vel_V.values()[i], result.params.V.values()[i], g.dV.values()[i]);
        step(vel_U.values()[i], result.params.U.values()[i], g.dU.values()[i]);
      }
      for (std::size_t m = 0; m < M; ++m) {
        step(vel_theta[m], result.head.theta[m], g.dtheta[m]);
      }
      step(vel_bias, result.head.bias, g.dbias);
    }
    result.loss_history.push_back(average_loss());
  }
  return result;
}

Matrix attention_map_from_weights(std::span<const double> attention,
                                  std::size_t grid_rows, std::size_t grid_cols,
                                  std::size_t target_rows, std::size_t target_cols) {
  if (attention.size() != grid_rows * grid_cols) {
    throw shape_error("attention length does not match the grid");
  }
  if (target_rows < grid_rows || target_cols < grid_cols) {
    throw shape_error("target resolution must not be smaller than the grid");
  }
  const double sum = std::accumulate(attention.begin(), attention.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("attention weights must sum to 1 before resizing");
  }
  Matrix grid(grid_rows, grid_cols,
              std::vector<double>(attention.begin(), attention.end()));
  return bilinear_resize(grid, target_rows, target_cols);
}

Matrix activation_map_from_features(const EmbeddingBag& bag,
                                    std::size_t target_rows,
                                    std::size_t target_cols) {
  if (bag.embedding_dim() != 1) {
    throw shape_error("activation map requires a scalar feature map (M == 1)");
  }
  if (target_rows < bag.grid_rows || target_cols < bag.grid_cols) {
    throw shape_error("target resolution must not be smaller than the grid");
  }
  const double low = bag.H.min_value();
  std::vector<double> shifted(bag.instance_count());
  for (std::size_t k = 0; k < shifted.size(); ++k) shifted[k] = bag.H(k, 0) - low;
  Matrix grid(bag.grid_rows, bag.grid_cols, std::move(shifted));
  return bilinear_resize(grid, target_rows, target_cols);
}

void save_bag(const EmbeddingBag& bag, int label, const fs::path& stem) {
  fs::path amap = stem;
  amap += ".amap";
  write_matrix(bag.H, amap, MatrixFormat::amap);
  const nlohmann::json sidecar = {{"grid_rows", bag.grid_rows},
                                  {"grid_cols", bag.grid_cols},
                                  {"label", label}};
  fs::path json_path = stem;
  json_path += ".json";
  atomic_write(json_path, sidecar.dump(2) + "\n");
}

std::pair<EmbeddingBag, int> load_bag(const fs::path& stem) {
  fs::path amap = stem;
  amap += ".amap";
  fs::path json_path = stem;
  json_path += ".json";
  Matrix H = read_matrix(amap, MatrixFormat::amap);
  std::ifstream in(json_path);
  if (!in) throw io_error("cannot open " + json_path.string());
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("grid_rows") ||
      !doc.contains("grid_cols") || !doc.contains("label")) {
    throw format_error(json_path.string() +
                       ": expected {grid_rows, grid_cols, label}");
  }
  const auto grid_rows = doc["grid_rows"].get<std::size_t>();
  const auto grid_cols = doc["grid_cols"].get<std::size_t>();
  const int label = doc["label"].get<int>();
  try {
    return {EmbeddingBag(std::move(H), grid_rows, grid_cols), label};
  } catch (const shape_error& e) {
    throw format_error(json_path.string() + ": " + e.what());
  }
}

void save_head_params(const AttentionParams& params, const ClassifierHead& head,
                      const fs::path& dir) {
  params.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  write_matrix(Matrix(params.w.size(), 1, params.w), dir / "w.amap",
               MatrixFormat::amap);
  write_matrix(params.V, dir / "V.amap", MatrixFormat::amap);
  write_matrix(params.U, dir / "U.amap", MatrixFormat::amap);
  write_matrix(Matrix(head.theta.size(), 1, head.theta), dir / "theta.amap",
               MatrixFormat::amap);
  const nlohmann::json doc = {{"bias", head.bias}};
  atomic_write(dir / "params.json", doc.dump(2) + "\n");
}

std::pair<AttentionParams, ClassifierHead> load_head_params(const fs::path& dir) {
  AttentionParams params;
  const Matrix w = read_matrix(dir / "w.amap", MatrixFormat::amap);
  params.w.assign(w.values().begin(), w.values().end());
  params.V = read_matrix(dir / "V.amap", MatrixFormat::amap);
  params.U = read_matrix(dir / "U.amap", MatrixFormat::amap);
  try {
    params.validate();
  } catch (const shape_error& e) {
    throw format_error(dir.string() + ": " + e.what());
  }
  ClassifierHead head;
  const Matrix theta = read_matrix(dir / "theta.amap", MatrixFormat::amap);
  head.theta.assign(theta.values().begin(), theta.values().end());
  std::ifstream in(dir / "params.json");
  if (!in) throw io_error("cannot open " + (dir / "params.json").string());
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("bias") ||
      !doc["bias"].is_number()) {
    throw format_error((dir / "params.json").string() + ": expected {bias}");
  }
  head.bias = doc["bias"].get<double>();
  return {std::move(params), std::move(head)};
}

}  // namespace ichdet
