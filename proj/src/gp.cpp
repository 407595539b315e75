#include "ichdet/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "ichdet/errors.hpp"
#include "ichdet/rng.hpp"
#include "nelder_mead.hpp"

namespace ichdet {

namespace {

constexpr double kSqrt5 = 2.2360679774997896;
constexpr double kTwoPi = 6.283185307179586;
constexpr double kMaxJitter = 1e-4;

double matern52(double r) {
  return (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) * std::exp(-kSqrt5 * r);
}

double scaled_distance(std::span<const double> a, std::span<const double> b,
                       std::span<const double> length_scales) {
  double sum = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double delta = (a[d] - b[d]) / length_scales[d];
    sum += delta * delta;
  }
  return std::sqrt(sum);
}

Eigen::MatrixXd kernel_matrix(const std::vector<std::vector<double>>& inputs,
                              const GpHyperparams& hyper) {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = hyper.signal_variance + hyper.noise_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r = scaled_distance(inputs[i], inputs[j], hyper.length_scales);
      K(i, j) = K(j, i) = hyper.signal_variance * matern52(r);
    }
  }
  return K;
}

/// Cholesky with jitter escalation (x10 per attempt, capped at kMaxJitter).
/// Returns the total diagonal boost applied, or a negative value on failure.
double robust_llt(Eigen::MatrixXd K, Eigen::LLT<Eigen::MatrixXd>& llt) {
  double jitter = 0.0;
  for (;;) {
    llt.compute(K);
    if (llt.info() == Eigen::Success) return jitter;
    const double next = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    if (next > kMaxJitter) return -1.0;
    K.diagonal().array() += next - jitter;
    jitter = next;
  }
}

/// Log marginal likelihood of standardized targets under the hyperparameters,
/// or -inf when the covariance cannot be factorized.
double log_marginal_likelihood(const std::vector<std::vector<double>>& inputs,
                               const Eigen::VectorXd& y,
                               const GpHyperparams& hyper) {
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (robust_llt(kernel_matrix(inputs, hyper), llt) < 0.0) {
    return -std::numeric_limits<double>::infinity();
  }
  const Eigen::VectorXd alpha = llt.solve(y);
  const auto n = static_cast<double>(inputs.size());
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < llt.matrixL().rows(); ++i) {
    log_det += std::log(llt.matrixL()(i, i));
  }
  return -0.5 * y.dot(alpha) - log_det - 0.5 * n * std::log(kTwoPi);
}

struct LogBounds {
  double lo;
  double hi;
};

}  // namespace

GpModel GpModel::fit(std::vector<std::vector<double>> inputs,
                     std::vector<double> targets, const GpConfig& config) {
  if (inputs.size() < 2 || inputs.size() != targets.size()) {
    throw std::invalid_argument("GP fit needs at least 2 (input, target) pairs");
  }
  const std::size_t dim = inputs.front().size();
  for (const auto& x : inputs) {
    if (x.size() != dim) throw shape_error("GP inputs must share one dimension");
  }

  GpModel model;
  model.inputs_ = std::move(inputs);
  const std::size_t n = model.inputs_.size();

  double mean = 0.0;
  for (const double y : targets) mean += y;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const double y : targets) var += (y - mean) * (y - mean);
  var /= static_cast<double>(n);
  model.y_mean_ = mean;
  model.y_std_ = std::sqrt(var);

  if (!(model.y_std_ > 0.0)) {
    model.degenerate_ = true;
    model.y_std_ = 1.0;
    model.hyper_.length_scales.assign(dim, 1.0);
    model.hyper_.noise_variance = config.noise_floor;
    return model;
  }

  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y(static_cast<Eigen::Index>(i)) = (targets[i] - mean) / model.y_std_;
  }

  // Search over theta = (log length scales, log signal var, log noise var),
  // clamped into the bounds below before every likelihood evaluation.
  const LogBounds length_bounds{std::log(0.03), std::log(10.0)};
  const LogBounds signal_bounds{std::log(0.05), std::log(20.0)};
  const LogBounds noise_bounds{std::log(config.noise_floor), std::log(0.5)};
  const std::size_t n_theta = dim + 2;

  auto clamp_theta = [&](std::vector<double> theta) {
    for (std::size_t d = 0; d < dim; ++d) {
      theta[d] = std::clamp(theta[d], length_bounds.lo, length_bounds.hi);
    }
    theta[dim] = std::clamp(theta[dim], signal_bounds.lo, signal_bounds.hi);
    theta[dim + 1] = std::clamp(theta[dim + 1], noise_bounds.lo, noise_bounds.hi);
    return theta;
  };
  auto unpack = [&](const std::vector<double>& theta) {
    GpHyperparams hyper;
    hyper.length_scales.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) hyper.length_scales[d] = std::exp(theta[d]);
    hyper.signal_variance = std::exp(theta[dim]);
    hyper.noise_variance = std::exp(theta[dim + 1]);
    return hyper;
  };
  auto objective = [&](const std::vector<double>& theta) {
    return -log_marginal_likelihood(model.inputs_, y, unpack(clamp_theta(theta)));
  };

  Rng rng(derive_seed(config.seed, 0x47704669ull));  // restart stream
  std::vector<double> best_theta;
  double best_value = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < std::max(1, config.restarts); ++restart) {
    std::vector<double> theta0(n_theta);
    if (restart == 0) {
      for (std::size_t d = 0; d < dim; ++d) theta0[d] = std::log(0.5);
      theta0[dim] = std::log(1.0);
      theta0[dim + 1] = std::log(1e-6);
    } else {
      for (std::size_t d = 0; d < dim; ++d) {
        theta0[d] = rng.uniform(length_bounds.lo, length_bounds.hi);
      }
      theta0[dim] = rng.uniform(signal_bounds.lo, signal_bounds.hi);
      theta0[dim + 1] = rng.uniform(noise_bounds.lo, noise_bounds.hi);
    }
    const auto result = internal::nelder_mead(objective, theta0, 0.4, 220);
    if (result.value < best_value) {
      best_value = result.value;
      best_theta = clamp_theta(result.x);
    }
  }
  if (!std::isfinite(best_value)) {
    throw numeric_error("GP likelihood search failed to factorize any covariance");
  }
  model.hyper_ = unpack(best_theta);

  Eigen::LLT<Eigen::MatrixXd> llt;
  const double jitter = robust_llt(kernel_matrix(model.inputs_, model.hyper_), llt);
  if (jitter < 0.0) {
    throw numeric_error("GP covariance not positive definite after jitter escalation");
  }
  model.hyper_.noise_variance += jitter;

  const Eigen::VectorXd alpha = llt.solve(y);
  model.alpha_.assign(alpha.data(), alpha.data() + alpha.size());
  const Eigen::MatrixXd L = llt.matrixL();
  model.chol_.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      model.chol_[i * n + j] = L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return model;
}

GpModel::Prediction GpModel::predict(std::span<const double> x) const {
  if (degenerate_) return {y_mean_, 0.0};
  const std::size_t n = inputs_.size();
  if (x.size() != hyper_.length_scales.size()) {
    throw shape_error("GP prediction input has wrong dimension");
  }

  Eigen::VectorXd k_star(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double r = scaled_distance(x, inputs_[i], hyper_.length_scales);
    k_star(static_cast<Eigen::Index>(i)) = hyper_.signal_variance * matern52(r);
  }

  double mean_std = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean_std += k_star(static_cast<Eigen::Index>(i)) * alpha_[i];

  // Forward-substitute v = L^{-1} k*.
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double sum = k_star(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < i; ++j) sum -= chol_[i * n + j] * v(static_cast<Eigen::Index>(j));
    v(static_cast<Eigen::Index>(i)) = sum / chol_[i * n + i];
  }
  const double var_std = std::max(0.0, hyper_.signal_variance - v.squaredNorm());

  return {y_mean_ + y_std_ * mean_std, y_std_ * y_std_ * var_std};
}

}  // namespace ichdet
