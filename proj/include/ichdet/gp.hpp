#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ichdet {

/// Matern 5/2 ARD kernel hyperparameters. Length scales are per input
/// dimension; variances are in standardized-target units.
struct GpHyperparams {
  std::vector<double> length_scales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;
};

struct GpConfig {
  int restarts = 8;           // multi-start count for the likelihood search
  std::uint64_t seed = 0;     // seeds the restart draws
  double noise_floor = 1e-10; // lower bound on the noise variance
};

/// Gaussian-process regressor on unit-cube inputs. Targets are standardized
/// internally; hyperparameters maximize the log marginal likelihood via
/// multi-start Nelder-Mead. A constant-target fit degrades to a prior-mean
/// model with the degenerate flag set.
class GpModel {
 public:
  struct Prediction {
    double mean = 0.0;
    double variance = 0.0;  // latent (noise-free) posterior variance, >= 0
  };

  static GpModel fit(std::vector<std::vector<double>> inputs,
                     std::vector<double> targets, const GpConfig& config = {});

  Prediction predict(std::span<const double> x) const;

  bool degenerate_targets() const { return degenerate_; }
  const GpHyperparams& hyperparams() const { return hyper_; }
  double target_mean() const { return y_mean_; }
  double target_std() const { return y_std_; }
  std::size_t training_size() const { return inputs_.size(); }

 private:
  GpModel() = default;

  std::vector<std::vector<double>> inputs_;
  GpHyperparams hyper_;
  std::vector<double> chol_;   // lower-triangular factor of K, row-major
  std::vector<double> alpha_;  // K^{-1} y_std
  double y_mean_ = 0.0;
  double y_std_ = 1.0;
  bool degenerate_ = false;
};

}  // namespace ichdet
