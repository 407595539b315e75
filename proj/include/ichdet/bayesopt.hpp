#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ichdet/gp.hpp"
#include "ichdet/types.hpp"

namespace ichdet {

/// One search dimension, linear or logarithmic, optionally rounded to
/// integers after scaling.
struct Dimension {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  bool log_scale = false;
  bool integer = false;

  void validate() const;
};

struct SearchSpace {
  std::vector<Dimension> dims;

  /// h in [1e-4, 0.5] log, T in [1e-4, 1] log, d in [1, 100] linear integer.
  static SearchSpace detector_default();

  std::size_t size() const { return dims.size(); }
  void validate() const;

  /// Maps a unit-cube point into the space, applying the per-dimension scale,
  /// integer rounding, and bound clamping.
  std::vector<double> from_unit(std::span<const double> unit) const;
  std::vector<double> to_unit(std::span<const double> point) const;
};

/// Unit-cube Latin hypercube: every dimension's n strata hold exactly one
/// point. Deterministic per seed.
std::vector<std::vector<double>> latin_hypercube_unit(std::size_t n,
                                                      std::size_t dims,
                                                      std::uint64_t seed);

/// Latin hypercube mapped into the search space.
std::vector<std::vector<double>> latin_hypercube(std::size_t n,
                                                 const SearchSpace& space,
                                                 std::uint64_t seed);

/// Expected improvement for maximization. With zero variance this degrades to
/// max(mean - best, 0).
double expected_improvement(double mean, double variance, double best_so_far);

struct TrialRecord {
  std::vector<double> point;  // in search-space units
  double objective = 0.0;     // -inf marks a failed evaluation
  std::size_t iteration = 0;
};

struct OptimizeConfig {
  std::size_t budget = 60;
  std::uint64_t seed = 0;
  /// 0 means the default min(10, budget / 3).
  std::size_t initial_design = 0;
  std::size_t candidates = 2048;
  std::size_t refine_top = 5;
  GpConfig gp;
};

struct OptimizeResult {
  TrialRecord best;
  std::vector<TrialRecord> history;  // one record per evaluation, in order
};

/// Gaussian-process Bayesian optimization (maximization): Latin hypercube
/// initial design, then GP fit + expected-improvement maximization over
/// quasi-random candidates with local refinement. Deterministic per seed.
/// Objectives returning non-finite values are recorded as failures with
/// objective -inf and skipped when fitting the surrogate.
OptimizeResult optimize_detector(
    const std::function<double(std::span<const double>)>& objective,
    const SearchSpace& space, const OptimizeConfig& config);

/// Reads (h, T, d) out of a point using the space's dimension names.
DetectorParams detector_params_from_point(const SearchSpace& space,
                                          std::span<const double> point);

}  // namespace ichdet
