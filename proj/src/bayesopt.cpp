#include "ichdet/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ichdet/errors.hpp"
#include "ichdet/rng.hpp"
#include "nelder_mead.hpp"

namespace ichdet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.141592653589793);
}

double radical_inverse(unsigned base, std::uint64_t index) {
  double fraction = 1.0;
  double result = 0.0;
  while (index > 0) {
    fraction /= base;
    result += fraction * static_cast<double>(index % base);
    index /= base;
  }
  return result;
}

/// Halton point #index in [0,1)^dims.
std::vector<double> halton_point(std::uint64_t index, std::size_t dims) {
  std::vector<double> point(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    point[d] = radical_inverse(kPrimes[d], index);
  }
  return point;
}

}  // namespace

void Dimension::validate() const {
  if (!(lower < upper)) {
    throw std::invalid_argument("dimension '" + name + "': lower must be < upper");
  }
  if (log_scale && !(lower > 0.0)) {
    throw std::invalid_argument("dimension '" + name + "': log scale needs lower > 0");
  }
}

void SearchSpace::validate() const {
  if (dims.empty()) throw std::invalid_argument("search space has no dimensions");
  if (dims.size() > std::size(kPrimes)) {
    throw std::invalid_argument("search space supports at most 10 dimensions");
  }
  for (const auto& d : dims) d.validate();
}

SearchSpace SearchSpace::detector_default() {
  SearchSpace space;
  space.dims = {
      {"h", 1e-4, 0.5, true, false},
      {"T", 1e-4, 1.0, true, false},
      {"d", 1.0, 100.0, false, true},
  };
  return space;
}

std::vector<double> SearchSpace::from_unit(std::span<const double> unit) const {
  if (unit.size() != dims.size()) throw shape_error("unit point has wrong dimension");
  std::vector<double> out(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& dim = dims[i];
    const double u = std::clamp(unit[i], 0.0, 1.0);
    double x;
    if (dim.log_scale) {
      x = dim.lower * std::exp(u * std::log(dim.upper / dim.lower));
    } else {
      x = dim.lower + u * (dim.upper - dim.lower);
    }
    if (dim.integer) x = std::round(x);
    out[i] = std::clamp(x, dim.lower, dim.upper);
  }
  return out;
}

std::vector<double> SearchSpace::to_unit(std::span<const double> point) const {
  if (point.size() != dims.size()) throw shape_error("point has wrong dimension");
  std::vector<double> out(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& dim = dims[i];
    double u;
    if (dim.log_scale) {
      u = std::log(point[i] / dim.lower) / std::log(dim.upper / dim.lower);
    } else {
      u = (point[i] - dim.lower) / (dim.upper - dim.lower);
    }
    out[i] = std::clamp(u, 0.0, 1.0);
  }
  return out;
}

std::vector<std::vector<double>> latin_hypercube_unit(std::size_t n,
                                                      std::size_t dims,
                                                      std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("latin hypercube needs n >= 1");
  Rng rng(derive_seed(seed, 0x4c687321ull));  // lhs stream
  std::vector<std::vector<double>> points(n, std::vector<double>(dims));
  std::vector<std::size_t> strata(n);
  for (std::size_t d = 0; d < dims; ++d) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    rng.shuffle(strata);
    for (std::size_t i = 0; i < n; ++i) {
      points[i][d] = (static_cast<double>(strata[i]) + rng.uniform()) /
                     static_cast<double>(n);
    }
  }
  return points;
}

std::vector<std::vector<double>> latin_hypercube(std::size_t n,
                                                 const SearchSpace& space,
                                                 std::uint64_t seed) {
  space.validate();
  auto points = latin_hypercube_unit(n, space.size(), seed);
  std::vector<std::vector<double>> scaled;
  scaled.reserve(n);
  for (const auto& u : points) scaled.push_back(space.from_unit(u));
  return scaled;
}

double expected_improvement(double mean, double variance, double best_so_far) {
  if (!(variance >= 0.0)) {
    throw std::invalid_argument("expected_improvement needs variance >= 0");
  }
  const double sigma = std::sqrt(variance);
  const double gain = mean - best_so_far;
  if (sigma == 0.0) return std::max(gain, 0.0);
  const double u = gain / sigma;
  return std::max(0.0, gain * normal_cdf(u) + sigma * normal_pdf(u));
}

OptimizeResult optimize_detector(
    const std::function<double(std::span<const double>)>& objective,
    const SearchSpace& space, const OptimizeConfig& config) {
  space.validate();
  if (config.budget < 5) {
    throw std::invalid_argument("optimization budget must be at least 5");
  }
  const std::size_t dims = space.size();

  std::size_t n_init = config.initial_design != 0
                           ? config.initial_design
                           : std::clamp<std::size_t>(config.budget / 3, 1, 10);
  n_init = std::min(n_init, config.budget);

  OptimizeResult result;
  result.history.reserve(config.budget);

  // GP training data: unit coordinates of the points actually evaluated.
  std::vector<std::vector<double>> train_x;
  std::vector<double> train_y;

  auto evaluate = [&](const std::vector<double>& unit) {
    const std::vector<double> point = space.from_unit(unit);
    double value = objective(point);
    if (!std::isfinite(value)) value = -kInf;
    result.history.push_back({point, value, result.history.size()});
    if (value != -kInf) {
      train_x.push_back(space.to_unit(point));
      train_y.push_back(value);
    }
  };

  for (const auto& unit :
       latin_hypercube_unit(n_init, dims, derive_seed(config.seed, 1))) {
    if (result.history.size() >= config.budget) break;
    evaluate(unit);
  }

  Rng fallback_rng(derive_seed(config.seed, 2));
  std::uint64_t halton_cursor = 1;

  while (result.history.size() < config.budget) {
    // At least two distinct finite observations are needed for a surrogate.
    bool distinct = false;
    for (std::size_t i = 1; i < train_x.size() && !distinct; ++i) {
      distinct = train_x[i] != train_x[0];
    }
    if (!distinct) {
      std::vector<double> unit(dims);
      for (auto& u : unit) u = fallback_rng.uniform();
      evaluate(unit);
      continue;
    }

    const GpModel model =
        GpModel::fit(train_x, train_y, GpConfig{config.gp.restarts,
                                                derive_seed(config.seed, 3),
                                                config.gp.noise_floor});
    const double best_y = *std::max_element(train_y.begin(), train_y.end());

    auto ei_at = [&](const std::vector<double>& unit) {
      const auto pred = model.predict(unit);
      return expected_improvement(pred.mean, pred.variance, best_y);
    };

    // Quasi-random scan.
    struct Candidate {
      std::vector<double> unit;
      double ei;
    };
    std::vector<Candidate> top;
    for (std::size_t c = 0; c < config.candidates; ++c) {
      Candidate cand{halton_point(halton_cursor++, dims), 0.0};
      cand.ei = ei_at(cand.unit);
      top.push_back(std::move(cand));
    }
    std::partial_sort(top.begin(),
                      top.begin() + static_cast<std::ptrdiff_t>(
                                        std::min(config.refine_top, top.size())),
                      top.end(),
                      [](const Candidate& a, const Candidate& b) { return a.ei > b.ei; });
    top.resize(std::min(config.refine_top, top.size()));

    // Local refinement from the best scan points.
    std::vector<double> best_unit = top.front().unit;
    double best_ei = top.front().ei;
    for (const auto& cand : top) {
      const auto refined = internal::nelder_mead(
          [&](const std::vector<double>& u) {
            std::vector<double> clamped(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) {
              clamped[i] = std::clamp(u[i], 0.0, 1.0);
            }
            return -ei_at(clamped);
          },
          cand.unit, 0.05, 80);
      if (-refined.value > best_ei) {
        best_ei = -refined.value;
        best_unit = refined.x;
        for (auto& u : best_unit) u = std::clamp(u, 0.0, 1.0);
      }
    }
    evaluate(best_unit);
  }

  std::size_t best_index = 0;
  for (std::size_t i = 1; i < result.history.size(); ++i) {
    if (result.history[i].objective > result.history[best_index].objective) {
      best_index = i;
    }
  }
  result.best = result.history[best_index];
  return result;
}

DetectorParams detector_params_from_point(const SearchSpace& space,
                                          std::span<const double> point) {
  if (point.size() != space.size()) throw shape_error("point has wrong dimension");
  DetectorParams params;
  bool have_h = false;
  bool have_t = false;
  bool have_d = false;
  for (std::size_t i = 0; i < space.dims.size(); ++i) {
    const auto& name = space.dims[i].name;
    if (name == "h") {
      params.h = point[i];
      have_h = true;
    } else if (name == "T") {
      params.T = point[i];
      have_t = true;
    } else if (name == "d") {
      params.d = point[i];
      have_d = true;
    }
  }
  if (!have_h || !have_t || !have_d) {
    throw std::invalid_argument("search space must name dimensions h, T and d");
  }
  params.validate();
  return params;
}

}  // namespace ichdet
