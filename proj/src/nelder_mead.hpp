#pragma once

#include <algorithm>
#include <functional>
#include <vector>

namespace ichdet::internal {

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
};

/// Minimizes f starting from x0 with a deterministic initial simplex
/// (x0 + step * e_i). Plain Nelder-Mead with standard coefficients; stops
/// after max_evals evaluations or when the simplex collapses.
inline NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x0, double step, int max_evals) {
  const std::size_t n = x0.size();
  struct Vertex {
    std::vector<double> x;
    double value;
  };
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    return f(x);
  };

  std::vector<Vertex> simplex;
  simplex.reserve(n + 1);
  simplex.push_back({x0, eval(x0)});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x = x0;
    x[i] += step;
    simplex.push_back({x, eval(x)});
  }
  auto by_value = [](const Vertex& a, const Vertex& b) { return a.value < b.value; };
  std::sort(simplex.begin(), simplex.end(), by_value);

  while (evals < max_evals) {
    // Centroid of all but the worst vertex.
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t v = 0; v < n; ++v) centroid[i] += simplex[v].x[i];
      centroid[i] /= static_cast<double>(n);
    }
    const Vertex& worst = simplex[n];
    std::vector<double> reflected(n);
    for (std::size_t i = 0; i < n; ++i) {
      reflected[i] = centroid[i] + (centroid[i] - worst.x[i]);
    }
    const double reflected_value = eval(reflected);

    if (reflected_value < simplex[0].value) {
      std::vector<double> expanded(n);
      for (std::size_t i = 0; i < n; ++i) {
        expanded[i] = centroid[i] + 2.0 * (centroid[i] - worst.x[i]);
      }
      const double expanded_value = eval(expanded);
      simplex[n] = expanded_value < reflected_value
                       ? Vertex{std::move(expanded), expanded_value}
                       : Vertex{std::move(reflected), reflected_value};
    } else if (reflected_value < simplex[n - 1].value) {
      simplex[n] = {std::move(reflected), reflected_value};
    } else {
      std::vector<double> contracted(n);
      for (std::size_t i = 0; i < n; ++i) {
        contracted[i] = centroid[i] + 0.5 * (worst.x[i] - centroid[i]);
      }
      const double contracted_value = eval(contracted);
      if (contracted_value < worst.value) {
        simplex[n] = {std::move(contracted), contracted_value};
      } else {
        for (std::size_t v = 1; v <= n; ++v) {
          for (std::size_t i = 0; i < n; ++i) {
            simplex[v].x[i] = simplex[0].x[i] + 0.5 * (simplex[v].x[i] - simplex[0].x[i]);
          }
          simplex[v].value = eval(simplex[v].x);
        }
      }
    }
    std::sort(simplex.begin(), simplex.end(), by_value);

    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      spread = std::max(spread, std::abs(simplex[n].x[i] - simplex[0].x[i]));
    }
    if (spread < 1e-10) break;
  }
  return {simplex[0].x, simplex[0].value};
}

}  // namespace ichdet::internal
