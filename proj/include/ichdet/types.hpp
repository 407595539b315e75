#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "ichdet/errors.hpp"

namespace ichdet {

/// Axis-aligned ground-truth rectangle on one slice. Half-open on both axes:
/// a point (x, y) is inside iff x0 <= x < x1 and y0 <= y < y1. x indexes
/// columns, y indexes rows, origin top-left.
struct BoundingBox {
  std::string slice_id;
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool contains(int x, int y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }

  void validate() const {
    if (x0 < 0 || y0 < 0) {
      throw std::invalid_argument("bounding box coordinates must be non-negative");
    }
    if (x0 >= x1 || y0 >= y1) {
      throw std::invalid_argument("bounding box requires x0 < x1 and y0 < y1");
    }
  }
};

/// One localized finding: pixel coordinates plus the peak value it was
/// detected at.
struct Detection {
  std::string slice_id;
  int x = 0;
  int y = 0;
  double score = 0.0;
};

/// The three detector knobs: prominence cutoff h, value threshold T, and
/// minimum Euclidean peak separation d (pixels).
struct DetectorParams {
  double h = 0.0;
  double T = 0.0;
  double d = 1.0;

  void validate() const {
    if (!(h >= 0.0) || !std::isfinite(h)) {
      throw std::invalid_argument("detector parameter h must be finite and >= 0");
    }
    if (!std::isfinite(T)) {
      throw std::invalid_argument("detector parameter T must be finite");
    }
    if (!(d >= 1.0) || !std::isfinite(d)) {
      throw std::invalid_argument("detector parameter d must be finite and >= 1");
    }
  }
};

/// Square dilation neighborhood of side 2*radius+1.
struct Footprint {
  int radius = 1;

  void validate() const {
    if (radius < 1) throw std::invalid_argument("footprint radius must be >= 1");
  }
};

/// Detector parameters plus the dilation footprint, as persisted in the
/// params JSON consumed by the detect subcommand.
struct DetectorSettings {
  DetectorParams params;
  int footprint_radius = 1;
};

/// TP/FP/FN tallies.
struct EvalCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;

  EvalCounts& operator+=(const EvalCounts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    return *this;
  }
  friend EvalCounts operator+(EvalCounts a, const EvalCounts& b) { return a += b; }
  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

}  // namespace ichdet
