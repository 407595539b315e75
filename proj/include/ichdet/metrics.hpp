#pragma once

#include <span>

#include "ichdet/types.hpp"

namespace ichdet {

/// Dice, sensitivity and positive predictive value for a set of counts.
/// A metric whose denominator is zero is reported as 0 with its defined flag
/// cleared, never NaN.
struct MetricsReport {
  double ppv = 0.0;
  double se = 0.0;
  double dice = 0.0;
  EvalCounts counts;
  bool ppv_defined = false;
  bool se_defined = false;
  bool dice_defined = false;
};

/// Point-in-box matching for a single slice. A detection inside at least one
/// box is a TP, a detection inside none is an FP, a box containing no
/// detection is an FN. Multiple detections in one box all count as TPs; a
/// detection inside overlapping boxes counts once and marks every box hit.
/// All detections and boxes must carry the same slice id.
EvalCounts match_slice(std::span<const Detection> detections,
                       std::span<const BoundingBox> boxes);

/// Componentwise sum.
EvalCounts aggregate(std::span<const EvalCounts> counts);

/// ppv = tp/(tp+fp), se = tp/(tp+fn), dice = 2tp/(2tp+fp+fn).
MetricsReport report(EvalCounts counts);

}  // namespace ichdet
