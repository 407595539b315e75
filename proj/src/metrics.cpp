#include "ichdet/metrics.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace ichdet {

EvalCounts match_slice(std::span<const Detection> detections,
                       std::span<const BoundingBox> boxes) {
  const std::string* slice_id = nullptr;
  auto check_slice = [&](const std::string& id) {
    if (slice_id == nullptr) {
      slice_id = &id;
    } else if (id != *slice_id) {
      throw std::invalid_argument("match_slice got mixed slice ids: '" + *slice_id +
                                  "' and '" + id + "'");
    }
  };
  for (const auto& d : detections) check_slice(d.slice_id);
  for (const auto& b : boxes) check_slice(b.slice_id);

  EvalCounts counts;
  std::vector<char> box_hit(boxes.size(), 0);
  for (const auto& detection : detections) {
    bool inside_any = false;
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      if (boxes[b].contains(detection.x, detection.y)) {
        inside_any = true;
        box_hit[b] = 1;
      }
    }
    if (inside_any) {
      ++counts.tp;
    } else {
      ++counts.fp;
    }
  }
  for (const char hit : box_hit) {
    if (!hit) ++counts.fn;
  }
  return counts;
}

EvalCounts aggregate(std::span<const EvalCounts> counts) {
  EvalCounts total;
  for (const auto& c : counts) total += c;
  return total;
}

MetricsReport report(EvalCounts counts) {
  if (counts.tp < 0 || counts.fp < 0 || counts.fn < 0) {
    throw std::invalid_argument("negative counts");
  }
  MetricsReport out;
  out.counts = counts;
  const double tp = static_cast<double>(counts.tp);
  if (counts.tp + counts.fp > 0) {
    out.ppv = tp / static_cast<double>(counts.tp + counts.fp);
    out.ppv_defined = true;
  }
  if (counts.tp + counts.fn > 0) {
    out.se = tp / static_cast<double>(counts.tp + counts.fn);
    out.se_defined = true;
  }
  if (2 * counts.tp + counts.fp + counts.fn > 0) {
    out.dice = 2.0 * tp / static_cast<double>(2 * counts.tp + counts.fp + counts.fn);
    out.dice_defined = true;
  }
  return out;
}

}  // namespace ichdet
