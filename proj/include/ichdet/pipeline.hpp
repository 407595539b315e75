#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ichdet/bayesopt.hpp"
#include "ichdet/matrix.hpp"
#include "ichdet/metrics.hpp"
#include "ichdet/morphology.hpp"
#include "ichdet/types.hpp"

namespace ichdet {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; worker exceptions are
/// rethrown on the calling thread.
void parallel_for_index(std::size_t n, int jobs,
                        const std::function<void(std::size_t)>& fn);

/// A set of attention maps with their ground-truth boxes, keyed by slice id.
struct LabeledMaps {
  std::vector<std::pair<std::string, Matrix>> maps;  // sorted by slice id
  std::map<std::string, std::vector<BoundingBox>> boxes;
};

/// Loads every .amap/.csv matrix in a directory (slice id = file stem) plus a
/// boxes CSV. Boxes for unknown slice ids are kept: they count as misses.
LabeledMaps load_labeled_maps(const std::filesystem::path& maps_dir,
                              const std::filesystem::path& boxes_csv);

/// Runs the detector over every map, in parallel up to `jobs` threads.
/// Output order is canonical (sorted by slice id) regardless of scheduling.
std::vector<Detection> detect_maps(
    std::span<const std::pair<std::string, Matrix>> maps,
    const DetectorParams& params, Footprint footprint, int jobs = 1);

/// Groups detections and boxes by slice id and aggregates the per-slice
/// counts. Slices present on only one side still contribute (all-FP or
/// all-FN).
MetricsReport evaluate_detections(std::span<const Detection> detections,
                                  std::span<const BoundingBox> boxes);

/// Dice achieved by (h, T, d) on a tuning set; the objective optimized by the
/// optimize subcommand.
double tuning_dice(const LabeledMaps& data, const DetectorParams& params,
                   Footprint footprint);

/// Wraps tuning_dice as a search-space objective.
std::function<double(std::span<const double>)> make_dice_objective(
    const LabeledMaps& data, const SearchSpace& space, Footprint footprint);

/// Deterministic tuning/test split by slice-id hash: returns true when the
/// slice falls into the tuning fraction.
bool in_tuning_split(const std::string& slice_id, double tuning_fraction,
                     std::uint64_t seed);

/// Report JSON ({tp, fp, fn, ppv, se, dice}; percentages with 2 decimals).
void write_report_json(const MetricsReport& report,
                       const std::filesystem::path& path);

/// BO history CSV with header "iteration,h,T,d,dice".
void write_history_csv(std::span<const TrialRecord> history,
                       const SearchSpace& space,
                       const std::filesystem::path& path);

}  // namespace ichdet
