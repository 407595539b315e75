#include "ichdet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "ichdet/errors.hpp"
#include "ichdet/io.hpp"
#include "ichdet/rng.hpp"

namespace fs = std::filesystem;

namespace ichdet {

void parallel_for_index(std::size_t n, int jobs,
                        const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  const int count = std::min<int>(jobs, static_cast<int>(n));
  threads.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

LabeledMaps load_labeled_maps(const fs::path& maps_dir, const fs::path& boxes_csv) {
  if (!fs::is_directory(maps_dir)) {
    throw io_error("not a directory: " + maps_dir.string());
  }
  LabeledMaps data;
  std::vector<fs::path> files;
  std::error_code ec;
  const fs::path boxes_canonical = fs::weakly_canonical(boxes_csv, ec);
  for (const auto& entry : fs::directory_iterator(maps_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext != ".amap" && ext != ".csv") continue;
    // The boxes CSV may live next to the maps (the synth layout).
    if (entry.path().filename() == "boxes.csv" ||
        fs::weakly_canonical(entry.path(), ec) == boxes_canonical) {
      continue;
    }
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    data.maps.emplace_back(file.stem().string(), read_matrix(file));
  }
  for (auto& box : read_boxes(boxes_csv)) {
    data.boxes[box.slice_id].push_back(std::move(box));
  }
  return data;
}

std::vector<Detection> detect_maps(
    std::span<const std::pair<std::string, Matrix>> maps,
    const DetectorParams& params, Footprint footprint, int jobs) {
  std::vector<std::vector<Detection>> per_map(maps.size());
  parallel_for_index(maps.size(), jobs, [&](std::size_t i) {
    per_map[i] = detect_peaks(maps[i].second, params, footprint, maps[i].first);
  });

  std::vector<std::size_t> order(maps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return maps[a].first < maps[b].first;
  });

  std::vector<Detection> all;
  for (const std::size_t i : order) {
    all.insert(all.end(), per_map[i].begin(), per_map[i].end());
  }
  return all;
}

MetricsReport evaluate_detections(std::span<const Detection> detections,
                                  std::span<const BoundingBox> boxes) {
  std::map<std::string, std::pair<std::vector<Detection>, std::vector<BoundingBox>>>
      by_slice;
  for (const auto& d : detections) by_slice[d.slice_id].first.push_back(d);
  for (const auto& b : boxes) by_slice[b.slice_id].second.push_back(b);

  std::vector<EvalCounts> counts;
  counts.reserve(by_slice.size());
  for (const auto& [slice_id, pair] : by_slice) {
    counts.push_back(match_slice(pair.first, pair.second));
  }
  return report(aggregate(counts));
}

double tuning_dice(const LabeledMaps& data, const DetectorParams& params,
                   Footprint footprint) {
  std::vector<EvalCounts> counts;
  counts.reserve(data.maps.size());
  std::vector<BoundingBox> no_boxes;
  for (const auto& [slice_id, map] : data.maps) {
    const auto detections = detect_peaks(map, params, footprint, slice_id);
    const auto it = data.boxes.find(slice_id);
    counts.push_back(
        match_slice(detections, it == data.boxes.end() ? no_boxes : it->second));
  }
  // Boxes whose slice has no map at all are unreachable misses.
  for (const auto& [slice_id, slice_boxes] : data.boxes) {
    const bool has_map =
        std::any_of(data.maps.begin(), data.maps.end(),
                    [&](const auto& m) { return m.first == slice_id; });
    if (!has_map) {
      counts.push_back(EvalCounts{0, 0, static_cast<long long>(slice_boxes.size())});
    }
  }
  return report(aggregate(counts)).dice;
}

std::function<double(std::span<const double>)> make_dice_objective(
    const LabeledMaps& data, const SearchSpace& space, Footprint footprint) {
  return [&data, space, footprint](std::span<const double> point) {
    return tuning_dice(data, detector_params_from_point(space, point), footprint);
  };
}

bool in_tuning_split(const std::string& slice_id, double tuning_fraction,
                     std::uint64_t seed) {
  // FNV-1a over the id, mixed with the seed.
  std::uint64_t hash = 14695981039346656037ull;
  for (const char c : slice_id) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ull;
  }
  std::uint64_t state = hash ^ derive_seed(seed, 0x53706c69ull);  // split stream
  const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
  return u < tuning_fraction;
}

void write_report_json(const MetricsReport& report, const fs::path& path) {
  auto pct = [](double fraction) { return std::round(fraction * 1e4) / 100.0; };
  const nlohmann::json doc = {{"tp", report.counts.tp}, {"fp", report.counts.fp},
                              {"fn", report.counts.fn}, {"ppv", pct(report.ppv)},
                              {"se", pct(report.se)},   {"dice", pct(report.dice)}};
  atomic_write(path, doc.dump(2) + "\n");
}

void write_history_csv(std::span<const TrialRecord> history,
                       const SearchSpace& space, const fs::path& path) {
  std::string payload = "iteration";
  for (const auto& dim : space.dims) payload += "," + dim.name;
  payload += ",dice\n";
  for (const auto& record : history) {
    payload += std::to_string(record.iteration);
    for (const double v : record.point) payload += "," + format_double(v);
    payload += "," + (std::isfinite(record.objective)
                          ? format_double(record.objective)
                          : std::string("-inf"));
    payload += "\n";
  }
  atomic_write(path, payload);
}

}  // namespace ichdet
