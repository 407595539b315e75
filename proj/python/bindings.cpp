// pybind11 surface: numpy in, numpy out. Thin converters around the C++
// core; no logic of its own.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <span>
#include <vector>

#include "ichdet/bayesopt.hpp"
#include "ichdet/gp.hpp"
#include "ichdet/matrix.hpp"
#include "ichdet/metrics.hpp"
#include "ichdet/mil.hpp"
#include "ichdet/morphology.hpp"
#include "ichdet/resize.hpp"
#include "ichdet/synth.hpp"
#include "ichdet/windowing.hpp"

namespace py = pybind11;
using namespace ichdet;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& array) {
  if (array.ndim() != 2) throw shape_error("expected a 2-D array");
  const auto rows = static_cast<std::size_t>(array.shape(0));
  const auto cols = static_cast<std::size_t>(array.shape(1));
  std::vector<double> values(array.data(), array.data() + rows * cols);
  return Matrix(rows, cols, std::move(values));
}

py::array_t<double> from_matrix(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::memcpy(out.mutable_data(), m.values().data(), m.size() * sizeof(double));
  return out;
}

std::vector<double> to_vector(const DoubleArray& array) {
  if (array.ndim() != 1) throw shape_error("expected a 1-D array");
  return std::vector<double>(array.data(), array.data() + array.shape(0));
}

py::array_t<double> from_vector(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

EmbeddingBag bag_from_array(const DoubleArray& H, std::size_t grid_rows,
                            std::size_t grid_cols) {
  Matrix m = to_matrix(H);
  if (grid_rows == 0 && grid_cols == 0) {
    grid_rows = 1;
    grid_cols = m.rows();
  }
  return EmbeddingBag(std::move(m), grid_rows, grid_cols);
}

AttentionParams params_from_arrays(const DoubleArray& w, const DoubleArray& V,
                                   const DoubleArray& U) {
  AttentionParams params;
  params.w = to_vector(w);
  params.V = to_matrix(V);
  params.U = to_matrix(U);
  params.validate();
  return params;
}

SearchSpace space_from_list(const py::object& spec) {
  if (spec.is_none()) return SearchSpace::detector_default();
  SearchSpace space;
  for (const auto& item : spec.cast<py::list>()) {
    const auto d = item.cast<py::dict>();
    Dimension dim;
    dim.name = d["name"].cast<std::string>();
    dim.lower = d["lower"].cast<double>();
    dim.upper = d["upper"].cast<double>();
    dim.log_scale = d.contains("log") && d["log"].cast<bool>();
    dim.integer = d.contains("integer") && d["integer"].cast<bool>();
    space.dims.push_back(std::move(dim));
  }
  space.validate();
  return space;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weakly supervised hemorrhage localization: MIL pooling heads, "
            "morphological peak detection, point-in-box metrics and GP "
            "Bayesian optimization.";

  py::register_exception<shape_error>(m, "ShapeError", PyExc_ValueError);

  // ---- windowing
  m.def(
      "apply_window",
      [](const DoubleArray& hu, double level, double width) {
        return from_matrix(apply_window(to_matrix(hu), WindowSpec{level, width}));
      },
      py::arg("hu"), py::arg("level"), py::arg("width"),
      "Linear radiological window with clamping to [0, 1].");
  m.def(
      "standardize",
      [](const DoubleArray& m_, double mean, double std) {
        return from_matrix(standardize(to_matrix(m_), StandardizationStats{mean, std}));
      },
      py::arg("m"), py::arg("mean"), py::arg("std"));
  m.def(
      "compute_stats",
      [](const std::vector<DoubleArray>& dataset) {
        std::vector<Matrix> matrices;
        matrices.reserve(dataset.size());
        for (const auto& a : dataset) matrices.push_back(to_matrix(a));
        const auto stats = compute_stats(matrices);
        return py::make_tuple(stats.mean, stats.std);
      },
      py::arg("dataset"), "Population mean/std over all pixels of all arrays.");
  m.def(
      "build_input_channels",
      [](const DoubleArray& hu, double mean, double std) {
        const auto channels =
            build_input_channels(to_matrix(hu), StandardizationStats{mean, std});
        return py::make_tuple(from_matrix(channels.raw), from_matrix(channels.brain),
                              from_matrix(channels.subdural));
      },
      py::arg("hu"), py::arg("mean"), py::arg("std"),
      "Standardized (raw, brain-window, subdural-window) channels.");

  // ---- MIL pooling heads
  m.def(
      "max_pool_score",
      [](const DoubleArray& features) {
        std::vector<double> values = to_vector(features);
        const std::size_t k = values.size();
        const auto result = max_pool_score(EmbeddingBag(Matrix(k, 1, values), 1, k));
        return py::make_tuple(result.z, result.argmax);
      },
      py::arg("features"), "Global max over a scalar feature vector: (z, argmax).");
  m.def(
      "gated_attention_weights",
      [](const DoubleArray& H, const DoubleArray& w, const DoubleArray& V,
         const DoubleArray& U) {
        return from_vector(gated_attention_weights(bag_from_array(H, 0, 0),
                                                   params_from_arrays(w, V, U)));
      },
      py::arg("H"), py::arg("w"), py::arg("V"), py::arg("U"),
      "Softmax attention weights over the K rows of H.");
  m.def(
      "attention_pool",
      [](const DoubleArray& H, const DoubleArray& a) {
        return from_vector(attention_pool(bag_from_array(H, 0, 0), to_vector(a)));
      },
      py::arg("H"), py::arg("a"));
  m.def(
      "classify",
      [](const DoubleArray& z, const DoubleArray& theta, double bias) {
        return classify(to_vector(z), ClassifierHead{to_vector(theta), bias});
      },
      py::arg("z"), py::arg("theta"), py::arg("bias"));
  m.def("weighted_cross_entropy", &weighted_cross_entropy, py::arg("p"),
        py::arg("label"), py::arg("pos_weight") = 1.0);
  m.def(
      "train_mil_head",
      [](const std::vector<std::pair<DoubleArray, int>>& bags,
         std::size_t attention_dim, double learning_rate, double momentum,
         std::size_t epochs, double pos_weight, std::uint64_t seed) {
        std::vector<LabeledBag> dataset;
        dataset.reserve(bags.size());
        for (const auto& [H, label] : bags) {
          dataset.push_back({bag_from_array(H, 0, 0), label});
        }
        TrainConfig cfg;
        cfg.attention_dim = attention_dim;
        cfg.learning_rate = learning_rate;
        cfg.momentum = momentum;
        cfg.epochs = epochs;
        cfg.pos_weight = pos_weight;
        cfg.seed = seed;
        const TrainResult result = train_mil_head(dataset, cfg);
        py::dict out;
        out["w"] = from_vector(result.params.w);
        out["V"] = from_matrix(result.params.V);
        out["U"] = from_matrix(result.params.U);
        out["theta"] = from_vector(result.head.theta);
        out["bias"] = result.head.bias;
        out["loss_history"] = from_vector(result.loss_history);
        out["single_class_warning"] = result.single_class_warning;
        return out;
      },
      py::arg("bags"), py::arg("attention_dim") = 16,
      py::arg("learning_rate") = 0.05, py::arg("momentum") = 0.9,
      py::arg("epochs") = 40, py::arg("pos_weight") = 1.0, py::arg("seed") = 0,
      "SGD training of the gated attention head on (H, label) bags.");
  m.def(
      "attention_map_from_weights",
      [](const DoubleArray& a, std::size_t grid_rows, std::size_t grid_cols,
         std::size_t rows, std::size_t cols) {
        return from_matrix(
            attention_map_from_weights(to_vector(a), grid_rows, grid_cols, rows, cols));
      },
      py::arg("a"), py::arg("grid_rows"), py::arg("grid_cols"), py::arg("rows"),
      py::arg("cols"));
  m.def(
      "activation_map_from_features",
      [](const DoubleArray& features, std::size_t grid_rows, std::size_t grid_cols,
         std::size_t rows, std::size_t cols) {
        std::vector<double> values = to_vector(features);
        const Matrix H(values.size(), 1, values);
        return from_matrix(activation_map_from_features(
            EmbeddingBag(H, grid_rows, grid_cols), rows, cols));
      },
      py::arg("features"), py::arg("grid_rows"), py::arg("grid_cols"),
      py::arg("rows"), py::arg("cols"));
  m.def(
      "bilinear_resize",
      [](const DoubleArray& m_, std::size_t rows, std::size_t cols) {
        return from_matrix(bilinear_resize(to_matrix(m_), rows, cols));
      },
      py::arg("m"), py::arg("rows"), py::arg("cols"),
      "Align-corners bilinear resize.");

  // ---- morphology
  m.def(
      "gray_dilate",
      [](const DoubleArray& m_, int radius) {
        return from_matrix(gray_dilate(to_matrix(m_), Footprint{radius}));
      },
      py::arg("m"), py::arg("radius") = 1);
  m.def(
      "morph_reconstruct_dilation",
      [](const DoubleArray& marker, const DoubleArray& mask) {
        return from_matrix(morph_reconstruct_dilation(to_matrix(marker), to_matrix(mask)));
      },
      py::arg("marker"), py::arg("mask"));
  m.def(
      "h_maxima",
      [](const DoubleArray& m_, double h) {
        return from_matrix(h_maxima(to_matrix(m_), h));
      },
      py::arg("m"), py::arg("h"));
  m.def(
      "detect_peaks",
      [](const DoubleArray& map, double h, double T, double d, int footprint_radius) {
        const auto detections = detect_peaks(to_matrix(map), DetectorParams{h, T, d},
                                             Footprint{footprint_radius});
        py::list out;
        for (const auto& det : detections) {
          out.append(py::make_tuple(det.x, det.y, det.score));
        }
        return out;
      },
      py::arg("map"), py::arg("h"), py::arg("T"), py::arg("d"),
      py::arg("footprint_radius") = 1,
      "h-maxima + local maxima + threshold + min-distance suppression; "
      "returns [(x, y, score)] sorted by score descending.");

  // ---- metrics
  m.def(
      "match_slice",
      [](const std::vector<std::pair<int, int>>& detections,
         const std::vector<std::tuple<int, int, int, int>>& boxes) {
        std::vector<Detection> dets;
        dets.reserve(detections.size());
        for (const auto& [x, y] : detections) dets.push_back({"s", x, y, 0.0});
        std::vector<BoundingBox> bbs;
        bbs.reserve(boxes.size());
        for (const auto& [x0, y0, x1, y1] : boxes) bbs.push_back({"s", x0, y0, x1, y1});
        const EvalCounts counts = match_slice(dets, bbs);
        return py::make_tuple(counts.tp, counts.fp, counts.fn);
      },
      py::arg("detections"), py::arg("boxes"),
      "Point-in-box matching on one slice: (tp, fp, fn).");
  m.def(
      "report",
      [](long long tp, long long fp, long long fn) {
        const MetricsReport r = report(EvalCounts{tp, fp, fn});
        py::dict out;
        out["ppv"] = r.ppv;
        out["se"] = r.se;
        out["dice"] = r.dice;
        out["tp"] = r.counts.tp;
        out["fp"] = r.counts.fp;
        out["fn"] = r.counts.fn;
        return out;
      },
      py::arg("tp"), py::arg("fp"), py::arg("fn"));

  // ---- synthetic data
  m.def(
      "generate_scene",
      [](std::size_t index, std::uint64_t seed, std::size_t rows, std::size_t cols,
         std::size_t min_blobs, std::size_t max_blobs, double noise_amplitude) {
        SceneConfig cfg;
        cfg.rows = rows;
        cfg.cols = cols;
        cfg.min_blobs = min_blobs;
        cfg.max_blobs = max_blobs;
        cfg.noise_amplitude = noise_amplitude;
        cfg.seed = seed;
        const Scene scene = generate_scene(cfg, index);
        py::list boxes;
        for (const auto& box : scene.boxes) {
          boxes.append(py::make_tuple(box.x0, box.y0, box.x1, box.y1));
        }
        return py::make_tuple(from_matrix(scene.map), boxes);
      },
      py::arg("index"), py::arg("seed") = 0, py::arg("rows") = 64,
      py::arg("cols") = 64, py::arg("min_blobs") = 1, py::arg("max_blobs") = 3,
      py::arg("noise_amplitude") = 0.02,
      "Synthetic attention-map scene: (map, [(x0, y0, x1, y1), ...]).");
  m.def(
      "generate_bags",
      [](std::size_t n_pos, std::size_t n_neg, std::size_t K, std::size_t M,
         std::uint64_t seed) {
        BagConfig cfg;
        cfg.K = K;
        cfg.M = M;
        cfg.seed = seed;
        py::list out;
        for (const auto& bag : generate_bags(cfg, n_pos, n_neg)) {
          py::dict item;
          item["H"] = from_matrix(bag.bag.H);
          item["label"] = bag.label;
          item["witness_positions"] = bag.witness_positions;
          out.append(std::move(item));
        }
        return out;
      },
      py::arg("n_pos"), py::arg("n_neg"), py::arg("K") = 16, py::arg("M") = 8,
      py::arg("seed") = 0);

  // ---- Bayesian optimization
  m.def(
      "latin_hypercube",
      [](std::size_t n, const py::object& space, std::uint64_t seed) {
        return latin_hypercube(n, space_from_list(space), seed);
      },
      py::arg("n"), py::arg("space") = py::none(), py::arg("seed") = 0);
  m.def("expected_improvement", &expected_improvement, py::arg("mean"),
        py::arg("variance"), py::arg("best_so_far"));
  m.def(
      "optimize_detector",
      [](const std::function<double(std::vector<double>)>& objective,
         const py::object& space, std::size_t budget, std::uint64_t seed) {
        const SearchSpace s = space_from_list(space);
        OptimizeConfig cfg;
        cfg.budget = budget;
        cfg.seed = seed;
        const OptimizeResult result = optimize_detector(
            [&](std::span<const double> point) {
              return objective(std::vector<double>(point.begin(), point.end()));
            },
            s, cfg);
        py::list history;
        for (const auto& record : result.history) {
          history.append(py::make_tuple(record.iteration, record.point,
                                        record.objective));
        }
        py::dict out;
        out["best_point"] = result.best.point;
        out["best_objective"] = result.best.objective;
        out["history"] = std::move(history);
        return out;
      },
      py::arg("objective"), py::arg("space") = py::none(), py::arg("budget") = 60,
      py::arg("seed") = 0,
      "GP Bayesian optimization (maximization) over the search space; the "
      "default space is the detector's (h, T, d).");
}
