#include "ichdet/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "ichdet/errors.hpp"

namespace fs = std::filesystem;

namespace ichdet {

namespace {

constexpr char kAmapMagic[6] = {'A', 'M', 'A', 'P', '1', '\n'};

void append_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f64le(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint32_t load_u32le(const unsigned char* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
         std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

double load_f64le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw io_error("read failed: " + path.string());
  return std::move(buffer).str();
}

double parse_double(std::string_view token, const fs::path& path,
                    std::size_t line) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw format_error(path.string() + ":" + std::to_string(line) +
                       ": invalid number '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) {
    throw format_error(path.string() + ":" + std::to_string(line) +
                       ": non-finite value '" + std::string(token) + "'");
  }
  return value;
}

long parse_int(std::string_view token, const fs::path& path, std::size_t line) {
  long value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw format_error(path.string() + ":" + std::to_string(line) +
                       ": invalid integer '" + std::string(token) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

Matrix read_matrix_csv(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t eol = text.find('\n', start);
    if (eol == std::string::npos) eol = text.size();
    ++line_no;
    const std::string_view line = strip_cr(std::string_view(text).substr(start, eol - start));
    start = eol + 1;
    if (line.empty()) continue;
    const auto tokens = split(line, ',');
    if (cols == 0) {
      cols = tokens.size();
    } else if (tokens.size() != cols) {
      throw format_error(path.string() + ":" + std::to_string(line_no) +
                         ": expected " + std::to_string(cols) + " values, got " +
                         std::to_string(tokens.size()));
    }
    for (const auto token : tokens) values.push_back(parse_double(token, path, line_no));
    ++rows;
  }
  if (rows == 0) throw format_error(path.string() + ": empty matrix file");
  return Matrix(rows, cols, std::move(values));
}

Matrix read_matrix_amap(const fs::path& path) {
  const std::string raw = read_file(path);
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
  if (raw.size() < 14 || std::memcmp(raw.data(), kAmapMagic, 6) != 0) {
    throw format_error(path.string() + ": offset 0: bad or truncated amap magic");
  }
  const std::uint32_t rows = load_u32le(bytes + 6);
  const std::uint32_t cols = load_u32le(bytes + 10);
  if (rows == 0 || cols == 0) {
    throw format_error(path.string() + ": offset 6: zero dimension " +
                       std::to_string(rows) + "x" + std::to_string(cols));
  }
  const std::uint64_t count = std::uint64_t{rows} * cols;
  const std::uint64_t expected = 14 + 8 * count;
  if (raw.size() != expected) {
    throw format_error(path.string() + ": offset " + std::to_string(raw.size()) +
                       ": payload size mismatch, expected " +
                       std::to_string(expected) + " bytes");
  }
  std::vector<double> values(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    values[i] = load_f64le(bytes + 14 + 8 * i);
    if (!std::isfinite(values[i])) {
      throw format_error(path.string() + ": offset " + std::to_string(14 + 8 * i) +
                         ": non-finite value");
    }
  }
  return Matrix(rows, cols, std::move(values));
}

nlohmann::json parse_json(const fs::path& path) {
  const std::string text = read_file(path);
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw format_error(path.string() + ": invalid JSON");
  }
  return doc;
}

double require_finite_number(const nlohmann::json& j, const std::string& key,
                             const fs::path& path) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw format_error(path.string() + ": missing numeric field '" + key + "'");
  }
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) {
    throw format_error(path.string() + ": field '" + key + "' is not finite");
  }
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

void atomic_write(const fs::path& path, std::string_view data) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw io_error("write failed: " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw io_error("cannot replace " + path.string() + ": " + ec.message());
  }
}

MatrixFormat matrix_format_from_path(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".amap") return MatrixFormat::amap;
  if (ext == ".csv") return MatrixFormat::csv;
  throw format_error("unknown matrix extension '" + ext + "' for " + path.string());
}

Matrix read_matrix(const fs::path& path, MatrixFormat format) {
  return format == MatrixFormat::amap ? read_matrix_amap(path)
                                      : read_matrix_csv(path);
}

Matrix read_matrix(const fs::path& path) {
  return read_matrix(path, matrix_format_from_path(path));
}

void write_matrix(const Matrix& m, const fs::path& path, MatrixFormat format) {
  if (m.empty()) throw std::invalid_argument("write_matrix: empty matrix");
  std::string payload;
  if (format == MatrixFormat::amap) {
    payload.reserve(14 + 8 * m.size());
    payload.append(kAmapMagic, 6);
    append_u32le(payload, static_cast<std::uint32_t>(m.rows()));
    append_u32le(payload, static_cast<std::uint32_t>(m.cols()));
    for (const double v : m.values()) append_f64le(payload, v);
  } else {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (c > 0) payload.push_back(',');
        payload += format_double(m(r, c));
      }
      payload.push_back('\n');
    }
  }
  atomic_write(path, payload);
}

void write_matrix(const Matrix& m, const fs::path& path) {
  write_matrix(m, path, matrix_format_from_path(path));
}

std::vector<BoundingBox> read_boxes(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<BoundingBox> boxes;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t eol = text.find('\n', start);
    if (eol == std::string::npos) eol = text.size();
    ++line_no;
    const std::string_view line = strip_cr(std::string_view(text).substr(start, eol - start));
    start = eol + 1;
    if (line_no == 1) {
      if (line != "slice_id,x0,y0,x1,y1") {
        throw format_error(path.string() + ":1: expected header slice_id,x0,y0,x1,y1");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto tokens = split(line, ',');
    if (tokens.size() != 5) {
      throw format_error(path.string() + ":" + std::to_string(line_no) +
                         ": expected 5 fields, got " + std::to_string(tokens.size()));
    }
    BoundingBox box;
    box.slice_id = std::string(tokens[0]);
    box.x0 = static_cast<int>(parse_int(tokens[1], path, line_no));
    box.y0 = static_cast<int>(parse_int(tokens[2], path, line_no));
    box.x1 = static_cast<int>(parse_int(tokens[3], path, line_no));
    box.y1 = static_cast<int>(parse_int(tokens[4], path, line_no));
    try {
      box.validate();
    } catch (const std::invalid_argument& e) {
      throw format_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    boxes.push_back(std::move(box));
  }
  if (line_no == 0) throw format_error(path.string() + ": missing header");
  return boxes;
}

void write_boxes(std::span<const BoundingBox> boxes, const fs::path& path) {
  std::string payload = "slice_id,x0,y0,x1,y1\n";
  for (const auto& b : boxes) {
    payload += b.slice_id;
    payload += ',' + std::to_string(b.x0) + ',' + std::to_string(b.y0) + ',' +
               std::to_string(b.x1) + ',' + std::to_string(b.y1) + '\n';
  }
  atomic_write(path, payload);
}

std::vector<Detection> read_detections(const fs::path& path) {
  const nlohmann::json doc = parse_json(path);
  if (!doc.is_array()) {
    throw format_error(path.string() + ": detections JSON must be an array");
  }
  std::vector<Detection> detections;
  detections.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    const std::string where = path.string() + ": detections[" + std::to_string(i) + "]";
    if (!item.is_object() || !item.contains("slice_id") || !item.contains("x") ||
        !item.contains("y") || !item.contains("score")) {
      throw format_error(where + ": expected {slice_id, x, y, score}");
    }
    if (!item["slice_id"].is_string() || !item["x"].is_number_integer() ||
        !item["y"].is_number_integer() || !item["score"].is_number()) {
      throw format_error(where + ": wrong field types");
    }
    Detection det;
    det.slice_id = item["slice_id"].get<std::string>();
    det.x = item["x"].get<int>();
    det.y = item["y"].get<int>();
    det.score = item["score"].get<double>();
    if (!std::isfinite(det.score)) {
      throw format_error(where + ": non-finite score");
    }
    detections.push_back(std::move(det));
  }
  return detections;
}

void write_detections(std::span<const Detection> detections, const fs::path& path) {
  std::vector<const Detection*> ordered;
  ordered.reserve(detections.size());
  for (const auto& d : detections) ordered.push_back(&d);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Detection* a, const Detection* b) {
                     return a->slice_id < b->slice_id;
                   });
  nlohmann::json doc = nlohmann::json::array();
  for (const Detection* d : ordered) {
    doc.push_back({{"slice_id", d->slice_id}, {"x", d->x}, {"y", d->y}, {"score", d->score}});
  }
  atomic_write(path, doc.dump(2) + "\n");
}

DetectorSettings read_detector_settings(const fs::path& path) {
  const nlohmann::json doc = parse_json(path);
  if (!doc.is_object()) {
    throw format_error(path.string() + ": params JSON must be an object");
  }
  DetectorSettings settings;
  settings.params.h = require_finite_number(doc, "h", path);
  settings.params.T = require_finite_number(doc, "T", path);
  settings.params.d = require_finite_number(doc, "d", path);
  if (doc.contains("footprint_radius")) {
    if (!doc["footprint_radius"].is_number_integer()) {
      throw format_error(path.string() + ": footprint_radius must be an integer");
    }
    settings.footprint_radius = doc["footprint_radius"].get<int>();
  }
  try {
    settings.params.validate();
    Footprint{settings.footprint_radius}.validate();
  } catch (const std::invalid_argument& e) {
    throw format_error(path.string() + ": " + e.what());
  }
  return settings;
}

void write_detector_settings(const DetectorSettings& settings, const fs::path& path) {
  settings.params.validate();
  Footprint{settings.footprint_radius}.validate();
  const nlohmann::json doc = {{"h", settings.params.h},
                              {"T", settings.params.T},
                              {"d", settings.params.d},
                              {"footprint_radius", settings.footprint_radius}};
  atomic_write(path, doc.dump(2) + "\n");
}

}  // namespace ichdet
