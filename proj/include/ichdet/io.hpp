#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ichdet/matrix.hpp"
#include "ichdet/types.hpp"

namespace ichdet {

enum class MatrixFormat { csv, amap };

/// Picks csv/amap from the file extension; anything else is a format error.
MatrixFormat matrix_format_from_path(const std::filesystem::path& path);

/// Reads a matrix from disk.
///
/// amap is the binary interchange format: magic "AMAP1\n", rows and cols as
/// unsigned 32-bit little-endian, then rows*cols IEEE-754 doubles
/// little-endian, row-major, no padding. csv is one row per line,
/// comma-separated decimal floats, LF endings, no header; the first line
/// fixes the column count.
Matrix read_matrix(const std::filesystem::path& path, MatrixFormat format);
Matrix read_matrix(const std::filesystem::path& path);

/// Writes a matrix. amap round-trips bit-exactly; csv uses the shortest
/// decimal representation that round-trips a double. The file is written via
/// a temporary and renamed, so a failed write leaves nothing behind.
void write_matrix(const Matrix& m, const std::filesystem::path& path,
                  MatrixFormat format);
void write_matrix(const Matrix& m, const std::filesystem::path& path);

/// Boxes CSV: header "slice_id,x0,y0,x1,y1", UTF-8, LF endings. Rows that
/// violate the box invariants are reported with their line number.
std::vector<BoundingBox> read_boxes(const std::filesystem::path& path);
void write_boxes(std::span<const BoundingBox> boxes,
                 const std::filesystem::path& path);

/// Detections JSON: array of {slice_id, x, y, score}. Written sorted by
/// slice_id (stable), so parallel producers emit identical files.
std::vector<Detection> read_detections(const std::filesystem::path& path);
void write_detections(std::span<const Detection> detections,
                      const std::filesystem::path& path);

/// Detector params JSON: {h, T, d, footprint_radius}; the radius is optional
/// on read and defaults to 1.
DetectorSettings read_detector_settings(const std::filesystem::path& path);
void write_detector_settings(const DetectorSettings& settings,
                             const std::filesystem::path& path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Writes a whole file atomically (temp file + rename).
void atomic_write(const std::filesystem::path& path, std::string_view data);

}  // namespace ichdet
