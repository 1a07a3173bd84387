#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "subsplit/metrics.hpp"
#include "subsplit/niw.hpp"

namespace subsplit {

// Headerless CSV, one point per row. Throws Errc::Io or Errc::InvalidData.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

// One integer label per row.
std::vector<std::int32_t> read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(const std::filesystem::path& path, std::span<const std::int32_t> labels);

// Trace CSV with a header row; unknown metrics are written as "nan".
void write_trace_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows);

}  // namespace subsplit
