#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <ppcr/geometry.hpp>
#include <ppcr/metrics.hpp>
#include <ppcr/registration.hpp>

namespace ppcr::io {

enum class CloudFormat { PlyAscii, Xyz };

/// `.ply` selects PLY, anything else XYZ.
CloudFormat format_from_extension(const std::filesystem::path& path);

/// Reads an ASCII PLY or XYZ cloud. Throws IoError if the file cannot be opened
/// and ParseError (with line number) on malformed content.
PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format);
PointCloud read_cloud(const std::filesystem::path& path);

/// Writes coordinates with 9 significant digits.
void write_cloud(const std::filesystem::path& path, std::span<const Point3> cloud, CloudFormat format);

/// 4x4 row-major homogeneous matrix, one row per line. The rotation block is
/// projected onto SO(3); off-manifold blocks (beyond 1e-3) and a bottom row other
/// than `0 0 0 1` are rejected with ParseError.
RigidTransform read_transform(const std::filesystem::path& path);

/// Writes with 17 significant digits so that a read-back is exact.
void write_transform(const std::filesystem::path& path, const RigidTransform& transform);

/// Trace file columns, in order.
inline constexpr std::string_view kTraceHeader = "iteration,initial_cost,final_cost,cost_drop,successful_steps,mse_prev,mse_gt";

void write_trace(const std::filesystem::path& path, std::span<const IterationRecord> trace);

/// The numeric columns of one trace row.
struct TraceRow {
  int iteration = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double cost_drop = 0.0;
  int successful_steps = 0;
  std::optional<double> mse_prev;
  std::optional<double> mse_gt;
};

std::vector<TraceRow> read_trace(const std::filesystem::path& path);

inline constexpr std::string_view kSummaryHeader = "count,median_mse_gt,q75_mse_gt,q95_mse_gt,mean_iterations";

void write_summary(const std::filesystem::path& path, const EvaluationSummary& summary);

/// Formats a double with 9 significant digits, the convention for all text tables.
std::string format_number(double value);

/// One problem of a batch manifest. Relative paths are resolved against the manifest directory.
struct ManifestEntry {
  std::size_t line = 0;
  std::filesystem::path source;
  std::filesystem::path target;
  std::filesystem::path ground_truth;
};

/// One problem per line: `source target ground_truth`, `#` starts a comment.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

}  // namespace ppcr::io
