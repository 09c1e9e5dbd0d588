#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spectraprune/spectrum.hpp"

namespace spectraprune {

enum class ReportFormat { kJson, kCsv };
ReportFormat parse_report_format(std::string_view name);

// Index lists render as JSON arrays and as space-separated values in CSV.
using IndexList = std::vector<std::int64_t>;
using Cell = std::variant<double, std::int64_t, bool, std::string, IndexList>;

struct ReportField {
  std::string name;
  Cell value;
};

/// A tabular report. JSON renders as
///   {"schema": ..., <meta fields>, "rows": [{column: value, ...}, ...]}
/// CSV renders a header row of meta names followed by column names, with the
/// meta values repeated on every data line. A meta field that shares a
/// column name appears only as the column.
struct Report {
  std::string schema;
  std::vector<ReportField> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

// Schema names.
inline constexpr std::string_view kSweepSchema = "sweep-v1";
inline constexpr std::string_view kSpectrumSchema = "spectrum-v1";
inline constexpr std::string_view kTrajectorySchema = "trajectory-v1";
inline constexpr std::string_view kChannelsSchema = "channels-v1";
inline constexpr std::string_view kSpectrumDeltaSchema = "spectrum-delta-v1";
inline constexpr std::string_view kConvCheckSchema = "conv-check-v1";

Report sweep_report(std::span<const SweepRow> rows, std::uint64_t seed);
Report spectrum_report(const SpectrumSummary& s, std::uint64_t seed);
Report trajectory_report_table(const NormTrajectory& t, std::uint64_t seed);
Report channels_report(std::span<const ChannelSweepRow> rows, std::span<const std::size_t> removed,
                       double f_norm, std::uint64_t seed);
Report spectrum_delta_report(const SpectrumDelta& d, std::uint64_t seed);

std::string render_report(const Report& r, ReportFormat format);
void write_report(const std::filesystem::path& path, const Report& r, ReportFormat format);

/// "%.17g": enough significant digits to round-trip any double.
std::string format_double(double v);

}  // namespace spectraprune
