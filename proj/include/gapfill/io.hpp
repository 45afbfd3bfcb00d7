#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gapfill/core.hpp"
#include "gapfill/lgcp.hpp"

namespace gapfill::io {

// 17 significant digits, so values round-trip and files are byte-stable.
std::string format_double(double value);

// One event time per line under a `time` header.
OrderedConfig read_events(const std::filesystem::path& path);
std::string format_events(std::span<const double> times);
void write_events(const std::filesystem::path& path, std::span<const double> times);

// `day,count,observed` rows, consecutive days.
lgcp::DailyCounts read_counts(const std::filesystem::path& path);
std::string format_counts(const lgcp::DailyCounts& counts);
void write_counts(const std::filesystem::path& path, const lgcp::DailyCounts& counts);

// Whole-file helpers; throw IoError.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace gapfill::io
