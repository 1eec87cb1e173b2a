// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

// Small string and file helpers shared by the library sources.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace specjudge {

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames, so readers never observe a
/// partially written file.
void write_file(const std::filesystem::path& path, std::string_view content);

void append_file(const std::filesystem::path& path, std::string_view content);

/// Splits on LF; a trailing CR on each line is dropped. A final empty line
/// after the last LF is not reported.
std::vector<std::string> split_lines(std::string_view text);

std::string_view trim(std::string_view s);
std::string_view rtrim(std::string_view s);
std::string to_lower(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Compact single-line dump; invalid UTF-8 is replaced rather than thrown.
std::string dump_compact(const nlohmann::json& j);

/// Fixed-precision decimal formatting ("%.*f"), used by every report.
std::string fixed(double value, int precision);

}  // namespace specjudge
