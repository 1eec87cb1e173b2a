// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#pragma once

#include <string>
#include <string_view>

namespace specjudge {

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Replaces CRLF and lone CR with LF.
std::string normalize_newlines(std::string_view text);

}  // namespace specjudge
