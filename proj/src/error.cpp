// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#include "specjudge/error.hpp"

#include <array>
#include <utility>

namespace specjudge {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 22> kNames = {{
    {ErrorCode::kFile, "FileError"},
    {ErrorCode::kParse, "ParseError"},
    {ErrorCode::kSchema, "SchemaError"},
    {ErrorCode::kPairing, "PairingError"},
    {ErrorCode::kGherkin, "GherkinError"},
    {ErrorCode::kInvalidSpec, "InvalidSpec"},
    {ErrorCode::kTemplate, "TemplateError"},
    {ErrorCode::kMissingPlaceholder, "MissingPlaceholder"},
    {ErrorCode::kFormat, "FormatError"},
    {ErrorCode::kEmptySlice, "EmptySlice"},
    {ErrorCode::kVerdict, "VerdictError"},
    {ErrorCode::kTransport, "TransportError"},
    {ErrorCode::kTimeout, "TimeoutError"},
    {ErrorCode::kReplayMiss, "ReplayMiss"},
    {ErrorCode::kEmptyResponse, "EmptyResponse"},
    {ErrorCode::kDigestConflict, "DigestConflict"},
    {ErrorCode::kMissingVerdict, "MissingVerdict"},
    {ErrorCode::kDisjointRuns, "DisjointRuns"},
    {ErrorCode::kEmptyOriginal, "EmptyOriginal"},
    {ErrorCode::kConfig, "ConfigError"},
    {ErrorCode::kInvalidArgument, "InvalidArgument"},
    {ErrorCode::kInterrupted, "Interrupted"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Error";
}

ErrorCode error_code_from_string(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown error kind '" + std::string(name) + "'");
}

}  // namespace specjudge
