// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The specjudge Authors

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace specjudge {

/// Every failure raised by the library carries one of these codes. The C API
/// maps them one-to-one onto `sj_status` values.
enum class ErrorCode {
  kFile,
  kParse,
  kSchema,
  kPairing,
  kGherkin,
  kInvalidSpec,
  kTemplate,
  kMissingPlaceholder,
  kFormat,
  kEmptySlice,
  kVerdict,
  kTransport,
  kTimeout,
  kReplayMiss,
  kEmptyResponse,
  kDigestConflict,
  kMissingVerdict,
  kDisjointRuns,
  kEmptyOriginal,
  kConfig,
  kInvalidArgument,
  kInterrupted,
};

std::string_view to_string(ErrorCode code);
ErrorCode error_code_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed line in a line-delimited input file.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + message),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class PairingError : public Error {
 public:
  PairingError(const std::string& message, std::vector<std::string> sample_ids)
      : Error(ErrorCode::kPairing, message), sample_ids_(std::move(sample_ids)) {}
  const std::vector<std::string>& sample_ids() const noexcept { return sample_ids_; }

 private:
  std::vector<std::string> sample_ids_;
};

class TransportError : public Error {
 public:
  TransportError(int status, const std::string& message)
      : Error(ErrorCode::kTransport, message), status_(status) {}
  /// HTTP status, or 0 when the request never produced a response.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class ReplayMiss : public Error {
 public:
  explicit ReplayMiss(std::string digest)
      : Error(ErrorCode::kReplayMiss, "replay miss for request digest " + digest),
        digest_(std::move(digest)) {}
  const std::string& digest() const noexcept { return digest_; }

 private:
  std::string digest_;
};

/// A required XML-delimited block is absent from a model response.
class FormatError : public Error {
 public:
  explicit FormatError(std::string tag, const std::string& detail = {})
      : Error(ErrorCode::kFormat,
              "missing or unterminated <" + tag + "> block" +
                  (detail.empty() ? std::string() : ": " + detail)),
        tag_(std::move(tag)) {}
  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
};

}  // namespace specjudge
