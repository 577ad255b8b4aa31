#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace qqeval {

/// Every failure the library can raise belongs to exactly one kind. The CLI
/// maps kinds to exit codes one-to-one.
enum class ErrorKind {
  Parse,
  Validation,
  Ingestion,
  Sampling,
  Config,
  Transport,
  Format,
  IncompleteResponse,
  Range,
  StubCoverage,
  Aggregation,
  Io,
};

inline constexpr ErrorKind kAllErrorKinds[] = {
    ErrorKind::Parse,      ErrorKind::Validation,         ErrorKind::Ingestion,
    ErrorKind::Sampling,   ErrorKind::Config,             ErrorKind::Transport,
    ErrorKind::Format,     ErrorKind::IncompleteResponse, ErrorKind::Range,
    ErrorKind::StubCoverage, ErrorKind::Aggregation,      ErrorKind::Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed document. The message carries a line/column or a field path.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& message) : Error(ErrorKind::Parse, message) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorKind::Validation, message) {}
};

class IngestionError : public Error {
 public:
  explicit IngestionError(const std::string& message)
      : Error(ErrorKind::Ingestion, message) {}
};

class SamplingError : public Error {
 public:
  explicit SamplingError(const std::string& message)
      : Error(ErrorKind::Sampling, message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorKind::Config, message) {}
};

class TransportError : public Error {
 public:
  TransportError(const std::string& message, int attempts)
      : Error(ErrorKind::Transport, message), attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// Base for failures to turn a judge reply into a ScoreCard. Keeps the raw
/// reply for audit.
class ResponseError : public Error {
 public:
  ResponseError(ErrorKind kind, const std::string& message, std::string raw)
      : Error(kind, message), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class FormatError : public ResponseError {
 public:
  FormatError(const std::string& message, std::string raw)
      : ResponseError(ErrorKind::Format, message, std::move(raw)) {}
};

class IncompleteResponseError : public ResponseError {
 public:
  IncompleteResponseError(std::string field, std::string raw)
      : ResponseError(ErrorKind::IncompleteResponse, "incomplete response: missing " + field,
                      std::move(raw)),
        field_(std::move(field)) {}

  /// Lowercase criterion key, or `<key>.rationale` for an empty rationale.
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class RangeError : public ResponseError {
 public:
  RangeError(std::string criterion, const std::string& detail, std::string raw)
      : ResponseError(ErrorKind::Range, criterion + ": " + detail, std::move(raw)),
        criterion_(std::move(criterion)) {}

  const std::string& criterion() const noexcept { return criterion_; }

 private:
  std::string criterion_;
};

class StubCoverageError : public Error {
 public:
  explicit StubCoverageError(std::string script_id)
      : Error(ErrorKind::StubCoverage, "no stub rule matches script '" + script_id + "'"),
        script_id_(std::move(script_id)) {}

  const std::string& script_id() const noexcept { return script_id_; }

 private:
  std::string script_id_;
};

class AggregationError : public Error {
 public:
  explicit AggregationError(const std::string& message)
      : Error(ErrorKind::Aggregation, message) {}
};

class IoError : public Error {
 public:
  IoError(std::string path, const std::string& message)
      : Error(ErrorKind::Io, path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace qqeval
