#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qqeval/analysis.hpp"
#include "qqeval/datasets.hpp"
#include "qqeval/error.hpp"
#include "qqeval/judge.hpp"

namespace qqeval {

// ---------------------------------------------------------------------------
// Exit codes
// ---------------------------------------------------------------------------

inline constexpr int kExitOk = 0;
/// The run finished but some scripts failed (see failures.jsonl).
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitUsage = 2;
/// The validity verdict is complete and at least one check failed.
inline constexpr int kExitValidityFailed = 15;
/// Some validity pairs could not be scored.
inline constexpr int kExitValidityIncomplete = 16;

/// One distinct code per ErrorKind, all in [3, 14].
int exit_code_for(ErrorKind kind) noexcept;

// ---------------------------------------------------------------------------
// Validity test
// ---------------------------------------------------------------------------

struct ValidityVariant {
  std::string label;  // FQ0, FQ1, FQ2
  std::string fq_text;
};

struct ValidityContext {
  std::string label;  // information, social
  ContextVariables variables;
};

/// The address-change dialogue, its legitimate follow-up (FQ0), two invalid
/// rewrites (FQ1, FQ2), and an information-seeking and a social goal.
struct ValidityFixture {
  DialogueScript base_script;
  std::vector<ValidityVariant> variants;
  std::vector<ValidityContext> contexts;

  /// Throws ValidationError unless there are exactly 3 variants labelled
  /// FQ0..FQ2 with FQ0 equal to the base script's FQ, and exactly 2 contexts
  /// labelled information and social.
  void validate() const;

  const ValidityVariant& variant(std::string_view label) const;
  const ValidityContext& context(std::string_view label) const;
};

ValidityFixture parse_validity_fixture(std::string_view document);
/// The fixture compiled into the library.
const ValidityFixture& builtin_validity_fixture();

struct ValidityPair {
  std::string variant;
  std::string context;
  std::optional<ScoreCard> card;
  /// Set when the pair could not be scored.
  std::optional<std::string> error;
  std::optional<ErrorKind> error_kind;
};

struct ValidityCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidityVerdict {
  std::vector<ValidityPair> pairs;
  std::vector<ValidityCheck> checks;

  bool complete() const noexcept;
  bool passed() const noexcept;
  const ValidityPair* find(std::string_view variant, std::string_view context) const noexcept;
};

/// Mean of the three effectiveness scores.
double effectiveness_mean(const ScoreCard& card) noexcept;

/// Computes C1..C3 over whatever pairs are present. A check whose inputs are
/// missing fails with an "incomplete" detail.
///
///   C1: under the information goal FQ0's effectiveness mean strictly
///       exceeds FQ1's and FQ2's.
///   C2: FQ2's effectiveness mean under the social goal strictly exceeds its
///       own under the information goal.
///   C3: FQ1's informativeness is at most 3 under both goals.
std::vector<ValidityCheck> validity_checks(const std::vector<ValidityPair>& pairs);

/// Per-criterion mode over repeated trials; ties go to the lower score.
ScoreCard combine_trials(const std::vector<ScoreCard>& trials);

/// Scores all variant x context pairs (each `trials` times) and runs the
/// checks. Judge and parse errors are recorded per pair.
ValidityVerdict run_validity(const Judge& judge, const Rubric& rubric,
                             const ValidityFixture& fixture = builtin_validity_fixture(),
                             int trials = 1);

/// validity.json content.
std::string verdict_to_json(const ValidityVerdict& verdict);

/// Writes validity.json, records.jsonl and one radar chart per context.
void write_validity_reports(const ValidityVerdict& verdict, const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Batch evaluation
// ---------------------------------------------------------------------------

enum class DatasetKind { Caus, Square, Generic };

std::optional<DatasetKind> parse_dataset_kind(std::string_view text) noexcept;

struct BatchOptions {
  DatasetKind dataset = DatasetKind::Caus;
  std::filesystem::path input;
  /// Unset uses the built-in rubric.
  std::optional<std::filesystem::path> rubric_path;
  /// Overrides the dataset's default context; required for generic input.
  std::optional<std::string> answerer;
  std::optional<std::string> goal;
  std::set<int> positions{1, 3, 5};
  std::size_t per_position = 50;
  std::size_t per_category = 50;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  bool resume = false;
  int concurrency = 4;
  SdDivisor sd_divisor = SdDivisor::Sample;
};

struct BatchFailure {
  std::string set_label;
  std::string script_id;
  ErrorKind kind{};
  std::string message;
  std::string raw;
};

struct BatchResult {
  std::vector<QuestionSet> sets;
  std::vector<AggregateSummary> summaries;
  std::vector<ScoreCard> records;
  std::vector<BatchFailure> failures;
  std::size_t reused = 0;
  std::size_t evaluated = 0;
  std::int64_t tokens = 0;

  int exit_code() const noexcept { return failures.empty() ? kExitOk : kExitPartialFailure; }
};

/// Resume key: script id, context hash, rubric version and prompt version.
std::string checkpoint_key(const std::string& script_id, const ContextVariables& ctx,
                           const std::string& rubric_version, const std::string& prompt_version);

/// Ingests, samples, evaluates with bounded concurrency, aggregates and
/// renders reports into options.out_dir. Errors before evaluation (rubric,
/// ingestion, sampling) throw and leave out_dir untouched; per-script judge
/// errors are collected into failures.jsonl.
///
/// Completed cards are appended to checkpoint.jsonl as they arrive. With
/// options.resume, cards in an existing checkpoint whose key still matches
/// are reused instead of re-scored.
BatchResult run_batch(const BatchOptions& options, const Judge& judge);

}  // namespace qqeval
