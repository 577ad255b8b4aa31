#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace qqeval {

enum class Dimension { Appropriateness, Effectiveness };

/// Declaration order is the canonical criterion order (rubric tables, radar
/// axes, CSV rows).
enum class CriterionId { Cohesion, Answerability, Respectfulness, Clarity, Coherence, Informativeness };

inline constexpr std::size_t kCriterionCount = 6;
inline constexpr std::size_t kLevelCount = 5;

inline constexpr std::array<CriterionId, kCriterionCount> kAllCriteria = {
    CriterionId::Cohesion, CriterionId::Answerability, CriterionId::Respectfulness,
    CriterionId::Clarity,  CriterionId::Coherence,     CriterionId::Informativeness,
};

inline constexpr std::size_t index_of(CriterionId id) noexcept { return static_cast<std::size_t>(id); }

constexpr Dimension dimension_of(CriterionId id) noexcept {
  switch (id) {
    case CriterionId::Cohesion:
    case CriterionId::Answerability:
    case CriterionId::Respectfulness:
      return Dimension::Appropriateness;
    case CriterionId::Clarity:
    case CriterionId::Coherence:
    case CriterionId::Informativeness:
      return Dimension::Effectiveness;
  }
  return Dimension::Effectiveness;
}

/// Display name, e.g. "Cohesion".
std::string_view to_string(CriterionId id) noexcept;
/// Lowercase key used in judge responses, e.g. "cohesion".
std::string_view key_of(CriterionId id) noexcept;
std::string_view to_string(Dimension dim) noexcept;

/// Accepts the display name or the lowercase key.
std::optional<CriterionId> parse_criterion(std::string_view text) noexcept;
std::optional<Dimension> parse_dimension(std::string_view text) noexcept;

/// Placeholder names a rubric may reference as `${name}`.
inline constexpr std::array<std::string_view, 2> kKnownPlaceholders = {"answerer", "goal"};

/// Names of all `${...}` tokens in `text`, in no particular order. Throws
/// ValidationError for an unterminated `${`.
std::set<std::string> find_placeholders(std::string_view text);

struct Criterion {
  CriterionId id{};
  Dimension dimension{};
  /// levels[i] describes score i + 1.
  std::array<std::string, kLevelCount> levels;
  std::set<std::string> placeholders;

  bool operator==(const Criterion&) const = default;
};

struct Rubric {
  std::string version;
  /// One entry per CriterionId, in canonical order.
  std::vector<Criterion> criteria;

  const Criterion& at(CriterionId id) const;

  bool operator==(const Rubric&) const = default;
};

struct ContextVariables {
  std::string answerer;
  std::string goal;

  /// Throws ValidationError if either field is empty or holds `${`.
  void validate() const;

  bool operator==(const ContextVariables&) const = default;
};

struct InstantiatedRubric {
  std::vector<Criterion> criteria;
  std::string source_version;
  ContextVariables context;

  const Criterion& at(CriterionId id) const;
};

/// Parses and validates a rubric JSON document.
///
/// Structural problems (bad JSON, wrong types, missing fields) raise
/// ParseError with a line/column or field path. Rubric invariant violations
/// (level count, empty level, unknown placeholder, duplicate or missing
/// criterion, wrong dimension) raise ValidationError naming the criterion.
Rubric load_rubric(std::string_view document);
Rubric load_rubric_file(const std::filesystem::path& path);

/// Canonical JSON form; load_rubric(serialize_rubric(r)) == r.
std::string serialize_rubric(const Rubric& rubric);

/// The shipped Table 2 rubric, compiled into the library.
const Rubric& default_rubric();

/// Replaces `${answerer}` and `${goal}`; every other byte is copied as is.
std::string substitute_placeholders(std::string_view text, const ContextVariables& ctx);

InstantiatedRubric instantiate(const Rubric& rubric, const ContextVariables& ctx);

}  // namespace qqeval
