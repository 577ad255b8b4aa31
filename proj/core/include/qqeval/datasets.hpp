#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qqeval/prompt.hpp"
#include "qqeval/rubric.hpp"

namespace qqeval {

/// A scene with five sequentially generated questions.
struct CausRecord {
  std::string scene_id;
  std::string scene_description;
  std::array<std::string, 5> questions;
};

enum class SquareCategory { Contentious, Ethical, Predictive };

inline constexpr std::array<SquareCategory, 3> kAllSquareCategories = {
    SquareCategory::Contentious, SquareCategory::Ethical, SquareCategory::Predictive};

std::string_view to_string(SquareCategory category) noexcept;
std::optional<SquareCategory> parse_square_category(std::string_view text) noexcept;

struct SquareRecord {
  std::string record_id;
  SquareCategory category{};
  std::string headline;
  std::string question;
};

/// Scripts evaluated under one shared context, e.g. the "3rd" CAUS set.
struct QuestionSet {
  std::string set_label;
  std::vector<DialogueScript> scripts;
  ContextVariables context;
};

/// Context used for CAUS scenes unless overridden.
ContextVariables caus_default_context();
/// Context used for SQUARE records unless overridden.
ContextVariables square_default_context();

/// "1st", "2nd", "3rd", "4th", "5th", ...
std::string ordinal_label(int position);

/// Normalized CAUS file: [{scene_id, scene_description, questions: [5]}].
/// Throws IngestionError naming the path and record.
std::vector<CausRecord> parse_caus(std::string_view document, const std::string& origin);
std::vector<CausRecord> load_caus(const std::filesystem::path& path);

/// Normalized SQUARE file: [{record_id, category, headline, question}].
std::vector<SquareRecord> parse_square(std::string_view document, const std::string& origin);
std::vector<SquareRecord> load_square(const std::filesystem::path& path);

/// Array of {id?, context: {...}, follow-up: {FQ, FA?, final_answer?}}.
/// Scripts without an id become "script-<n>" (1-based).
std::vector<DialogueScript> parse_generic(std::string_view document, const std::string& origin);
std::vector<DialogueScript> load_generic(const std::filesystem::path& path);

/// Uniform sample of `count` distinct indices from [0, population), drawn
/// with a partial Fisher-Yates shuffle over mt19937_64. Identical for a
/// given seed on every platform.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count,
                                        std::uint64_t seed);

/// One QuestionSet per position (1-based, ascending): `per_position` scenes
/// sampled without replacement, FQ = questions[position - 1]. Script ids are
/// "<scene_id>#q<position>". Throws SamplingError when per_position exceeds
/// the number of records.
std::vector<QuestionSet> adapt_caus(const std::vector<CausRecord>& records,
                                    const std::set<int>& positions, std::size_t per_position,
                                    std::uint64_t seed,
                                    const ContextVariables& context = caus_default_context());

/// One QuestionSet per category (contentious, ethical, predictive) with
/// `per_category` records each. Throws SamplingError naming a category
/// with too few records.
std::vector<QuestionSet> adapt_square(const std::vector<SquareRecord>& records,
                                      std::size_t per_category, std::uint64_t seed,
                                      const ContextVariables& context = square_default_context());

}  // namespace qqeval
