#include "qqeval/datasets.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_set>

#include "json_util.hpp"
#include "qqeval/error.hpp"

namespace qqeval {

using detail::json;

namespace {

json parse_array(std::string_view document, const std::string& origin) {
  json doc = detail::parse_json<IngestionError>(document, origin);
  if (!doc.is_array()) throw IngestionError(origin + ": top level must be an array");
  return doc;
}

std::string string_field(const json& obj, const char* field, const std::string& where) {
  auto it = obj.find(field);
  if (it == obj.end()) throw IngestionError(where + ": missing field '" + field + "'");
  if (!it->is_string()) throw IngestionError(where + ": field '" + field + "' must be a string");
  std::string value = it->get<std::string>();
  if (value.empty()) throw IngestionError(where + ": field '" + field + "' is empty");
  return value;
}

std::optional<std::string> optional_string(const json& obj, const char* field,
                                           const std::string& where) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw IngestionError(where + ": field '" + field + "' must be a string");
  return it->get<std::string>();
}

/// Uniform integer in [0, bound) by rejection; independent of the standard
/// library's distribution implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

std::string_view to_string(SquareCategory category) noexcept {
  switch (category) {
    case SquareCategory::Contentious: return "contentious";
    case SquareCategory::Ethical: return "ethical";
    case SquareCategory::Predictive: return "predictive";
  }
  return "contentious";
}

std::optional<SquareCategory> parse_square_category(std::string_view text) noexcept {
  for (SquareCategory c : kAllSquareCategories) {
    if (text == to_string(c)) return c;
  }
  return std::nullopt;
}

ContextVariables caus_default_context() {
  return {"scene member", "resolving uncertainty by acquiring useful information"};
}

ContextVariables square_default_context() {
  return {"Large Language Model", "harmless and helpful conversation"};
}

std::string ordinal_label(int position) {
  const int mod100 = position % 100;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    switch (position % 10) {
      case 1: suffix = "st"; break;
      case 2: suffix = "nd"; break;
      case 3: suffix = "rd"; break;
      default: break;
    }
  }
  return std::to_string(position) + suffix;
}

std::vector<CausRecord> parse_caus(std::string_view document, const std::string& origin) {
  const json doc = parse_array(document, origin);
  std::vector<CausRecord> records;
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& entry = doc[i];
    std::string where = origin + ": record " + std::to_string(i);
    if (!entry.is_object()) throw IngestionError(where + ": must be an object");
    CausRecord rec;
    rec.scene_id = string_field(entry, "scene_id", where);
    where += " (" + rec.scene_id + ")";
    rec.scene_description = string_field(entry, "scene_description", where);
    auto qs = entry.find("questions");
    if (qs == entry.end() || !qs->is_array()) {
      throw IngestionError(where + ": field 'questions' must be an array");
    }
    if (qs->size() != 5) {
      throw IngestionError(where + ": expected 5 questions, found " + std::to_string(qs->size()));
    }
    for (std::size_t q = 0; q < 5; ++q) {
      if (!(*qs)[q].is_string() || (*qs)[q].get<std::string>().empty()) {
        throw IngestionError(where + ": question " + std::to_string(q + 1) +
                             " must be a non-empty string");
      }
      rec.questions[q] = (*qs)[q].get<std::string>();
    }
    if (!ids.insert(rec.scene_id).second) throw IngestionError(where + ": duplicate scene_id");
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<CausRecord> load_caus(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const IoError& e) {
    throw IngestionError(e.what());
  }
  return parse_caus(text, path.string());
}

std::vector<SquareRecord> parse_square(std::string_view document, const std::string& origin) {
  const json doc = parse_array(document, origin);
  std::vector<SquareRecord> records;
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& entry = doc[i];
    std::string where = origin + ": record " + std::to_string(i);
    if (!entry.is_object()) throw IngestionError(where + ": must be an object");
    SquareRecord rec;
    rec.record_id = string_field(entry, "record_id", where);
    where += " (" + rec.record_id + ")";
    const std::string category = string_field(entry, "category", where);
    const auto parsed = parse_square_category(category);
    if (!parsed) throw IngestionError(where + ": unknown category '" + category + "'");
    rec.category = *parsed;
    rec.headline = string_field(entry, "headline", where);
    rec.question = string_field(entry, "question", where);
    if (!ids.insert(rec.record_id).second) throw IngestionError(where + ": duplicate record_id");
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<SquareRecord> load_square(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const IoError& e) {
    throw IngestionError(e.what());
  }
  return parse_square(text, path.string());
}

std::vector<DialogueScript> parse_generic(std::string_view document, const std::string& origin) {
  static constexpr std::array<const char*, 4> kContextFields = {
      "main_intent", "user_request", "scene_description", "headline"};

  const json doc = parse_array(document, origin);
  std::vector<DialogueScript> scripts;
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& entry = doc[i];
    std::string where = origin + ": script " + std::to_string(i);
    if (!entry.is_object()) throw IngestionError(where + ": must be an object");

    DialogueScript script;
    script.source = ScriptSource::Generic;
    script.script_id = optional_string(entry, "id", where).value_or("script-" + std::to_string(i + 1));

    auto ctx = entry.find("context");
    if (ctx == entry.end() || !ctx->is_object()) {
      throw IngestionError(where + ": field 'context' must be an object");
    }
    for (auto it = ctx->begin(); it != ctx->end(); ++it) {
      if (std::find_if(kContextFields.begin(), kContextFields.end(), [&](const char* f) {
            return it.key() == f;
          }) == kContextFields.end()) {
        throw IngestionError(where + ": unknown context field '" + it.key() + "'");
      }
    }
    script.context.main_intent = optional_string(*ctx, "main_intent", where);
    script.context.user_request = optional_string(*ctx, "user_request", where);
    script.context.scene_description = optional_string(*ctx, "scene_description", where);
    script.context.headline = optional_string(*ctx, "headline", where);
    if (script.context.empty()) throw IngestionError(where + ": 'context' has no fields");

    auto follow = entry.find("follow-up");
    if (follow == entry.end() || !follow->is_object()) {
      throw IngestionError(where + ": field 'follow-up' must be an object");
    }
    script.fq = string_field(*follow, "FQ", where + " follow-up");
    script.fa = optional_string(*follow, "FA", where);
    script.final_answer = optional_string(*follow, "final_answer", where);

    if (!ids.insert(script.script_id).second) {
      throw IngestionError(where + ": duplicate id '" + script.script_id + "'");
    }
    scripts.push_back(std::move(script));
  }
  return scripts;
}

std::vector<DialogueScript> load_generic(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const IoError& e) {
    throw IngestionError(e.what());
  }
  return parse_generic(text, path.string());
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count,
                                        std::uint64_t seed) {
  if (count > population) {
    throw SamplingError("cannot sample " + std::to_string(count) + " of " +
                        std::to_string(population));
  }
  std::vector<std::size_t> pool(population);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, population - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

std::vector<QuestionSet> adapt_caus(const std::vector<CausRecord>& records,
                                    const std::set<int>& positions, std::size_t per_position,
                                    std::uint64_t seed, const ContextVariables& context) {
  context.validate();
  if (positions.empty()) throw SamplingError("caus: no positions requested");
  if (per_position == 0) throw SamplingError("caus: per_position must be positive");
  if (per_position > records.size()) {
    throw SamplingError("caus: per_position " + std::to_string(per_position) + " exceeds " +
                        std::to_string(records.size()) + " records");
  }
  std::vector<QuestionSet> sets;
  std::size_t stream = 0;
  for (int position : positions) {
    if (position < 1 || position > 5) {
      throw SamplingError("caus: position " + std::to_string(position) + " outside [1, 5]");
    }
    QuestionSet set;
    set.set_label = ordinal_label(position);
    set.context = context;
    // Each position draws from its own stream derived from the seed.
    for (std::size_t idx : sample_indices(records.size(), per_position, seed + stream++)) {
      const CausRecord& rec = records[idx];
      DialogueScript script;
      script.script_id = rec.scene_id + "#q" + std::to_string(position);
      script.context.scene_description = rec.scene_description;
      script.fq = rec.questions[static_cast<std::size_t>(position - 1)];
      script.source = ScriptSource::Caus;
      set.scripts.push_back(std::move(script));
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

std::vector<QuestionSet> adapt_square(const std::vector<SquareRecord>& records,
                                      std::size_t per_category, std::uint64_t seed,
                                      const ContextVariables& context) {
  context.validate();
  if (per_category == 0) throw SamplingError("square: per_category must be positive");
  std::vector<QuestionSet> sets;
  std::size_t stream = 0;
  for (SquareCategory category : kAllSquareCategories) {
    std::vector<const SquareRecord*> pool;
    for (const auto& r : records) {
      if (r.category == category) pool.push_back(&r);
    }
    if (pool.size() < per_category) {
      throw SamplingError("square: category " + std::string(to_string(category)) + " has " +
                          std::to_string(pool.size()) + " records, need " +
                          std::to_string(per_category));
    }
    QuestionSet set;
    set.set_label = std::string(to_string(category));
    set.context = context;
    for (std::size_t idx : sample_indices(pool.size(), per_category, seed + stream++)) {
      const SquareRecord& rec = *pool[idx];
      DialogueScript script;
      script.script_id = rec.record_id;
      script.context.headline = rec.headline;
      script.fq = rec.question;
      script.source = ScriptSource::Square;
      set.scripts.push_back(std::move(script));
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

}  // namespace qqeval
