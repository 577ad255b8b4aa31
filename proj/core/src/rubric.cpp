#include "qqeval/rubric.hpp"

#include <algorithm>
#include <cctype>

#include "json_util.hpp"
#include "qqeval/assets.hpp"
#include "qqeval/error.hpp"

namespace qqeval {

using detail::json;

namespace {

constexpr std::array<std::string_view, kCriterionCount> kNames = {
    "Cohesion", "Answerability", "Respectfulness", "Clarity", "Coherence", "Informativeness"};
constexpr std::array<std::string_view, kCriterionCount> kKeys = {
    "cohesion", "answerability", "respectfulness", "clarity", "coherence", "informativeness"};

bool is_known_placeholder(std::string_view name) {
  return std::find(kKnownPlaceholders.begin(), kKnownPlaceholders.end(), name) !=
         kKnownPlaceholders.end();
}

const json& require(const json& obj, const char* field, const std::string& path) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ParseError("rubric: missing field '" + path + "." + field + "'");
  return *it;
}

std::string require_string(const json& obj, const char* field, const std::string& path) {
  const json& v = require(obj, field, path);
  if (!v.is_string()) {
    throw ParseError("rubric: field '" + path + "." + field + "' must be a string");
  }
  return v.get<std::string>();
}

Criterion parse_criterion_entry(const json& entry, std::size_t index) {
  const std::string path = "criteria[" + std::to_string(index) + "]";
  if (!entry.is_object()) throw ParseError("rubric: '" + path + "' must be an object");

  const std::string id_text = require_string(entry, "id", path);
  const auto id = parse_criterion(id_text);
  if (!id) throw ValidationError(id_text + ": unknown criterion id");
  const std::string name{to_string(*id)};

  const std::string dim_text = require_string(entry, "dimension", path);
  const auto dim = parse_dimension(dim_text);
  if (!dim) throw ValidationError(name + ": unknown dimension '" + dim_text + "'");
  if (*dim != dimension_of(*id)) {
    throw ValidationError(name + ": dimension " + dim_text + " does not match " +
                          std::string(to_string(dimension_of(*id))));
  }

  const json& levels = require(entry, "levels", path);
  if (!levels.is_array()) throw ParseError("rubric: field '" + path + ".levels' must be an array");
  if (levels.size() != kLevelCount) {
    throw ValidationError(name + ": expected 5 levels, found " + std::to_string(levels.size()));
  }

  Criterion c;
  c.id = *id;
  c.dimension = *dim;
  for (std::size_t i = 0; i < kLevelCount; ++i) {
    if (!levels[i].is_string()) {
      throw ParseError("rubric: field '" + path + ".levels[" + std::to_string(i) +
                       "]' must be a string");
    }
    std::string text = levels[i].get<std::string>();
    if (text.empty()) throw ValidationError(name + ": level " + std::to_string(i + 1) + " is empty");
    std::set<std::string> found;
    try {
      found = find_placeholders(text);
    } catch (const ValidationError& e) {
      throw ValidationError(name + ": level " + std::to_string(i + 1) + ": " + e.what());
    }
    for (const auto& p : found) {
      if (!is_known_placeholder(p)) {
        throw ValidationError(name + ": unknown placeholder ${" + p + "} in level " +
                              std::to_string(i + 1));
      }
      c.placeholders.insert(p);
    }
    c.levels[i] = std::move(text);
  }
  return c;
}

const Criterion& find_in(const std::vector<Criterion>& criteria, CriterionId id) {
  auto it = std::find_if(criteria.begin(), criteria.end(),
                         [id](const Criterion& c) { return c.id == id; });
  if (it == criteria.end()) {
    throw ValidationError(std::string(to_string(id)) + ": criterion missing");
  }
  return *it;
}

}  // namespace

std::string_view to_string(CriterionId id) noexcept { return kNames[index_of(id)]; }
std::string_view key_of(CriterionId id) noexcept { return kKeys[index_of(id)]; }

std::string_view to_string(Dimension dim) noexcept {
  return dim == Dimension::Appropriateness ? "Appropriateness" : "Effectiveness";
}

std::optional<CriterionId> parse_criterion(std::string_view text) noexcept {
  for (CriterionId id : kAllCriteria) {
    if (text == to_string(id) || text == key_of(id)) return id;
  }
  return std::nullopt;
}

std::optional<Dimension> parse_dimension(std::string_view text) noexcept {
  if (text == "Appropriateness") return Dimension::Appropriateness;
  if (text == "Effectiveness") return Dimension::Effectiveness;
  return std::nullopt;
}

std::set<std::string> find_placeholders(std::string_view text) {
  std::set<std::string> names;
  std::size_t pos = 0;
  while ((pos = text.find("${", pos)) != std::string_view::npos) {
    const std::size_t close = text.find('}', pos + 2);
    if (close == std::string_view::npos) throw ValidationError("unterminated placeholder");
    names.emplace(text.substr(pos + 2, close - pos - 2));
    pos = close + 1;
  }
  return names;
}

const Criterion& Rubric::at(CriterionId id) const { return find_in(criteria, id); }
const Criterion& InstantiatedRubric::at(CriterionId id) const { return find_in(criteria, id); }

void ContextVariables::validate() const {
  if (answerer.empty()) throw ValidationError("context: answerer must not be empty");
  if (goal.empty()) throw ValidationError("context: goal must not be empty");
  if (answerer.find("${") != std::string::npos) {
    throw ValidationError("context: answerer contains an unresolved placeholder");
  }
  if (goal.find("${") != std::string::npos) {
    throw ValidationError("context: goal contains an unresolved placeholder");
  }
}

Rubric load_rubric(std::string_view document) {
  const json doc = detail::parse_json<ParseError>(document, "rubric");
  if (!doc.is_object()) throw ParseError("rubric: top level must be an object");

  Rubric rubric;
  rubric.version = require_string(doc, "version", "$");
  const json& criteria = require(doc, "criteria", "$");
  if (!criteria.is_array()) throw ParseError("rubric: field '$.criteria' must be an array");

  std::array<bool, kCriterionCount> seen{};
  std::vector<Criterion> parsed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Criterion c = parse_criterion_entry(criteria[i], i);
    if (seen[index_of(c.id)]) {
      throw ValidationError(std::string(to_string(c.id)) + ": duplicate criterion");
    }
    seen[index_of(c.id)] = true;
    parsed.push_back(std::move(c));
  }
  for (CriterionId id : kAllCriteria) {
    rubric.criteria.push_back(find_in(parsed, id));
  }
  return rubric;
}

Rubric load_rubric_file(const std::filesystem::path& path) {
  return load_rubric(detail::read_file(path));
}

std::string serialize_rubric(const Rubric& rubric) {
  json doc;
  doc["version"] = rubric.version;
  doc["criteria"] = json::array();
  for (const Criterion& c : rubric.criteria) {
    doc["criteria"].push_back({{"id", to_string(c.id)},
                               {"dimension", to_string(c.dimension)},
                               {"levels", c.levels}});
  }
  return doc.dump(2) + "\n";
}

const Rubric& default_rubric() {
  static const Rubric rubric = load_rubric(assets::default_rubric_json());
  return rubric;
}

std::string substitute_placeholders(std::string_view text, const ContextVariables& ctx) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find("${", pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = text.find('}', open + 2);
    if (close == std::string_view::npos) break;
    const std::string_view name = text.substr(open + 2, close - open - 2);
    out.append(text.substr(pos, open - pos));
    if (name == "answerer") {
      out.append(ctx.answerer);
    } else if (name == "goal") {
      out.append(ctx.goal);
    } else {
      out.append(text.substr(open, close - open + 1));
    }
    pos = close + 1;
  }
  out.append(text.substr(pos));
  return out;
}

InstantiatedRubric instantiate(const Rubric& rubric, const ContextVariables& ctx) {
  ctx.validate();
  InstantiatedRubric out;
  out.source_version = rubric.version;
  out.context = ctx;
  out.criteria.reserve(rubric.criteria.size());
  for (const Criterion& c : rubric.criteria) {
    Criterion inst = c;
    for (auto& level : inst.levels) level = substitute_placeholders(level, ctx);
    inst.placeholders.clear();
    out.criteria.push_back(std::move(inst));
  }
  return out;
}

}  // namespace qqeval
