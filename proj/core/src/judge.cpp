#include "qqeval/judge.hpp"

#include "json_util.hpp"
#include "qqeval/error.hpp"

namespace qqeval {

using detail::json;
using ordered_json = nlohmann::ordered_json;

namespace {

/// End offset (one past the closing brace) of the balanced object starting
/// at `open`, honoring string literals. npos when unbalanced.
std::size_t match_object(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<json> first_json_object(std::string_view raw) {
  std::size_t pos = 0;
  while ((pos = raw.find('{', pos)) != std::string_view::npos) {
    const std::size_t end = match_object(raw, pos);
    if (end != std::string_view::npos) {
      const std::string_view candidate = raw.substr(pos, end - pos);
      json parsed = json::parse(candidate.begin(), candidate.end(), nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    ++pos;
  }
  return std::nullopt;
}

const json* lookup_criterion(const json& obj, CriterionId id) {
  if (auto it = obj.find(key_of(id)); it != obj.end()) return &*it;
  if (auto it = obj.find(to_string(id)); it != obj.end()) return &*it;
  return nullptr;
}

ScoreArray parse_score_object(const json& obj, std::string_view what) {
  if (!obj.is_object()) throw ValidationError(std::string(what) + ": scores must be an object");
  ScoreArray scores{};
  for (CriterionId id : kAllCriteria) {
    const json* v = lookup_criterion(obj, id);
    if (v == nullptr) {
      throw ValidationError(std::string(what) + ": missing score for " + std::string(key_of(id)));
    }
    if (!v->is_number_integer() || v->get<std::int64_t>() < 1 || v->get<std::int64_t>() > 5) {
      throw ValidationError(std::string(what) + ": score for " + std::string(key_of(id)) +
                            " must be an integer in [1, 5]");
    }
    scores[index_of(id)] = v->get<int>();
  }
  return scores;
}

}  // namespace

void JudgeConfig::validate() const {
  if (!(temperature >= 0.0)) throw ConfigError("judge: temperature must be >= 0");
  if (max_tokens <= 0) throw ConfigError("judge: max_tokens must be positive");
  if (max_retries < 0) throw ConfigError("judge: max_retries must be >= 0");
  if (timeout.count() <= 0) throw ConfigError("judge: timeout must be positive");
}

ScoreCard parse_response(std::string_view raw, const std::string& script_id,
                         const ProvenanceInputs& inputs) {
  const std::string raw_copy(raw);
  const auto obj = first_json_object(raw);
  if (!obj) throw FormatError("no JSON object found in judge response", raw_copy);

  for (CriterionId id : kAllCriteria) {
    if (lookup_criterion(*obj, id) == nullptr) {
      throw IncompleteResponseError(std::string(key_of(id)), raw_copy);
    }
  }

  ScoreCard card;
  card.script_id = script_id;
  for (CriterionId id : kAllCriteria) {
    const std::string key(key_of(id));
    const json& entry = *lookup_criterion(*obj, id);
    if (!entry.is_object()) throw IncompleteResponseError(key + ".score", raw_copy);
    auto score = entry.find("score");
    if (score == entry.end() || score->is_null()) {
      throw IncompleteResponseError(key + ".score", raw_copy);
    }
    if (!score->is_number_integer()) {
      throw RangeError(key, "score is not an integer: " + score->dump(), raw_copy);
    }
    const std::int64_t value = score->get<std::int64_t>();
    if (value < 1 || value > 5) {
      throw RangeError(key, "score " + std::to_string(value) + " outside [1, 5]", raw_copy);
    }
    auto rationale = entry.find("rationale");
    if (rationale == entry.end() || !rationale->is_string() ||
        rationale->get<std::string>().empty()) {
      throw IncompleteResponseError(key + ".rationale", raw_copy);
    }
    card.scores[index_of(id)] = static_cast<int>(value);
    card.rationales[index_of(id)] = rationale->get<std::string>();
  }

  card.provenance.model_name = inputs.model_name;
  card.provenance.prompt_version = inputs.prompt_version;
  card.provenance.rubric_version = inputs.rubric_version;
  card.provenance.context = inputs.context;
  card.provenance.temperature = inputs.temperature;
  card.provenance.tokens = inputs.tokens;
  card.provenance.timestamp = detail::utc_timestamp();
  if (inputs.temperature != 0.0) {
    card.provenance.warnings.push_back("non-zero temperature: scores are not reproducible");
  }
  return card;
}

std::string render_response(const ScoreArray& scores,
                            const std::array<std::string, kCriterionCount>& rationales) {
  ordered_json obj = ordered_json::object();
  for (CriterionId id : kAllCriteria) {
    obj[std::string(key_of(id))] = {{"score", scores[index_of(id)]},
                                    {"rationale", rationales[index_of(id)]}};
  }
  return obj.dump();
}

std::string scorecard_to_json(const ScoreCard& card) {
  ordered_json scores = ordered_json::object();
  ordered_json rationales = ordered_json::object();
  for (CriterionId id : kAllCriteria) {
    scores[std::string(key_of(id))] = card.score(id);
    rationales[std::string(key_of(id))] = card.rationale(id);
  }
  const Provenance& p = card.provenance;
  ordered_json prov = {
      {"model_name", p.model_name},
      {"prompt_version", p.prompt_version},
      {"rubric_version", p.rubric_version},
      {"context", {{"answerer", p.context.answerer}, {"goal", p.context.goal}}},
      {"temperature", p.temperature},
      {"tokens", p.tokens},
      {"timestamp", p.timestamp},
      {"warnings", p.warnings},
  };
  ordered_json out = {{"script_id", card.script_id},
                      {"scores", scores},
                      {"rationales", rationales},
                      {"provenance", prov}};
  return out.dump();
}

ScoreCard scorecard_from_json(std::string_view line) {
  const json obj = detail::parse_json<ParseError>(line, "scorecard");
  try {
    ScoreCard card;
    card.script_id = obj.at("script_id").get<std::string>();
    const json& scores = obj.at("scores");
    const json& rationales = obj.at("rationales");
    for (CriterionId id : kAllCriteria) {
      const std::string key(key_of(id));
      card.scores[index_of(id)] = scores.at(key).get<int>();
      card.rationales[index_of(id)] = rationales.at(key).get<std::string>();
    }
    const json& p = obj.at("provenance");
    card.provenance.model_name = p.at("model_name").get<std::string>();
    card.provenance.prompt_version = p.at("prompt_version").get<std::string>();
    card.provenance.rubric_version = p.at("rubric_version").get<std::string>();
    card.provenance.context.answerer = p.at("context").at("answerer").get<std::string>();
    card.provenance.context.goal = p.at("context").at("goal").get<std::string>();
    card.provenance.temperature = p.at("temperature").get<double>();
    card.provenance.tokens = p.at("tokens").get<std::int64_t>();
    card.provenance.timestamp = p.at("timestamp").get<std::string>();
    card.provenance.warnings = p.at("warnings").get<std::vector<std::string>>();
    return card;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scorecard: ") + e.what());
  }
}

std::vector<StubRule> parse_stub_rules(std::string_view document) {
  const json doc = detail::parse_json<ParseError>(document, "stub rules");
  if (!doc.is_array()) throw ParseError("stub rules: top level must be an array");
  std::vector<StubRule> rules;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& entry = doc[i];
    const std::string where = "stub rules[" + std::to_string(i) + "]";
    if (!entry.is_object()) throw ParseError(where + ": must be an object");
    StubRule rule;
    if (auto m = entry.find("match"); m != entry.end()) {
      if (!m->is_object()) throw ParseError(where + ".match: must be an object");
      for (const char* field : {"script_id", "goal"}) {
        if (auto f = m->find(field); f != m->end()) {
          if (!f->is_string()) throw ParseError(where + ".match." + field + ": must be a string");
          try {
            std::regex check(f->get<std::string>());
          } catch (const std::regex_error&) {
            throw ValidationError(where + ".match." + field + ": invalid regex");
          }
          (std::string_view(field) == "goal" ? rule.goal_pattern : rule.script_id_pattern) =
              f->get<std::string>();
        }
      }
    }
    auto scores = entry.find("scores");
    if (scores == entry.end()) throw ParseError(where + ": missing field 'scores'");
    rule.fixed_scores = parse_score_object(*scores, where);
    if (auto r = entry.find("rationale"); r != entry.end()) {
      if (!r->is_string()) throw ParseError(where + ".rationale: must be a string");
      rule.rationale = r->get<std::string>();
    }
    if (rule.rationale.empty()) rule.rationale = "fixed score from stub rule " + std::to_string(i);
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<StubRule> load_stub_rules(const std::filesystem::path& path) {
  return parse_stub_rules(detail::read_file(path));
}

StubBackend::StubBackend(std::vector<StubRule> rules) {
  rules_.reserve(rules.size());
  for (auto& r : rules) {
    CompiledRule c;
    if (r.script_id_pattern) c.script_id.emplace(*r.script_id_pattern);
    if (r.goal_pattern) c.goal.emplace(*r.goal_pattern);
    c.rule = std::move(r);
    rules_.push_back(std::move(c));
  }
}

BackendReply StubBackend::complete(const JudgePrompt& prompt) {
  ++calls_;
  for (const CompiledRule& c : rules_) {
    if (c.script_id && !std::regex_search(prompt.script_id, *c.script_id)) continue;
    if (c.goal && !std::regex_search(prompt.context.goal, *c.goal)) continue;
    std::array<std::string, kCriterionCount> rationales;
    rationales.fill(c.rule.rationale);
    return {render_response(c.rule.fixed_scores, rationales), 0};
  }
  throw StubCoverageError(prompt.script_id);
}

Judge::Judge(JudgeConfig config, std::vector<StubRule> stub_rules) : config_(std::move(config)) {
  config_.validate();
  if (config_.backend == BackendKind::Stub) {
    if (stub_rules.empty()) throw ConfigError("stub judge: no stub rules given");
    backend_ = std::make_shared<StubBackend>(std::move(stub_rules));
  } else {
    backend_ = std::make_shared<HttpBackend>(config_);
  }
}

Judge::Judge(JudgeConfig config, std::shared_ptr<JudgeBackend> backend)
    : config_(std::move(config)), backend_(std::move(backend)) {
  config_.validate();
  if (!backend_) throw ConfigError("judge: null backend");
}

ScoreCard evaluate_script(const DialogueScript& script, const Rubric& rubric,
                          const ContextVariables& ctx, const Judge& judge,
                          const PromptTemplate& tmpl) {
  ctx.validate();
  script.validate();
  const InstantiatedRubric inst = instantiate(rubric, ctx);
  const JudgePrompt prompt = assemble_prompt(script, inst, tmpl);

  ProvenanceInputs inputs;
  inputs.model_name =
      judge.config().backend == BackendKind::Stub ? "stub" : judge.config().model_name;
  inputs.prompt_version = tmpl.version();
  inputs.rubric_version = rubric.version;
  inputs.context = ctx;
  inputs.temperature = judge.config().temperature;

  BackendReply reply = judge.score(prompt);
  inputs.tokens = reply.tokens;
  try {
    return parse_response(reply.text, script.script_id, inputs);
  } catch (const ResponseError&) {
    // One reminder, then the second failure propagates.
  }
  BackendReply retry = judge.score(with_format_reminder(prompt, tmpl));
  inputs.tokens += retry.tokens;
  ScoreCard card = parse_response(retry.text, script.script_id, inputs);
  card.provenance.warnings.push_back("format retry used");
  return card;
}

}  // namespace qqeval
