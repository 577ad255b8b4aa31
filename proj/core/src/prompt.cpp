#include "qqeval/prompt.hpp"

#include <algorithm>

#include "qqeval/assets.hpp"
#include "qqeval/error.hpp"

namespace qqeval {

namespace {

std::string_view trim_newlines(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.remove_prefix(1);
  return s;
}

std::string output_example() {
  std::string out = "{";
  bool first = true;
  for (CriterionId id : kAllCriteria) {
    if (!first) out += ", ";
    first = false;
    out += "\"";
    out += key_of(id);
    out += "\": {\"score\": <1-5>, \"rationale\": \"...\"}";
  }
  out += "}";
  return out;
}

std::string criterion_key_list() {
  std::string out;
  for (CriterionId id : kAllCriteria) {
    if (!out.empty()) out += ", ";
    out += "\"";
    out += key_of(id);
    out += "\"";
  }
  return out;
}

}  // namespace

std::string_view to_string(ScriptSource source) noexcept {
  switch (source) {
    case ScriptSource::Caus: return "caus";
    case ScriptSource::Square: return "square";
    case ScriptSource::Generic: return "generic";
    case ScriptSource::Fixture: return "fixture";
  }
  return "generic";
}

void DialogueScript::validate() const {
  if (fq.empty()) throw ValidationError("script '" + script_id + "': FQ must not be empty");
  if (context.empty()) {
    throw ValidationError("script '" + script_id + "': at least one context field is required");
  }
}

PromptTemplate PromptTemplate::parse(std::string_view text) {
  PromptTemplate t;
  std::string* section = nullptr;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    pos = eol + 1;

    if (line.starts_with("@version ")) {
      t.version_ = std::string(line.substr(9));
      section = nullptr;
    } else if (line.starts_with("@schema ")) {
      t.schema_id_ = std::string(line.substr(8));
      section = nullptr;
    } else if (line == "@system") {
      section = &t.system_;
    } else if (line == "@user") {
      section = &t.user_;
    } else if (line == "@reminder") {
      section = &t.reminder_;
    } else if (line.starts_with("@")) {
      throw ParseError("prompt template: line " + std::to_string(line_no) +
                       ": unknown directive '" + std::string(line) + "'");
    } else if (section != nullptr) {
      section->append(line);
      section->push_back('\n');
    } else if (!line.empty()) {
      throw ParseError("prompt template: line " + std::to_string(line_no) +
                       ": text outside a section");
    }
    if (eol == text.size()) break;
  }
  for (std::string* s : {&t.system_, &t.user_, &t.reminder_}) *s = std::string(trim_newlines(*s));
  if (t.version_.empty()) throw ParseError("prompt template: missing @version");
  if (t.schema_id_.empty()) throw ParseError("prompt template: missing @schema");
  if (t.system_.empty()) throw ParseError("prompt template: missing @system section");
  if (t.user_.empty()) throw ParseError("prompt template: missing @user section");
  return t;
}

const PromptTemplate& PromptTemplate::builtin() {
  static const PromptTemplate tmpl = parse(assets::judge_prompt_template());
  return tmpl;
}

std::vector<std::string> PromptTemplate::slots() const {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = user_.find("{{", pos)) != std::string::npos) {
    const std::size_t close = user_.find("}}", pos + 2);
    if (close == std::string::npos) break;
    std::string name = user_.substr(pos + 2, close - pos - 2);
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    pos = close + 2;
  }
  return names;
}

std::string PromptTemplate::render_user(const std::map<std::string, std::string>& values) const {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = user_.find("{{", pos);
    if (open == std::string::npos) break;
    const std::size_t close = user_.find("}}", open + 2);
    if (close == std::string::npos) break;
    const std::string name = user_.substr(open + 2, close - open - 2);
    auto it = values.find(name);
    if (it == values.end()) throw ValidationError("prompt template: no value for slot '" + name + "'");
    out.append(user_, pos, open - pos);
    out.append(it->second);
    pos = close + 2;
  }
  out.append(user_, pos);
  return out;
}

std::string render_context(const ScriptContext& context) {
  std::string out;
  auto line = [&out](std::string_view label, const std::optional<std::string>& value) {
    if (!value) return;
    if (!out.empty()) out += '\n';
    out.append(label).append(": ").append(*value);
  };
  line("main_intent", context.main_intent);
  line("user_request", context.user_request);
  line("scene_description", context.scene_description);
  line("headline", context.headline);
  return out;
}

std::string render_rubric(const InstantiatedRubric& rubric) {
  std::string out;
  for (CriterionId id : kAllCriteria) {
    const Criterion& c = rubric.at(id);
    if (!out.empty()) out += "\n\n";
    out.append("[").append(to_string(id)).append("] (").append(to_string(c.dimension)).append(")");
    for (std::size_t i = 0; i < kLevelCount; ++i) {
      out.append("\n").append(std::to_string(i + 1)).append(": ").append(c.levels[i]);
    }
  }
  return out;
}

JudgePrompt assemble_prompt(const DialogueScript& script, const InstantiatedRubric& rubric,
                            const PromptTemplate& tmpl) {
  script.validate();
  JudgePrompt prompt;
  prompt.system_text = tmpl.system_text();
  prompt.user_text = tmpl.render_user({
      {"context", render_context(script.context)},
      {"fq", script.fq},
      {"rubric", render_rubric(rubric)},
      {"criterion_keys", criterion_key_list()},
      {"output_example", output_example()},
  });
  prompt.expected_schema_id = tmpl.schema_id();
  prompt.prompt_version = tmpl.version();
  prompt.script_id = script.script_id;
  prompt.context = rubric.context;
  return prompt;
}

JudgePrompt with_format_reminder(const JudgePrompt& prompt, const PromptTemplate& tmpl) {
  JudgePrompt retry = prompt;
  if (!tmpl.reminder_text().empty()) {
    retry.user_text += "\n\n";
    retry.user_text += tmpl.reminder_text();
  }
  return retry;
}

}  // namespace qqeval
