#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qqeval/rubric.hpp"

namespace qqeval {

enum class ScriptSource { Caus, Square, Generic, Fixture };

std::string_view to_string(ScriptSource source) noexcept;

/// Context fields a dialogue script may carry; absent fields are not
/// rendered into prompts.
struct ScriptContext {
  std::optional<std::string> main_intent;
  std::optional<std::string> user_request;
  std::optional<std::string> scene_description;
  std::optional<std::string> headline;

  bool empty() const noexcept {
    return !main_intent && !user_request && !scene_description && !headline;
  }

  bool operator==(const ScriptContext&) const = default;
};

/// A context block followed by the follow-up question (FQ) under evaluation.
struct DialogueScript {
  std::string script_id;
  ScriptContext context;
  std::string fq;
  std::optional<std::string> fa;
  std::optional<std::string> final_answer;
  ScriptSource source = ScriptSource::Generic;

  /// Throws ValidationError if fq is empty or no context field is present.
  void validate() const;

  bool operator==(const DialogueScript&) const = default;
};

struct JudgePrompt {
  std::string system_text;
  std::string user_text;
  std::string expected_schema_id;
  std::string prompt_version;
  // Routing metadata. Not sent to the model; the stub backend matches on it.
  std::string script_id;
  ContextVariables context;
};

/// Prompt template asset. Layout:
///
///   @version <id>
///   @schema <id>
///   @system
///   ...system text...
///   @user
///   ...user text with {{slot}} markers...
///   @reminder
///   ...text appended on a format retry...
class PromptTemplate {
 public:
  /// Throws ParseError on a malformed template.
  static PromptTemplate parse(std::string_view text);

  /// The template shipped with the library (prompts/judge_v1.txt).
  static const PromptTemplate& builtin();

  const std::string& version() const noexcept { return version_; }
  const std::string& schema_id() const noexcept { return schema_id_; }
  const std::string& system_text() const noexcept { return system_; }
  const std::string& reminder_text() const noexcept { return reminder_; }

  /// Slot names used by the user section, in order of first appearance.
  std::vector<std::string> slots() const;

  /// Fills every {{slot}}. Throws ValidationError when a slot has no value.
  std::string render_user(const std::map<std::string, std::string>& values) const;

 private:
  std::string version_;
  std::string schema_id_;
  std::string system_;
  std::string user_;
  std::string reminder_;
};

/// Context block as rendered into the prompt: one `field: value` line per
/// present field, in declaration order.
std::string render_context(const ScriptContext& context);

/// Rubric block: `[Name]` header then `k: description` for k = 1..5.
std::string render_rubric(const InstantiatedRubric& rubric);

JudgePrompt assemble_prompt(const DialogueScript& script, const InstantiatedRubric& rubric,
                            const PromptTemplate& tmpl = PromptTemplate::builtin());

/// The prompt re-sent after an unusable reply: same text plus the reminder.
JudgePrompt with_format_reminder(const JudgePrompt& prompt,
                                 const PromptTemplate& tmpl = PromptTemplate::builtin());

}  // namespace qqeval
