#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "qqeval/prompt.hpp"
#include "qqeval/rubric.hpp"

namespace qqeval {

enum class BackendKind { HttpLlm, Stub };

/// Wire dialect spoken by the HTTP backend. Both are normalized to the
/// minimal chat contract {model, temperature, max_tokens, messages}.
enum class ApiFormat { Anthropic, ChatCompletions };

inline constexpr std::string_view kDefaultModel = "claude-3-5-sonnet-20240620";
inline constexpr std::string_view kDefaultAnthropicEndpoint = "https://api.anthropic.com/v1/messages";
inline constexpr std::string_view kApiKeyEnv = "QQEVAL_API_KEY";

struct JudgeConfig {
  BackendKind backend = BackendKind::Stub;
  std::string model_name{kDefaultModel};
  double temperature = 0.0;
  int max_tokens = 1500;
  std::optional<std::string> endpoint_url;
  ApiFormat api_format = ApiFormat::Anthropic;
  std::chrono::seconds timeout{60};
  int max_retries = 2;
  /// First retry waits this long; each further retry doubles it.
  std::chrono::milliseconds retry_backoff{500};
  /// Minimum spacing between HTTP requests across threads; zero disables.
  std::chrono::milliseconds min_request_interval{0};
  /// Overrides the QQEVAL_API_KEY environment variable when set.
  std::optional<std::string> api_key;

  /// Throws ConfigError on negative temperature, non-positive max_tokens or
  /// negative max_retries.
  void validate() const;
};

using ScoreArray = std::array<int, kCriterionCount>;

struct Provenance {
  std::string model_name;
  std::string prompt_version;
  std::string rubric_version;
  ContextVariables context;
  std::string timestamp;
  double temperature = 0.0;
  /// Tokens reported by the backend, 0 when unknown.
  std::int64_t tokens = 0;
  std::vector<std::string> warnings;

  bool operator==(const Provenance&) const = default;
};

struct ScoreCard {
  std::string script_id;
  /// Indexed by index_of(CriterionId); each in [1, 5].
  ScoreArray scores{};
  std::array<std::string, kCriterionCount> rationales;
  Provenance provenance;

  int score(CriterionId id) const noexcept { return scores[index_of(id)]; }
  const std::string& rationale(CriterionId id) const noexcept { return rationales[index_of(id)]; }

  bool operator==(const ScoreCard&) const = default;
};

/// Inputs to provenance that parse_response cannot recover from the reply.
struct ProvenanceInputs {
  std::string model_name;
  std::string prompt_version;
  std::string rubric_version;
  ContextVariables context;
  double temperature = 0.0;
  std::int64_t tokens = 0;
};

/// Extracts the first JSON object from `raw` (surrounding prose and code
/// fences are skipped) and validates it against the six-criterion schema.
///
/// Throws FormatError when no JSON object is found,
/// IncompleteResponseError naming the first missing criterion or empty
/// rationale, and RangeError for a score that is not an integer in [1, 5].
/// All three keep `raw`.
ScoreCard parse_response(std::string_view raw, const std::string& script_id,
                         const ProvenanceInputs& inputs);

/// The reply format requested by the prompt, for a complete score set.
std::string render_response(const ScoreArray& scores,
                            const std::array<std::string, kCriterionCount>& rationales);

/// One JSON object per line in records.jsonl.
std::string scorecard_to_json(const ScoreCard& card);
/// Inverse of scorecard_to_json; throws ParseError.
ScoreCard scorecard_from_json(std::string_view line);

struct StubRule {
  /// Regex searched within the script id; unset matches everything.
  std::optional<std::string> script_id_pattern;
  /// Regex searched within the goal; unset matches everything.
  std::optional<std::string> goal_pattern;
  ScoreArray fixed_scores{};
  std::string rationale;
};

/// Parses a JSON array of rules:
///   [{"match": {"script_id": "...", "goal": "..."},
///     "scores": {"cohesion": 4, ...}, "rationale": "..."}]
/// Throws ParseError for structure and ValidationError for incomplete or
/// out-of-range scores and invalid regexes.
std::vector<StubRule> parse_stub_rules(std::string_view document);
std::vector<StubRule> load_stub_rules(const std::filesystem::path& path);

struct BackendReply {
  std::string text;
  std::int64_t tokens = 0;
};

/// A scoring backend. Implementations are safe to call concurrently.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual BackendReply complete(const JudgePrompt& prompt) = 0;
};

/// Answers from an ordered rule list; the first rule whose patterns match
/// the prompt's script id and goal wins.
class StubBackend final : public JudgeBackend {
 public:
  explicit StubBackend(std::vector<StubRule> rules);

  BackendReply complete(const JudgePrompt& prompt) override;

  /// Number of complete() calls so far.
  std::uint64_t calls() const noexcept { return calls_.load(); }

 private:
  struct CompiledRule {
    StubRule rule;
    std::optional<std::regex> script_id;
    std::optional<std::regex> goal;
  };
  std::vector<CompiledRule> rules_;
  std::atomic<std::uint64_t> calls_{0};
};

/// Chat-style HTTP backend with bounded retries on transport failures.
class HttpBackend final : public JudgeBackend {
 public:
  /// Throws ConfigError when no API key is available.
  explicit HttpBackend(JudgeConfig config);
  ~HttpBackend() override;

  BackendReply complete(const JudgePrompt& prompt) override;

  /// Request body for the configured dialect.
  std::string request_body(const JudgePrompt& prompt) const;
  /// Pulls the assistant text (and token usage) out of a response body.
  /// Throws TransportError(attempts = 1) when the body has no text.
  BackendReply extract_reply(std::string_view body) const;

 private:
  void wait_for_slot();

  JudgeConfig config_;
  std::string api_key_;
  std::mutex rate_mutex_;
  std::chrono::steady_clock::time_point next_slot_{};
};

/// Backend plus the configuration that produced it.
class Judge {
 public:
  /// Builds the backend named by config.backend. Stub judges need rules.
  explicit Judge(JudgeConfig config, std::vector<StubRule> stub_rules = {});
  Judge(JudgeConfig config, std::shared_ptr<JudgeBackend> backend);

  const JudgeConfig& config() const noexcept { return config_; }
  JudgeBackend& backend() const noexcept { return *backend_; }

  BackendReply score(const JudgePrompt& prompt) const { return backend_->complete(prompt); }

 private:
  JudgeConfig config_;
  std::shared_ptr<JudgeBackend> backend_;
};

/// instantiate -> assemble_prompt -> score -> parse_response, with one
/// format-reminder retry when the reply cannot be parsed. Transport
/// failures surface as TransportError, unusable replies as ResponseError.
ScoreCard evaluate_script(const DialogueScript& script, const Rubric& rubric,
                          const ContextVariables& ctx, const Judge& judge,
                          const PromptTemplate& tmpl = PromptTemplate::builtin());

}  // namespace qqeval
