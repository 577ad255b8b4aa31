// qqeval: score follow-up questions for appropriateness and effectiveness.
//
//   qqeval validate-rubric <rubric.json>
//   qqeval evaluate --dataset {caus|square|generic} --input <path> ...
//   qqeval validity --judge {stub|http} [--stub-rules <path>] --out <dir>

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "qqeval/analysis.hpp"
#include "qqeval/assets.hpp"
#include "qqeval/harness.hpp"
#include "qqeval/judge.hpp"
#include "qqeval/rubric.hpp"

namespace {

struct JudgeFlags {
  std::string judge = "stub";
  std::string stub_rules;
  std::string model{qqeval::kDefaultModel};
  std::string endpoint;
  std::string api_format = "anthropic";
  double temperature = 0.0;
  int max_tokens = 1500;
  int max_retries = 2;
  int timeout_s = 60;

  void attach(CLI::App* cmd) {
    cmd->add_option("--judge", judge, "Scoring backend")
        ->required()
        ->check(CLI::IsMember({"stub", "http"}));
    cmd->add_option("--stub-rules", stub_rules, "Stub rules JSON file")->check(CLI::ExistingFile);
    cmd->add_option("--model", model, "Judge model name")->capture_default_str();
    cmd->add_option("--endpoint", endpoint, "HTTP endpoint URL");
    cmd->add_option("--api-format", api_format, "HTTP wire format")
        ->check(CLI::IsMember({"anthropic", "chat"}))
        ->capture_default_str();
    cmd->add_option("--temperature", temperature, "Sampling temperature")->capture_default_str();
    cmd->add_option("--max-tokens", max_tokens, "Completion token limit")->capture_default_str();
    cmd->add_option("--max-retries", max_retries, "Transport retries per call")->capture_default_str();
    cmd->add_option("--timeout", timeout_s, "Per-call timeout in seconds")->capture_default_str();
  }

  /// Stub rules come from --stub-rules, else `fallback` when given.
  qqeval::Judge build(std::string_view fallback_rules = {}) const {
    qqeval::JudgeConfig cfg;
    cfg.backend = judge == "http" ? qqeval::BackendKind::HttpLlm : qqeval::BackendKind::Stub;
    cfg.model_name = model;
    cfg.temperature = temperature;
    cfg.max_tokens = max_tokens;
    cfg.max_retries = max_retries;
    cfg.timeout = std::chrono::seconds(timeout_s);
    cfg.api_format = api_format == "chat" ? qqeval::ApiFormat::ChatCompletions
                                          : qqeval::ApiFormat::Anthropic;
    if (!endpoint.empty()) cfg.endpoint_url = endpoint;

    std::vector<qqeval::StubRule> rules;
    if (cfg.backend == qqeval::BackendKind::Stub) {
      if (!stub_rules.empty()) {
        rules = qqeval::load_stub_rules(stub_rules);
      } else if (!fallback_rules.empty()) {
        rules = qqeval::parse_stub_rules(fallback_rules);
      } else {
        throw qqeval::ConfigError("--judge stub requires --stub-rules");
      }
    }
    return qqeval::Judge(cfg, std::move(rules));
  }
};

int report_error(const qqeval::Error& e) {
  std::cerr << "qqeval: " << qqeval::to_string(e.kind()) << " error: " << e.what() << "\n";
  return qqeval::exit_code_for(e.kind());
}

int cmd_validate_rubric(const std::string& path) {
  const qqeval::Rubric rubric = qqeval::load_rubric_file(path);
  std::cout << "rubric " << rubric.version << ": " << rubric.criteria.size() << " criteria, "
            << qqeval::kLevelCount << " levels each\n";
  for (const auto& c : rubric.criteria) {
    std::cout << "  " << qqeval::to_string(c.id) << " (" << qqeval::to_string(c.dimension) << ")";
    for (const auto& p : c.placeholders) std::cout << " ${" << p << "}";
    std::cout << "\n";
  }
  return qqeval::kExitOk;
}

int cmd_evaluate(const qqeval::BatchOptions& options, const JudgeFlags& flags) {
  const qqeval::Judge judge = flags.build();
  const qqeval::BatchResult result = qqeval::run_batch(options, judge);
  for (const auto& s : result.summaries) {
    std::cout << s.set_label << ": n=" << s.n << "\n";
  }
  std::cout << "evaluated " << result.evaluated << " scripts, reused " << result.reused
            << ", failures " << result.failures.size() << ", tokens " << result.tokens << "\n";
  std::cout << "reports written to " << options.out_dir.string() << "\n";
  return result.exit_code();
}

int cmd_validity(const JudgeFlags& flags, const std::string& rubric_path, const std::string& out,
                 int trials) {
  const qqeval::Judge judge = flags.build(qqeval::assets::validity_stub_rules_json());
  const qqeval::Rubric rubric =
      rubric_path.empty() ? qqeval::default_rubric() : qqeval::load_rubric_file(rubric_path);
  const qqeval::ValidityVerdict verdict = qqeval::run_validity(judge, rubric,
                                                               qqeval::builtin_validity_fixture(), trials);
  qqeval::write_validity_reports(verdict, out);

  for (const auto& p : verdict.pairs) {
    if (!p.card) std::cout << p.variant << "/" << p.context << " FAILED: " << *p.error << "\n";
  }
  for (const auto& c : verdict.checks) {
    std::cout << c.name << " " << (c.passed ? "PASS" : "FAIL") << ": " << c.detail << "\n";
  }
  if (!verdict.complete()) {
    std::cout << "verdict INCOMPLETE\n";
    return qqeval::kExitValidityIncomplete;
  }
  std::cout << "verdict " << (verdict.passed() ? "PASS" : "FAIL") << "\n";
  return verdict.passed() ? qqeval::kExitOk : qqeval::kExitValidityFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rubric-based evaluation of follow-up questions with an LLM judge"};
  app.require_subcommand(1);

  std::string rubric_file;
  auto* validate = app.add_subcommand("validate-rubric", "Load and validate a rubric document");
  validate->add_option("rubric", rubric_file, "Rubric JSON file")->required();

  qqeval::BatchOptions batch;
  JudgeFlags eval_flags;
  std::string dataset;
  std::string input;
  std::string rubric_path;
  std::string answerer;
  std::string goal;
  std::vector<int> positions;
  std::string out_dir;
  std::string sd_divisor = "n-1";
  auto* evaluate = app.add_subcommand("evaluate", "Score a dataset and write reports");
  evaluate->add_option("--dataset", dataset, "Input format")
      ->required()
      ->check(CLI::IsMember({"caus", "square", "generic"}));
  evaluate->add_option("--input", input, "Dataset file")->required();
  evaluate->add_option("--rubric", rubric_path, "Rubric JSON (default: built-in)");
  evaluate->add_option("--answerer", answerer, "Override ${answerer}");
  evaluate->add_option("--goal", goal, "Override ${goal}");
  evaluate->add_option("--positions", positions, "CAUS question positions")->delimiter(',');
  evaluate->add_option("--per-position", batch.per_position, "CAUS scenes per position")
      ->capture_default_str();
  evaluate->add_option("--per-category", batch.per_category, "SQUARE records per category")
      ->capture_default_str();
  evaluate->add_option("--seed", batch.seed, "Sampling seed")->required();
  evaluate->add_option("--out", out_dir, "Output directory")->required();
  evaluate->add_flag("--resume", batch.resume, "Reuse cards from an earlier checkpoint");
  evaluate->add_option("--concurrency", batch.concurrency, "In-flight judge calls")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evaluate->add_option("--sd-divisor", sd_divisor, "Standard deviation divisor")
      ->check(CLI::IsMember({"n", "n-1"}))
      ->capture_default_str();
  eval_flags.attach(evaluate);

  JudgeFlags validity_flags;
  std::string validity_out;
  std::string validity_rubric;
  int trials = 1;
  auto* validity = app.add_subcommand("validity", "Run the three-question validity test");
  validity->add_option("--out", validity_out, "Output directory")->required();
  validity->add_option("--rubric", validity_rubric, "Rubric JSON (default: built-in)");
  validity->add_option("--trials", trials, "Judge calls per pair (majority vote)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  validity_flags.attach(validity);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qqeval::kExitUsage;
  }

  try {
    if (*validate) return cmd_validate_rubric(rubric_file);
    if (*evaluate) {
      batch.dataset = *qqeval::parse_dataset_kind(dataset);
      batch.input = input;
      if (!rubric_path.empty()) batch.rubric_path = rubric_path;
      if (!answerer.empty()) batch.answerer = answerer;
      if (!goal.empty()) batch.goal = goal;
      if (!positions.empty()) batch.positions = {positions.begin(), positions.end()};
      batch.out_dir = out_dir;
      batch.sd_divisor = sd_divisor == "n" ? qqeval::SdDivisor::Population : qqeval::SdDivisor::Sample;
      return cmd_evaluate(batch, eval_flags);
    }
    if (*validity) return cmd_validity(validity_flags, validity_rubric, validity_out, trials);
  } catch (const qqeval::Error& e) {
    return report_error(e);
  }
  return qqeval::kExitUsage;
}
