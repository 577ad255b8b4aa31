#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "oracles.hpp"
#include "qqeval/assets.hpp"
#include "qqeval/harness.hpp"

namespace qqeval {
namespace {

using testing::slurp;
using testing::source_dir;

std::vector<StubRule> rules(const std::string& name) {
  return load_stub_rules(source_dir() / "fixtures/stub" / name);
}

ScoreCard card_with(const ScoreArray& scores) { return testing::make_card("x", scores); }

ValidityPair pair(std::string variant, std::string context, const ScoreArray& scores) {
  return {std::move(variant), std::move(context), card_with(scores), std::nullopt, std::nullopt};
}

/// A fresh temporary directory per test, removed afterwards.
class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("qqeval_harness_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path write(const std::string& name, const std::string& text) {
    const auto path = dir_ / name;
    std::ofstream(path, std::ios::binary) << text;
    return path;
  }

  std::filesystem::path dir_;
};

std::string synthetic_caus_json(std::size_t scenes) {
  nlohmann::json doc = nlohmann::json::array();
  for (std::size_t i = 0; i < scenes; ++i) {
    const std::string id = "scene-" + std::to_string(i);
    nlohmann::json qs = nlohmann::json::array();
    for (int q = 1; q <= 5; ++q) qs.push_back("question " + std::to_string(q) + " about " + id);
    doc.push_back({{"scene_id", id}, {"scene_description", "a scene numbered " + std::to_string(i)}, {"questions", qs}});
  }
  return doc.dump(1);
}

/// Scores depend on the script id so cards differ between scripts.
std::vector<StubRule> digit_rules() {
  std::vector<StubRule> out;
  for (int d = 0; d < 10; ++d) {
    StubRule r;
    r.script_id_pattern = std::to_string(d) + "#";
    r.fixed_scores = {1 + d % 5, 1 + (d + 1) % 5, 5, 1 + (d * 3) % 5, 1 + (d + 2) % 5, 1 + (d * 7) % 5};
    r.rationale = "digit " + std::to_string(d);
    out.push_back(r);
  }
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto eol = text.find('\n', pos);
    out.push_back(text.substr(pos, eol - pos));
    pos = eol == std::string::npos ? text.size() : eol + 1;
  }
  return out;
}

/// records.jsonl with timestamps blanked, as a sorted multiset of lines.
std::multiset<std::string> records_without_timestamps(const std::filesystem::path& path) {
  std::multiset<std::string> out;
  for (const auto& line : lines_of(slurp(path))) {
    auto obj = nlohmann::ordered_json::parse(line);
    obj["provenance"]["timestamp"] = "";
    out.insert(obj.dump());
  }
  return out;
}

// ---- exit codes -------------------------------------------------------------

TEST(ExitCodes, OnePerErrorKindAndDistinct) {
  std::set<int> codes = {kExitOk, kExitPartialFailure, kExitUsage, kExitValidityFailed, kExitValidityIncomplete};
  EXPECT_EQ(codes.size(), 5u);
  for (ErrorKind kind : kAllErrorKinds) {
    const int code = exit_code_for(kind);
    EXPECT_GE(code, 3);
    EXPECT_LE(code, 14);
    EXPECT_TRUE(codes.insert(code).second) << to_string(kind);
  }
  EXPECT_EQ(codes.size(), 5u + std::size(kAllErrorKinds));
}

// ---- validity ---------------------------------------------------------------

TEST(ValidityFixture, BuiltinContent) {
  const ValidityFixture& f = builtin_validity_fixture();
  EXPECT_NO_THROW(f.validate());
  ASSERT_EQ(f.variants.size(), 3u);
  ASSERT_EQ(f.contexts.size(), 2u);
  EXPECT_EQ(f.variant("FQ0").fq_text, f.base_script.fq);
  EXPECT_NE(f.variant("FQ0").fq_text.find("is it just the address that's changing while the ownership stays the same?"),
            std::string::npos);
  EXPECT_NE(f.variant("FQ1").fq_text.find("Would you like to inquire about changing the name on the registration?"),
            std::string::npos);
  EXPECT_NE(f.variant("FQ2").fq_text.find("Are you satisfied with your new home?"), std::string::npos);
  EXPECT_EQ(f.context("information").variables.goal, "resolving uncertainty by acquiring useful information");
  EXPECT_EQ(f.context("social").variables.goal, "icebreaking for social interaction");
  EXPECT_EQ(f.base_script.context.main_intent, "address_change");
  EXPECT_EQ(parse_validity_fixture(slurp(source_dir() / "fixtures/validity/figure1_fixture.json")).variants.size(), 3u);
}

TEST(ValidityFixture, RejectsMalformed) {
  nlohmann::json doc = nlohmann::json::parse(slurp(source_dir() / "fixtures/validity/figure1_fixture.json"));
  auto broken = doc;
  broken["variants"].erase(2);
  EXPECT_THROW(parse_validity_fixture(broken.dump()), ValidationError);
  broken = doc;
  broken["variants"][0]["fq"] = "something else";
  EXPECT_THROW(parse_validity_fixture(broken.dump()), ValidationError);
  broken = doc;
  broken["contexts"][1]["label"] = "other";
  EXPECT_THROW(parse_validity_fixture(broken.dump()), ValidationError);
  EXPECT_THROW(parse_validity_fixture("[]"), ParseError);
}

TEST(ValidityChecks, EffectivenessMean) {
  EXPECT_DOUBLE_EQ(effectiveness_mean(card_with({1, 1, 1, 2, 3, 5})), 10.0 / 3.0);
}

TEST(ValidityChecks, StrictInequalities) {
  // FQ0 ties FQ1 under information: C1 fails. FQ2 social equals information: C2 fails.
  const std::vector<ValidityPair> pairs = {
      pair("FQ0", "information", {5, 5, 5, 3, 3, 3}), pair("FQ1", "information", {5, 5, 5, 3, 3, 3}),
      pair("FQ2", "information", {5, 5, 5, 1, 1, 1}), pair("FQ0", "social", {5, 5, 5, 3, 3, 3}),
      pair("FQ1", "social", {5, 5, 5, 3, 3, 3}),      pair("FQ2", "social", {5, 5, 5, 1, 1, 1})};
  const auto checks = validity_checks(pairs);
  ASSERT_EQ(checks.size(), 3u);
  EXPECT_FALSE(checks[0].passed);
  EXPECT_NE(checks[0].detail.find("FQ0 does not exceed FQ1"), std::string::npos);
  EXPECT_FALSE(checks[1].passed);
  EXPECT_TRUE(checks[2].passed);
}

TEST(ValidityChecks, MissingInputsFailAsIncomplete) {
  const auto checks = validity_checks({pair("FQ0", "information", {5, 5, 5, 5, 5, 5})});
  for (const auto& c : checks) {
    EXPECT_FALSE(c.passed) << c.name;
    EXPECT_TRUE(c.detail.starts_with("incomplete")) << c.detail;
  }
}

TEST(RunValidity, Figure2PatternPasses) {
  const Judge judge(JudgeConfig{}, rules("validity_figure2.json"));
  const ValidityVerdict v = run_validity(judge, default_rubric());
  EXPECT_EQ(v.pairs.size(), 6u);
  EXPECT_TRUE(v.complete());
  EXPECT_TRUE(v.passed());
  for (const auto& c : v.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
  const ValidityPair* fq2_social = v.find("FQ2", "social");
  ASSERT_NE(fq2_social, nullptr);
  EXPECT_EQ(fq2_social->card->provenance.context.goal, "icebreaking for social interaction");
  EXPECT_EQ(fq2_social->card->script_id, "FQ2");
}

TEST(RunValidity, EmbeddedRulesMatchShippedFile) {
  // The CLI falls back to the embedded copy; both must behave identically.
  const Judge shipped(JudgeConfig{}, rules("validity_figure2.json"));
  const Judge embedded(JudgeConfig{}, parse_stub_rules(assets::validity_stub_rules_json()));
  const ValidityVerdict a = run_validity(shipped, default_rubric());
  const ValidityVerdict b = run_validity(embedded, default_rubric());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) EXPECT_EQ(a.pairs[i].card->scores, b.pairs[i].card->scores);
}

TEST(RunValidity, AdversarialFailsC1AndC3) {
  const Judge judge(JudgeConfig{}, rules("validity_adversarial.json"));
  const ValidityVerdict v = run_validity(judge, default_rubric());
  EXPECT_TRUE(v.complete());
  EXPECT_FALSE(v.passed());
  ASSERT_EQ(v.checks.size(), 3u);
  EXPECT_FALSE(v.checks[0].passed);
  EXPECT_NE(v.checks[0].detail.find("FQ0 does not exceed FQ1"), std::string::npos) << v.checks[0].detail;
  EXPECT_FALSE(v.checks[2].passed);
  EXPECT_NE(v.checks[2].detail.find("above 3"), std::string::npos) << v.checks[2].detail;
}

TEST(RunValidity, FailedPairMarksIncomplete) {
  auto partial = rules("validity_figure2.json");
  partial.pop_back();  // FQ2 under the social goal is no longer covered
  const Judge judge(JudgeConfig{}, partial);
  const ValidityVerdict v = run_validity(judge, default_rubric());
  EXPECT_FALSE(v.complete());
  EXPECT_FALSE(v.passed());
  const ValidityPair* missing = v.find("FQ2", "social");
  ASSERT_NE(missing, nullptr);
  EXPECT_FALSE(missing->card);
  EXPECT_EQ(missing->error_kind, ErrorKind::StubCoverage);
  EXPECT_FALSE(v.checks[1].passed);
  EXPECT_TRUE(v.checks[1].detail.starts_with("incomplete"));
}

TEST(CombineTrials, ModeWithLowTieBreak) {
  const ScoreCard c = combine_trials({card_with({5, 4, 1, 2, 3, 3}), card_with({5, 2, 1, 2, 4, 3}),
                                      card_with({3, 2, 5, 4, 5, 3})});
  EXPECT_EQ(c.scores, (ScoreArray{5, 2, 1, 2, 3, 3}));
  EXPECT_EQ(combine_trials({card_with({1, 2, 3, 4, 5, 5})}).scores, (ScoreArray{1, 2, 3, 4, 5, 5}));
}

TEST(RunValidity, TrialsMajority) {
  const Judge judge(JudgeConfig{}, rules("validity_figure2.json"));
  const ValidityVerdict v = run_validity(judge, default_rubric(), builtin_validity_fixture(), 3);
  EXPECT_TRUE(v.passed());
  EXPECT_EQ(static_cast<StubBackend&>(judge.backend()).calls(), 18u);
}

TEST_F(TempDir, ValidityReports) {
  const Judge judge(JudgeConfig{}, rules("validity_figure2.json"));
  write_validity_reports(run_validity(judge, default_rubric()), dir_);
  for (const char* f : {"validity.json", "records.jsonl", "radar_validity-information.svg", "radar_validity-social.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir_ / f)) << f;
  }
  const auto doc = nlohmann::json::parse(slurp(dir_ / "validity.json"));
  EXPECT_EQ(doc["checks"].size(), 3u);
  EXPECT_EQ(lines_of(slurp(dir_ / "records.jsonl")).size(), 6u);
}

// ---- batch ------------------------------------------------------------------

BatchOptions caus_options(const std::filesystem::path& input, const std::filesystem::path& out) {
  BatchOptions o;
  o.dataset = DatasetKind::Caus;
  o.input = input;
  o.positions = {1};
  o.per_position = 50;
  o.seed = 7;
  o.out_dir = out;
  return o;
}

TEST_F(TempDir, BatchWritesReports) {
  BatchOptions o = caus_options(source_dir() / "fixtures/datasets/caus_5.json", dir_ / "out");
  o.positions = {1, 3, 5};
  o.per_position = 5;
  const Judge judge(JudgeConfig{}, rules("caus_rules.json"));
  const BatchResult r = run_batch(o, judge);
  EXPECT_EQ(r.exit_code(), kExitOk);
  ASSERT_EQ(r.summaries.size(), 3u);
  EXPECT_EQ(r.records.size(), 15u);
  const std::string csv = slurp(dir_ / "out/summary.csv");
  EXPECT_EQ(lines_of(csv).size(), 2u + 18u);
  for (const char* f : {"records.jsonl", "radar_1st.svg", "radar_3rd.svg", "radar_5th.svg", "failures.jsonl",
                        "run.json", "checkpoint.jsonl"}) {
    EXPECT_TRUE(std::filesystem::exists(dir_ / "out" / f)) << f;
  }
  EXPECT_TRUE(slurp(dir_ / "out/failures.jsonl").empty());
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "out/run.json"));
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_EQ(manifest["sets"].size(), 3u);
}

TEST_F(TempDir, BatchResumeIssuesOnlyMissingCalls) {
  const auto input = write("caus_60.json", synthetic_caus_json(60));
  const BatchOptions fresh_opts = caus_options(input, dir_ / "fresh");
  auto first = std::make_shared<StubBackend>(digit_rules());
  const BatchResult fresh = run_batch(fresh_opts, Judge(JudgeConfig{}, first));
  EXPECT_EQ(first->calls(), 50u);
  EXPECT_EQ(fresh.records.size(), 50u);

  // Keep 40 of the 50 checkpoint lines in a second directory and resume there.
  const auto resumed_dir = dir_ / "resumed";
  std::filesystem::create_directories(resumed_dir);
  const auto lines = lines_of(slurp(dir_ / "fresh/checkpoint.jsonl"));
  ASSERT_EQ(lines.size(), 50u);
  std::string kept;
  for (std::size_t i = 0; i < 40; ++i) kept += lines[i] + "\n";
  kept += lines[40].substr(0, lines[40].size() / 2);  // a torn final line is ignored
  { std::ofstream(resumed_dir / "checkpoint.jsonl", std::ios::binary) << kept; }

  BatchOptions resume_opts = caus_options(input, resumed_dir);
  resume_opts.resume = true;
  auto second = std::make_shared<StubBackend>(digit_rules());
  const BatchResult resumed = run_batch(resume_opts, Judge(JudgeConfig{}, second));
  EXPECT_EQ(second->calls(), 10u);
  EXPECT_EQ(resumed.reused, 40u);
  EXPECT_EQ(resumed.evaluated, 10u);
  EXPECT_EQ(records_without_timestamps(dir_ / "fresh/records.jsonl"),
            records_without_timestamps(resumed_dir / "records.jsonl"));
  EXPECT_EQ(slurp(dir_ / "fresh/summary.csv"), slurp(resumed_dir / "summary.csv"));

  // A changed context invalidates every cached card.
  BatchOptions other_ctx = resume_opts;
  other_ctx.goal = "small talk";
  auto third = std::make_shared<StubBackend>(digit_rules());
  run_batch(other_ctx, Judge(JudgeConfig{}, third));
  EXPECT_EQ(third->calls(), 50u);
}

TEST_F(TempDir, BatchWithoutResumeStartsOver) {
  const auto input = write("caus_60.json", synthetic_caus_json(60));
  const BatchOptions opts = caus_options(input, dir_ / "out");
  run_batch(opts, Judge(JudgeConfig{}, digit_rules()));
  auto again = std::make_shared<StubBackend>(digit_rules());
  run_batch(opts, Judge(JudgeConfig{}, again));
  EXPECT_EQ(again->calls(), 50u);
  EXPECT_EQ(lines_of(slurp(dir_ / "out/checkpoint.jsonl")).size(), 50u);
}

TEST_F(TempDir, BatchDeterministicAcrossConcurrency) {
  const auto input = write("caus_60.json", synthetic_caus_json(60));
  BatchOptions a = caus_options(input, dir_ / "a");
  a.positions = {1, 3, 5};
  a.concurrency = 1;
  BatchOptions b = a;
  b.out_dir = dir_ / "b";
  b.concurrency = 8;
  run_batch(a, Judge(JudgeConfig{}, digit_rules()));
  run_batch(b, Judge(JudgeConfig{}, digit_rules()));
  for (const char* f : {"summary.csv", "radar_1st.svg", "radar_3rd.svg", "radar_5th.svg"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  EXPECT_EQ(records_without_timestamps(dir_ / "a/records.jsonl"), records_without_timestamps(dir_ / "b/records.jsonl"));
}

TEST_F(TempDir, BatchPartialFailures) {
  const auto input = write("caus_60.json", synthetic_caus_json(60));
  auto only_some = digit_rules();
  only_some.resize(5);  // scenes ending in 5..9 are not covered
  const BatchResult r = run_batch(caus_options(input, dir_ / "out"), Judge(JudgeConfig{}, only_some));
  EXPECT_EQ(r.exit_code(), kExitPartialFailure);
  EXPECT_FALSE(r.failures.empty());
  EXPECT_EQ(r.failures.size() + r.records.size(), 50u);
  const auto failures = lines_of(slurp(dir_ / "out/failures.jsonl"));
  ASSERT_EQ(failures.size(), r.failures.size());
  const auto first = nlohmann::json::parse(failures[0]);
  EXPECT_EQ(first["error_kind"], "stub_coverage");
  EXPECT_EQ(r.summaries.at(0).n, r.records.size());
}

TEST_F(TempDir, BatchInputErrorsLeaveNoOutputs) {
  const Judge judge(JudgeConfig{}, digit_rules());
  BatchOptions o = caus_options(dir_ / "missing.json", dir_ / "out");
  EXPECT_THROW(run_batch(o, judge), IngestionError);
  o.input = write("caus_5.json", synthetic_caus_json(5));
  EXPECT_THROW(run_batch(o, judge), SamplingError);
  o.rubric_path = write("bad_rubric.json", "{}");
  EXPECT_THROW(run_batch(o, judge), ParseError);
  BatchOptions g = o;
  g.rubric_path.reset();
  g.dataset = DatasetKind::Generic;
  EXPECT_THROW(run_batch(g, judge), ValidationError);
  EXPECT_FALSE(std::filesystem::exists(dir_ / "out"));
}

TEST(CheckpointKey, ChangesWithEveryIngredient) {
  const ContextVariables ctx{"a", "g"};
  const std::string base = checkpoint_key("s", ctx, "r1", "p1");
  EXPECT_EQ(base, checkpoint_key("s", ctx, "r1", "p1"));
  EXPECT_NE(base, checkpoint_key("t", ctx, "r1", "p1"));
  EXPECT_NE(base, checkpoint_key("s", {"a", "h"}, "r1", "p1"));
  EXPECT_NE(base, checkpoint_key("s", {"b", "g"}, "r1", "p1"));
  EXPECT_NE(base, checkpoint_key("s", ctx, "r2", "p1"));
  EXPECT_NE(base, checkpoint_key("s", ctx, "r1", "p2"));
}

// ---- CLI --------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QQEVAL_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(TempDir, CliExitCodes) {
  const std::string src = source_dir().string();
  EXPECT_EQ(run_cli("validate-rubric " + src + "/rubrics/default_table2.json"), kExitOk);
  EXPECT_EQ(run_cli("validate-rubric " + write("bad.json", "{").string()), exit_code_for(ErrorKind::Parse));
  EXPECT_EQ(run_cli("bogus-command"), kExitUsage);
  EXPECT_EQ(run_cli("evaluate --dataset caus"), kExitUsage);

  const auto out = dir_ / "missing_out";
  EXPECT_EQ(run_cli("evaluate --dataset caus --input " + (dir_ / "nope.json").string() +
                    " --seed 1 --judge stub --stub-rules " + src + "/fixtures/stub/caus_rules.json --out " + out.string()),
            exit_code_for(ErrorKind::Ingestion));
  EXPECT_FALSE(std::filesystem::exists(out));

  EXPECT_EQ(run_cli("evaluate --dataset caus --input " + src + "/fixtures/datasets/caus_5.json --seed 1 --judge stub --out " +
                    out.string()),
            exit_code_for(ErrorKind::Config));
  EXPECT_EQ(run_cli("evaluate --dataset square --input " + src + "/fixtures/datasets/square_9.json --per-category 4 "
                    "--seed 1 --judge stub --stub-rules " + src + "/fixtures/stub/square_rules.json --out " + out.string()),
            exit_code_for(ErrorKind::Sampling));
  EXPECT_EQ(run_cli("validity --judge stub --out " + (dir_ / "v").string()), kExitOk);
  EXPECT_EQ(run_cli("validity --judge stub --stub-rules " + src + "/fixtures/stub/validity_adversarial.json --out " +
                    (dir_ / "adv").string()),
            kExitValidityFailed);
}

}  // namespace
}  // namespace qqeval
