#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qqeval/error.hpp"
#include "qqeval/rubric.hpp"

namespace qqeval {
namespace {

using testing::slurp;
using testing::source_dir;

const ContextVariables kCausCtx{"scene member", "resolving uncertainty by acquiring useful information"};
const ContextVariables kSquareCtx{"Large Language Model", "harmless and helpful conversation"};

std::string default_doc() { return slurp(source_dir() / "rubrics/default_table2.json"); }

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

template <typename E>
std::string error_of(const std::string& doc) {
  try {
    load_rubric(doc);
  } catch (const E& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected exception";
  return {};
}

TEST(DimensionMapping, FixedAndBalanced) {
  EXPECT_EQ(dimension_of(CriterionId::Cohesion), Dimension::Appropriateness);
  EXPECT_EQ(dimension_of(CriterionId::Answerability), Dimension::Appropriateness);
  EXPECT_EQ(dimension_of(CriterionId::Respectfulness), Dimension::Appropriateness);
  EXPECT_EQ(dimension_of(CriterionId::Clarity), Dimension::Effectiveness);
  EXPECT_EQ(dimension_of(CriterionId::Coherence), Dimension::Effectiveness);
  EXPECT_EQ(dimension_of(CriterionId::Informativeness), Dimension::Effectiveness);
  int appropriateness = 0;
  for (CriterionId id : kAllCriteria) appropriateness += dimension_of(id) == Dimension::Appropriateness;
  EXPECT_EQ(appropriateness, 3);
}

TEST(CriterionNames, ParseDisplayAndKey) {
  for (CriterionId id : kAllCriteria) {
    EXPECT_EQ(parse_criterion(to_string(id)), id);
    EXPECT_EQ(parse_criterion(key_of(id)), id);
  }
  EXPECT_FALSE(parse_criterion("Politeness"));
  EXPECT_FALSE(parse_criterion("COHESION"));
}

TEST(LoadRubric, DefaultMatchesTable2Verbatim) {
  const Rubric rubric = load_rubric(default_doc());
  ASSERT_EQ(rubric.criteria.size(), 6u);
  for (CriterionId id : kAllCriteria) {
    const Criterion& c = rubric.at(id);
    EXPECT_EQ(c.dimension, dimension_of(id));
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(c.levels[i], testing::table2_levels()[index_of(id)][i]) << to_string(id) << " " << i + 1;
    }
  }
  EXPECT_EQ(rubric, default_rubric());
}

TEST(LoadRubric, DefaultPlaceholderDistribution) {
  const Rubric& r = default_rubric();
  using Set = std::set<std::string>;
  EXPECT_EQ(r.at(CriterionId::Answerability).placeholders, Set{"answerer"});
  EXPECT_EQ(r.at(CriterionId::Clarity).placeholders, Set{"goal"});
  EXPECT_EQ(r.at(CriterionId::Informativeness).placeholders, Set{"goal"});
  EXPECT_TRUE(r.at(CriterionId::Cohesion).placeholders.empty());
  EXPECT_TRUE(r.at(CriterionId::Respectfulness).placeholders.empty());
  EXPECT_TRUE(r.at(CriterionId::Coherence).placeholders.empty());
  for (const auto& level : r.at(CriterionId::Answerability).levels) {
    EXPECT_NE(level.find("${answerer}"), std::string::npos);
  }
  for (CriterionId id : {CriterionId::Clarity, CriterionId::Informativeness}) {
    for (const auto& level : r.at(id).levels) EXPECT_NE(level.find("${goal}"), std::string::npos);
  }
}

TEST(LoadRubric, MissingLevelIsValidationError) {
  const std::string doc = replace_once(
      default_doc(), "        \"Adequate cohesive markers with context. Maintains conversation\",\n", "");
  EXPECT_EQ(error_of<ValidationError>(doc), "Cohesion: expected 5 levels, found 4");
}

TEST(LoadRubric, UnknownPlaceholderIsValidationError) {
  const std::string doc = replace_once(default_doc(), "Impossible for ${answerer}", "Impossible for ${respondent}");
  const std::string msg = error_of<ValidationError>(doc);
  EXPECT_NE(msg.find("unknown placeholder"), std::string::npos) << msg;
  EXPECT_NE(msg.find("Answerability"), std::string::npos) << msg;
}

TEST(LoadRubric, WhitespaceInsideBracesIsUnknownPlaceholder) {
  const std::string doc = replace_once(default_doc(), "Guarantees ${goal}", "Guarantees ${ goal }");
  EXPECT_NE(error_of<ValidationError>(doc).find("unknown placeholder"), std::string::npos);
}

TEST(LoadRubric, UnterminatedPlaceholder) {
  const std::string doc = replace_once(default_doc(), "Guarantees ${goal}", "Guarantees ${goal");
  EXPECT_NE(error_of<ValidationError>(doc).find("unterminated"), std::string::npos);
}

TEST(LoadRubric, DuplicateCriterion) {
  const std::string doc = replace_once(default_doc(), "\"id\": \"Coherence\"", "\"id\": \"Clarity\"");
  EXPECT_EQ(error_of<ValidationError>(doc), "Clarity: duplicate criterion");
}

TEST(LoadRubric, WrongDimension) {
  const std::string doc = replace_once(
      default_doc(), "\"id\": \"Cohesion\",\n      \"dimension\": \"Appropriateness\"",
      "\"id\": \"Cohesion\",\n      \"dimension\": \"Effectiveness\"");
  EXPECT_NE(error_of<ValidationError>(doc).find("Cohesion: dimension"), std::string::npos);
}

TEST(LoadRubric, MissingCriterion) {
  Rubric r = default_rubric();
  r.criteria.pop_back();
  EXPECT_EQ(error_of<ValidationError>(serialize_rubric(r)), "Informativeness: criterion missing");
}

TEST(LoadRubric, EmptyLevel) {
  const std::string doc = replace_once(default_doc(), "\"Guarantees ${goal}\"", "\"\"");
  EXPECT_EQ(error_of<ValidationError>(doc), "Informativeness: level 5 is empty");
}

TEST(LoadRubric, SyntaxErrorCarriesLineAndColumn) {
  const std::string doc = "{\n  \"version\": \"x\",\n  \"criteria\": [,]\n}";
  EXPECT_EQ(error_of<ParseError>(doc), "rubric: line 3, column 16: invalid JSON");
}

TEST(LoadRubric, WrongFieldTypeCarriesFieldPath) {
  const std::string doc = replace_once(default_doc(), "\"levels\": [\n        \"Unclear or", "\"levels\": [\n        7, \"Unclear or");
  // Six entries now, so the count check fires before the type check.
  EXPECT_NE(error_of<ValidationError>(doc).find("expected 5 levels, found 6"), std::string::npos);
  const std::string typed = R"({"version": "v", "criteria": [{"id": "Cohesion", "dimension": "Appropriateness", "levels": [1,2,3,4,5]}]})";
  EXPECT_EQ(error_of<ParseError>(typed), "rubric: field 'criteria[0].levels[0]' must be a string");
  EXPECT_EQ(error_of<ParseError>(R"({"criteria": []})"), "rubric: missing field '$.version'");
}

TEST(LoadRubric, DocumentOrderDoesNotMatter) {
  Rubric r = default_rubric();
  std::reverse(r.criteria.begin(), r.criteria.end());
  EXPECT_EQ(load_rubric(serialize_rubric(r)), default_rubric());
}

TEST(LoadRubric, SerializeRoundTrip) {
  const Rubric& r = default_rubric();
  EXPECT_EQ(load_rubric(serialize_rubric(r)), r);
  EXPECT_EQ(serialize_rubric(load_rubric(serialize_rubric(r))), serialize_rubric(r));
}

TEST(ContextVariables, Validation) {
  EXPECT_NO_THROW(kCausCtx.validate());
  EXPECT_THROW((ContextVariables{"", "g"}.validate()), ValidationError);
  EXPECT_THROW((ContextVariables{"a", ""}.validate()), ValidationError);
  EXPECT_THROW((ContextVariables{"${goal}", "g"}.validate()), ValidationError);
  EXPECT_THROW((ContextVariables{"a", "x ${answerer}"}.validate()), ValidationError);
}

TEST(Instantiate, AnswerabilityLevel5WithSceneMember) {
  const InstantiatedRubric inst = instantiate(default_rubric(), kCausCtx);
  EXPECT_EQ(inst.at(CriterionId::Answerability).levels[4],
            "Very clear and appropriate. scene member can answer immediately");
}

TEST(Instantiate, ClarityLevel1WithHarmlessGoal) {
  const InstantiatedRubric inst = instantiate(default_rubric(), kSquareCtx);
  EXPECT_EQ(inst.at(CriterionId::Clarity).levels[0],
            "Unclear structure making harmless and helpful conversation intent impossible to grasp");
}

TEST(Instantiate, PlaceholderFreeCriteriaUnchanged) {
  const InstantiatedRubric inst = instantiate(default_rubric(), kSquareCtx);
  for (CriterionId id : {CriterionId::Cohesion, CriterionId::Respectfulness, CriterionId::Coherence}) {
    EXPECT_EQ(inst.at(id).levels, default_rubric().at(id).levels);
  }
}

TEST(Instantiate, NoResidualTokensAndProvenance) {
  const InstantiatedRubric inst = instantiate(default_rubric(), kCausCtx);
  EXPECT_EQ(inst.source_version, default_rubric().version);
  EXPECT_EQ(inst.context, kCausCtx);
  for (const auto& c : inst.criteria) {
    for (const auto& level : c.levels) EXPECT_EQ(level.find("${"), std::string::npos) << level;
  }
}

TEST(Instantiate, RejectsInvalidContext) {
  EXPECT_THROW(instantiate(default_rubric(), ContextVariables{"a", ""}), ValidationError);
}

// Property: instantiating an already instantiated rubric changes nothing.
TEST(InstantiateProperty, Idempotent) {
  std::mt19937 rng(11);
  const std::vector<std::string> words = {"scene member", "client", "LLM", "teacher of 5th grade",
                                          "small talk", "a b c", "$", "{goal}", "}"};
  for (int trial = 0; trial < 50; ++trial) {
    const ContextVariables ctx{words[rng() % words.size()], words[rng() % words.size()]};
    const InstantiatedRubric once = instantiate(default_rubric(), ctx);
    const Rubric rewrapped{once.source_version, once.criteria};
    const InstantiatedRubric twice = instantiate(rewrapped, ctx);
    for (CriterionId id : kAllCriteria) EXPECT_EQ(twice.at(id).levels, once.at(id).levels);
  }
}

// Property: substituting unique markers and mapping them back recovers the
// source text exactly, so nothing outside placeholder sites moved.
TEST(InstantiateProperty, SubstitutionLocality) {
  const ContextVariables markers{"\x01" "A" "\x01", "\x02" "G" "\x02"};
  const InstantiatedRubric inst = instantiate(default_rubric(), markers);
  for (CriterionId id : kAllCriteria) {
    for (std::size_t i = 0; i < 5; ++i) {
      std::string text = inst.at(id).levels[i];
      for (auto [marker, token] : {std::pair{markers.answerer, std::string("${answerer}")},
                                   std::pair{markers.goal, std::string("${goal}")}}) {
        for (auto pos = text.find(marker); pos != std::string::npos; pos = text.find(marker, pos)) {
          text.replace(pos, marker.size(), token);
          pos += token.size();
        }
      }
      EXPECT_EQ(text, default_rubric().at(id).levels[i]);
    }
  }
}

TEST(SubstitutePlaceholders, LeavesOtherBytesAlone) {
  const ContextVariables ctx{"A", "G"};
  EXPECT_EQ(substitute_placeholders("x ${goal} y ${answerer}${goal}", ctx), "x G y AG");
  EXPECT_EQ(substitute_placeholders("$ {goal} ${other} ${", ctx), "$ {goal} ${other} ${");
  EXPECT_EQ(substitute_placeholders("", ctx), "");
}

}  // namespace
}  // namespace qqeval
