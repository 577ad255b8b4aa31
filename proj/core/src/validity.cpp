#include <algorithm>
#include <cstdio>
#include <map>

#include "json_util.hpp"
#include "qqeval/assets.hpp"
#include "qqeval/harness.hpp"

namespace qqeval {

using detail::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kInformation = "information";
constexpr std::string_view kSocial = "social";

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string missing_detail(std::string_view variant, std::string_view context) {
  return "incomplete: no score for " + std::string(variant) + " under " + std::string(context);
}

}  // namespace

void ValidityFixture::validate() const {
  base_script.validate();
  if (variants.size() != 3) throw ValidationError("validity fixture: expected 3 variants");
  for (std::size_t i = 0; i < 3; ++i) {
    if (variants[i].label != "FQ" + std::to_string(i)) {
      throw ValidationError("validity fixture: variant " + std::to_string(i) + " must be FQ" +
                            std::to_string(i));
    }
    if (variants[i].fq_text.empty()) {
      throw ValidationError("validity fixture: " + variants[i].label + " is empty");
    }
  }
  if (variants[0].fq_text != base_script.fq) {
    throw ValidationError("validity fixture: FQ0 must be the original follow-up question");
  }
  if (contexts.size() != 2 || contexts[0].label != kInformation || contexts[1].label != kSocial) {
    throw ValidationError("validity fixture: expected contexts 'information' and 'social'");
  }
  for (const auto& c : contexts) c.variables.validate();
}

const ValidityVariant& ValidityFixture::variant(std::string_view label) const {
  for (const auto& v : variants) {
    if (v.label == label) return v;
  }
  throw ValidationError("validity fixture: no variant " + std::string(label));
}

const ValidityContext& ValidityFixture::context(std::string_view label) const {
  for (const auto& c : contexts) {
    if (c.label == label) return c;
  }
  throw ValidationError("validity fixture: no context " + std::string(label));
}

ValidityFixture parse_validity_fixture(std::string_view document) {
  const json doc = detail::parse_json<ParseError>(document, "validity fixture");
  ValidityFixture fx;
  try {
    const json base = json::array({doc.at("base_script")});
    auto scripts = parse_generic(base.dump(), "validity fixture");
    fx.base_script = std::move(scripts.at(0));
    fx.base_script.source = ScriptSource::Fixture;
    for (const json& v : doc.at("variants")) {
      fx.variants.push_back({v.at("label").get<std::string>(), v.at("fq").get<std::string>()});
    }
    for (const json& c : doc.at("contexts")) {
      fx.contexts.push_back({c.at("label").get<std::string>(),
                             {c.at("answerer").get<std::string>(), c.at("goal").get<std::string>()}});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("validity fixture: ") + e.what());
  } catch (const IngestionError& e) {
    throw ParseError(e.what());
  }
  fx.validate();
  return fx;
}

const ValidityFixture& builtin_validity_fixture() {
  static const ValidityFixture fx = parse_validity_fixture(assets::validity_fixture_json());
  return fx;
}

bool ValidityVerdict::complete() const noexcept {
  return std::all_of(pairs.begin(), pairs.end(), [](const ValidityPair& p) { return p.card.has_value(); });
}

bool ValidityVerdict::passed() const noexcept {
  return complete() && !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const ValidityCheck& c) { return c.passed; });
}

const ValidityPair* ValidityVerdict::find(std::string_view variant,
                                          std::string_view context) const noexcept {
  for (const auto& p : pairs) {
    if (p.variant == variant && p.context == context) return &p;
  }
  return nullptr;
}

double effectiveness_mean(const ScoreCard& card) noexcept {
  int sum = 0;
  for (CriterionId id : kAllCriteria) {
    if (dimension_of(id) == Dimension::Effectiveness) sum += card.score(id);
  }
  return static_cast<double>(sum) / 3.0;
}

std::vector<ValidityCheck> validity_checks(const std::vector<ValidityPair>& pairs) {
  auto card = [&](std::string_view variant, std::string_view context) -> const ScoreCard* {
    for (const auto& p : pairs) {
      if (p.variant == variant && p.context == context && p.card) return &*p.card;
    }
    return nullptr;
  };

  std::vector<ValidityCheck> checks;

  {
    ValidityCheck c1{"C1", false, ""};
    const ScoreCard* fq0 = card("FQ0", kInformation);
    const ScoreCard* fq1 = card("FQ1", kInformation);
    const ScoreCard* fq2 = card("FQ2", kInformation);
    if (!fq0 || !fq1 || !fq2) {
      c1.detail = missing_detail(!fq0 ? "FQ0" : !fq1 ? "FQ1" : "FQ2", kInformation);
    } else {
      const double m0 = effectiveness_mean(*fq0);
      const double m1 = effectiveness_mean(*fq1);
      const double m2 = effectiveness_mean(*fq2);
      c1.passed = m0 > m1 && m0 > m2;
      c1.detail = "information effectiveness means: FQ0=" + two_decimals(m0) +
                  " FQ1=" + two_decimals(m1) + " FQ2=" + two_decimals(m2);
      if (!(m0 > m1)) c1.detail += "; FQ0 does not exceed FQ1";
      if (!(m0 > m2)) c1.detail += "; FQ0 does not exceed FQ2";
    }
    checks.push_back(std::move(c1));
  }

  {
    ValidityCheck c2{"C2", false, ""};
    const ScoreCard* info = card("FQ2", kInformation);
    const ScoreCard* social = card("FQ2", kSocial);
    if (!info || !social) {
      c2.detail = missing_detail("FQ2", !info ? kInformation : kSocial);
    } else {
      const double mi = effectiveness_mean(*info);
      const double ms = effectiveness_mean(*social);
      c2.passed = ms > mi;
      c2.detail = "FQ2 effectiveness means: social=" + two_decimals(ms) +
                  " information=" + two_decimals(mi);
      if (!c2.passed) c2.detail += "; social does not exceed information";
    }
    checks.push_back(std::move(c2));
  }

  {
    ValidityCheck c3{"C3", false, ""};
    const ScoreCard* info = card("FQ1", kInformation);
    const ScoreCard* social = card("FQ1", kSocial);
    if (!info || !social) {
      c3.detail = missing_detail("FQ1", !info ? kInformation : kSocial);
    } else {
      const int si = info->score(CriterionId::Informativeness);
      const int ss = social->score(CriterionId::Informativeness);
      c3.passed = si <= 3 && ss <= 3;
      c3.detail = "FQ1 informativeness: information=" + std::to_string(si) +
                  " social=" + std::to_string(ss);
      if (si > 3) c3.detail += "; above 3 under information";
      if (ss > 3) c3.detail += "; above 3 under social";
    }
    checks.push_back(std::move(c3));
  }
  return checks;
}

ScoreCard combine_trials(const std::vector<ScoreCard>& trials) {
  if (trials.empty()) throw AggregationError("combine_trials: no trials");
  ScoreCard out = trials.front();
  if (trials.size() == 1) return out;
  for (CriterionId id : kAllCriteria) {
    std::array<int, 6> counts{};
    for (const auto& t : trials) ++counts[static_cast<std::size_t>(t.score(id))];
    int best = 1;
    for (int s = 2; s <= 5; ++s) {
      if (counts[static_cast<std::size_t>(s)] > counts[static_cast<std::size_t>(best)]) best = s;
    }
    out.scores[index_of(id)] = best;
    for (const auto& t : trials) {
      if (t.score(id) == best) {
        out.rationales[index_of(id)] = t.rationale(id);
        break;
      }
    }
  }
  out.provenance.tokens = 0;
  for (const auto& t : trials) out.provenance.tokens += t.provenance.tokens;
  out.provenance.warnings.push_back("per-criterion majority of " + std::to_string(trials.size()) +
                                    " trials");
  return out;
}

ValidityVerdict run_validity(const Judge& judge, const Rubric& rubric,
                             const ValidityFixture& fixture, int trials) {
  fixture.validate();
  if (trials < 1) throw ConfigError("validity: trials must be >= 1");
  ValidityVerdict verdict;
  for (const ValidityContext& ctx : fixture.contexts) {
    for (const ValidityVariant& variant : fixture.variants) {
      ValidityPair pair;
      pair.variant = variant.label;
      pair.context = ctx.label;
      DialogueScript script = fixture.base_script;
      script.script_id = variant.label;
      script.fq = variant.fq_text;
      script.source = ScriptSource::Fixture;
      try {
        std::vector<ScoreCard> runs;
        for (int t = 0; t < trials; ++t) {
          runs.push_back(evaluate_script(script, rubric, ctx.variables, judge));
        }
        pair.card = combine_trials(runs);
      } catch (const ResponseError& e) {
        pair.error = std::string(e.what()) + " | raw: " + e.raw();
        pair.error_kind = e.kind();
      } catch (const Error& e) {
        pair.error = e.what();
        pair.error_kind = e.kind();
      }
      verdict.pairs.push_back(std::move(pair));
    }
  }
  verdict.checks = validity_checks(verdict.pairs);
  return verdict;
}

std::string verdict_to_json(const ValidityVerdict& verdict) {
  ordered_json pairs = ordered_json::array();
  for (const auto& p : verdict.pairs) {
    ordered_json entry = {{"variant", p.variant}, {"context", p.context}};
    if (p.card) {
      ordered_json scores = ordered_json::object();
      for (CriterionId id : kAllCriteria) scores[std::string(key_of(id))] = p.card->score(id);
      entry["scores"] = scores;
      entry["effectiveness_mean"] = effectiveness_mean(*p.card);
    } else {
      entry["error_kind"] = p.error_kind ? std::string(to_string(*p.error_kind)) : "unknown";
      entry["error"] = p.error.value_or("");
    }
    pairs.push_back(std::move(entry));
  }
  ordered_json checks = ordered_json::array();
  for (const auto& c : verdict.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  ordered_json out = {{"complete", verdict.complete()},
                      {"passed", verdict.passed()},
                      {"checks", checks},
                      {"pairs", pairs}};
  return out.dump(2) + "\n";
}

void write_validity_reports(const ValidityVerdict& verdict, const std::filesystem::path& out_dir) {
  ReportInputs inputs;
  std::map<std::string, std::vector<ScoreCard>> by_context;
  std::vector<std::string> context_order;
  for (const auto& p : verdict.pairs) {
    if (!by_context.contains(p.context)) context_order.push_back(p.context);
    auto& cards = by_context[p.context];
    if (p.card) {
      cards.push_back(*p.card);
      inputs.records.push_back(*p.card);
    }
  }
  for (const auto& label : context_order) {
    const auto& cards = by_context[label];
    if (!cards.empty()) inputs.radar_sets.push_back(radar_data(cards, "validity-" + label));
  }
  render_reports(inputs, out_dir);
  detail::write_file(out_dir / "validity.json", verdict_to_json(verdict));
}

}  // namespace qqeval
