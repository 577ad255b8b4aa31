#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "json_util.hpp"
#include "qqeval/harness.hpp"

namespace qqeval {

using detail::json;
using ordered_json = nlohmann::ordered_json;

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return 3;
    case ErrorKind::Validation: return 4;
    case ErrorKind::Ingestion: return 5;
    case ErrorKind::Sampling: return 6;
    case ErrorKind::Config: return 7;
    case ErrorKind::Transport: return 8;
    case ErrorKind::Format: return 9;
    case ErrorKind::IncompleteResponse: return 10;
    case ErrorKind::Range: return 11;
    case ErrorKind::StubCoverage: return 12;
    case ErrorKind::Aggregation: return 13;
    case ErrorKind::Io: return 14;
  }
  return kExitPartialFailure;
}

std::optional<DatasetKind> parse_dataset_kind(std::string_view text) noexcept {
  if (text == "caus") return DatasetKind::Caus;
  if (text == "square") return DatasetKind::Square;
  if (text == "generic") return DatasetKind::Generic;
  return std::nullopt;
}

std::string checkpoint_key(const std::string& script_id, const ContextVariables& ctx,
                           const std::string& rubric_version, const std::string& prompt_version) {
  const std::string ctx_hash = detail::fnv1a_hex(ctx.answerer + '\x1f' + ctx.goal);
  return script_id + "|" + ctx_hash + "|" + rubric_version + "|" + prompt_version;
}

namespace {

struct WorkItem {
  std::size_t set_index;
  std::size_t script_index;
  std::string key;
};

ContextVariables resolve_context(const BatchOptions& options) {
  ContextVariables ctx;
  switch (options.dataset) {
    case DatasetKind::Caus: ctx = caus_default_context(); break;
    case DatasetKind::Square: ctx = square_default_context(); break;
    case DatasetKind::Generic:
      if (!options.answerer || !options.goal) {
        throw ValidationError("generic dataset: --answerer and --goal are required");
      }
      break;
  }
  if (options.answerer) ctx.answerer = *options.answerer;
  if (options.goal) ctx.goal = *options.goal;
  ctx.validate();
  return ctx;
}

std::vector<QuestionSet> load_sets(const BatchOptions& options, const ContextVariables& ctx) {
  switch (options.dataset) {
    case DatasetKind::Caus:
      return adapt_caus(load_caus(options.input), options.positions, options.per_position,
                        options.seed, ctx);
    case DatasetKind::Square:
      return adapt_square(load_square(options.input), options.per_category, options.seed, ctx);
    case DatasetKind::Generic: {
      QuestionSet set;
      set.set_label = "generic";
      set.context = ctx;
      set.scripts = load_generic(options.input);
      if (set.scripts.empty()) throw IngestionError(options.input.string() + ": no scripts");
      return {std::move(set)};
    }
  }
  return {};
}

/// Cards from a previous run's checkpoint, by key. Torn or foreign lines are
/// skipped.
std::map<std::string, ScoreCard> read_checkpoint(const std::filesystem::path& path) {
  std::map<std::string, ScoreCard> cached;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const json entry = json::parse(line, nullptr, false);
    if (entry.is_discarded() || !entry.is_object() || !entry.contains("key") ||
        !entry.contains("card")) {
      continue;
    }
    try {
      cached.insert_or_assign(entry["key"].get<std::string>(),
                              scorecard_from_json(entry["card"].dump()));
    } catch (const Error&) {
    } catch (const json::exception&) {
    }
  }
  return cached;
}

std::string run_manifest(const BatchOptions& options, const BatchResult& result,
                         const Rubric& rubric) {
  ordered_json sets = ordered_json::array();
  for (const auto& set : result.sets) {
    ordered_json ids = ordered_json::array();
    for (const auto& s : set.scripts) ids.push_back(s.script_id);
    sets.push_back({{"set_label", set.set_label},
                    {"context", {{"answerer", set.context.answerer}, {"goal", set.context.goal}}},
                    {"script_ids", ids}});
  }
  ordered_json out = {
      {"dataset", options.dataset == DatasetKind::Caus     ? "caus"
                  : options.dataset == DatasetKind::Square ? "square"
                                                           : "generic"},
      {"input", options.input.string()},
      {"seed", options.seed},
      {"rubric_version", rubric.version},
      {"prompt_version", PromptTemplate::builtin().version()},
      {"sd_divisor", std::string(to_string(options.sd_divisor))},
      {"evaluated", result.evaluated},
      {"reused", result.reused},
      {"failures", result.failures.size()},
      {"tokens", result.tokens},
      {"sets", sets},
  };
  return out.dump(2) + "\n";
}

}  // namespace

BatchResult run_batch(const BatchOptions& options, const Judge& judge) {
  if (options.concurrency < 1) throw ConfigError("batch: concurrency must be >= 1");

  // Everything that can fail on bad input happens before out_dir is touched.
  const Rubric rubric =
      options.rubric_path ? load_rubric_file(*options.rubric_path) : default_rubric();
  const ContextVariables ctx = resolve_context(options);
  BatchResult result;
  result.sets = load_sets(options, ctx);
  for (const auto& set : result.sets) {
    for (const auto& s : set.scripts) s.validate();
  }

  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec) throw IoError(options.out_dir.string(), ec.message());

  const auto checkpoint_path = options.out_dir / "checkpoint.jsonl";
  std::map<std::string, ScoreCard> cached;
  if (options.resume) {
    cached = read_checkpoint(checkpoint_path);
  } else {
    detail::write_file(checkpoint_path, "");
  }

  const std::string& prompt_version = PromptTemplate::builtin().version();
  std::vector<std::vector<std::optional<ScoreCard>>> cards(result.sets.size());
  std::vector<std::vector<std::optional<BatchFailure>>> failures(result.sets.size());
  std::vector<WorkItem> todo;
  for (std::size_t si = 0; si < result.sets.size(); ++si) {
    const QuestionSet& set = result.sets[si];
    cards[si].resize(set.scripts.size());
    failures[si].resize(set.scripts.size());
    for (std::size_t i = 0; i < set.scripts.size(); ++i) {
      std::string key = checkpoint_key(set.scripts[i].script_id, set.context, rubric.version,
                                       prompt_version);
      if (auto it = cached.find(key); it != cached.end()) {
        cards[si][i] = it->second;
        ++result.reused;
      } else {
        todo.push_back({si, i, std::move(key)});
      }
    }
  }

  std::ofstream checkpoint(checkpoint_path, std::ios::app);
  if (!checkpoint) throw IoError(checkpoint_path.string(), "cannot open for appending");
  std::mutex checkpoint_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      const WorkItem& item = todo[k];
      const QuestionSet& set = result.sets[item.set_index];
      const DialogueScript& script = set.scripts[item.script_index];
      try {
        ScoreCard card = evaluate_script(script, rubric, set.context, judge);
        json line = {{"key", item.key},
                     {"set_label", set.set_label},
                     {"card", json::parse(scorecard_to_json(card))}};
        {
          std::lock_guard lock(checkpoint_mutex);
          checkpoint << line.dump() << '\n';
          checkpoint.flush();
        }
        cards[item.set_index][item.script_index] = std::move(card);
      } catch (const ResponseError& e) {
        failures[item.set_index][item.script_index] =
            BatchFailure{set.set_label, script.script_id, e.kind(), e.what(), e.raw()};
      } catch (const Error& e) {
        failures[item.set_index][item.script_index] =
            BatchFailure{set.set_label, script.script_id, e.kind(), e.what(), ""};
      }
    }
  };

  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(options.concurrency), todo.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  result.evaluated = todo.size();

  ReportInputs reports;
  for (std::size_t si = 0; si < result.sets.size(); ++si) {
    std::vector<ScoreCard> set_cards;
    for (std::size_t i = 0; i < cards[si].size(); ++i) {
      if (cards[si][i]) {
        result.tokens += cards[si][i]->provenance.tokens;
        set_cards.push_back(*cards[si][i]);
      }
      if (failures[si][i]) result.failures.push_back(*failures[si][i]);
    }
    if (set_cards.empty()) continue;
    const std::string& label = result.sets[si].set_label;
    result.summaries.push_back(aggregate(set_cards, label, options.sd_divisor));
    reports.radar_sets.push_back(radar_data(set_cards, label));
    result.records.insert(result.records.end(), set_cards.begin(), set_cards.end());
  }
  reports.summaries = result.summaries;
  reports.records = result.records;
  render_reports(reports, options.out_dir);

  std::string failure_lines;
  for (const BatchFailure& f : result.failures) {
    ordered_json line = {{"set_label", f.set_label},
                         {"script_id", f.script_id},
                         {"error_kind", std::string(to_string(f.kind))},
                         {"message", f.message}};
    if (!f.raw.empty()) line["raw"] = f.raw;
    failure_lines += line.dump() + "\n";
  }
  detail::write_file(options.out_dir / "failures.jsonl", failure_lines);
  detail::write_file(options.out_dir / "run.json", run_manifest(options, result, rubric));
  return result;
}

}  // namespace qqeval
