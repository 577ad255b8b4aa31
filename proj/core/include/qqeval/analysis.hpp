#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qqeval/judge.hpp"
#include "qqeval/rubric.hpp"

namespace qqeval {

enum class SdDivisor {
  Sample,      // n - 1
  Population,  // n
};

std::string_view to_string(SdDivisor divisor) noexcept;

struct CriterionStats {
  double mean = 0.0;
  double sd = 0.0;
  int min = 0;
  int max = 0;

  bool operator==(const CriterionStats&) const = default;
};

struct AggregateSummary {
  std::string set_label;
  std::size_t n = 0;
  /// Indexed by index_of(CriterionId).
  std::array<CriterionStats, kCriterionCount> per_criterion{};
  SdDivisor divisor = SdDivisor::Sample;

  const CriterionStats& at(CriterionId id) const noexcept { return per_criterion[index_of(id)]; }
};

/// Mean and standard deviation per criterion.
///
/// Both passes run in exact integer arithmetic: the first sums scores, the
/// second sums (n*x - sum)^2. Mean and variance are each a single rounding
/// of an exact rational, so results do not depend on card order. With the
/// sample divisor a single card has sd 0. Throws AggregationError on empty
/// input.
AggregateSummary aggregate(std::span<const ScoreCard> cards, const std::string& set_label,
                           SdDivisor divisor = SdDivisor::Sample);

struct RadarPolygon {
  std::string script_id;
  ScoreArray values{};
};

struct RadarData {
  std::string set_label;
  /// Always the canonical criterion order.
  std::array<CriterionId, kCriterionCount> axes = kAllCriteria;
  std::vector<RadarPolygon> per_question;
  std::array<double, kCriterionCount> mean_polygon{};
};

/// Per-question polygons in input order plus the unrounded mean polygon.
/// Throws AggregationError on empty input.
RadarData radar_data(std::span<const ScoreCard> cards, const std::string& set_label);

/// summary.csv content: a `# sd_divisor=...` line, the header row, then one
/// row per set x criterion with mean to 2 and sd to 3 decimals.
std::string render_summary_csv(std::span<const AggregateSummary> summaries);

/// Radar chart on six axes scaled 1-5: per-question polygons at low
/// opacity, the mean polygon in bold.
std::string render_radar_svg(const RadarData& radar);

/// File-system safe form of a set label for radar_<label>.svg.
std::string file_label(const std::string& set_label);

struct ReportInputs {
  std::vector<AggregateSummary> summaries;
  std::vector<RadarData> radar_sets;
  std::vector<ScoreCard> records;
};

/// Writes summary.csv (when summaries exist), records.jsonl and one
/// radar_<set>.svg per radar set into out_dir. Returns the written paths.
/// Throws IoError with the failing path.
std::vector<std::filesystem::path> render_reports(const ReportInputs& inputs,
                                                  const std::filesystem::path& out_dir);

}  // namespace qqeval
