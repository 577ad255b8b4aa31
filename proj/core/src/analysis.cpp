#include "qqeval/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "json_util.hpp"
#include "qqeval/error.hpp"

namespace qqeval {

namespace {

std::string format(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, value);
  return buf;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string xml_escape(std::string_view value) {
  std::string out;
  for (char c : value) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(SdDivisor divisor) noexcept {
  return divisor == SdDivisor::Sample ? "n-1" : "n";
}

AggregateSummary aggregate(std::span<const ScoreCard> cards, const std::string& set_label,
                           SdDivisor divisor) {
  if (cards.empty()) throw AggregationError("aggregate: set '" + set_label + "' has no cards");
  AggregateSummary summary;
  summary.set_label = set_label;
  summary.n = cards.size();
  summary.divisor = divisor;

  const auto n = static_cast<__int128>(cards.size());
  for (CriterionId id : kAllCriteria) {
    __int128 sum = 0;
    int lo = 5;
    int hi = 1;
    for (const ScoreCard& c : cards) {
      const int x = c.score(id);
      sum += x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    __int128 squared = 0;
    for (const ScoreCard& c : cards) {
      const __int128 d = n * c.score(id) - sum;
      squared += d * d;
    }
    // Variance = squared / (n^2 * divisor).
    const __int128 dof = divisor == SdDivisor::Sample ? n - 1 : n;
    CriterionStats& s = summary.per_criterion[index_of(id)];
    s.mean = static_cast<double>(sum) / static_cast<double>(n);
    s.sd = dof == 0 ? 0.0
                    : std::sqrt(static_cast<double>(squared) / static_cast<double>(n * n * dof));
    s.min = lo;
    s.max = hi;
  }
  return summary;
}

RadarData radar_data(std::span<const ScoreCard> cards, const std::string& set_label) {
  if (cards.empty()) throw AggregationError("radar: set '" + set_label + "' has no cards");
  RadarData radar;
  radar.set_label = set_label;
  std::array<long long, kCriterionCount> sums{};
  for (const ScoreCard& c : cards) {
    radar.per_question.push_back({c.script_id, c.scores});
    for (std::size_t i = 0; i < kCriterionCount; ++i) sums[i] += c.scores[i];
  }
  for (std::size_t i = 0; i < kCriterionCount; ++i) {
    radar.mean_polygon[i] = static_cast<double>(sums[i]) / static_cast<double>(cards.size());
  }
  return radar;
}

std::string render_summary_csv(std::span<const AggregateSummary> summaries) {
  const SdDivisor divisor = summaries.empty() ? SdDivisor::Sample : summaries.front().divisor;
  std::string out = "# sd_divisor=" + std::string(to_string(divisor)) + "\r\n";
  out += "set_label,criterion,n,mean,sd,min,max\r\n";
  for (const AggregateSummary& s : summaries) {
    for (CriterionId id : kAllCriteria) {
      const CriterionStats& st = s.at(id);
      out += csv_field(s.set_label);
      out += ',';
      out += to_string(id);
      out += ',' + std::to_string(s.n);
      out += ',' + format("%.2f", st.mean);
      out += ',' + format("%.3f", st.sd);
      out += ',' + std::to_string(st.min);
      out += ',' + std::to_string(st.max);
      out += "\r\n";
    }
  }
  return out;
}

std::string render_radar_svg(const RadarData& radar) {
  constexpr double kSize = 520.0;
  constexpr double kCx = 260.0;
  constexpr double kCy = 275.0;
  constexpr double kRadius = 180.0;

  struct Xy {
    std::string x;
    std::string y;
  };
  auto xy = [&](std::size_t axis, double value) {
    const double angle = -std::numbers::pi / 2 + static_cast<double>(axis) * std::numbers::pi / 3;
    const double r = kRadius * value / 5.0;
    return Xy{format("%.2f", kCx + r * std::cos(angle)), format("%.2f", kCy + r * std::sin(angle))};
  };
  auto point = [&](std::size_t axis, double value) {
    const Xy p = xy(axis, value);
    return p.x + "," + p.y;
  };
  auto polygon_points = [&](auto value_at) {
    std::string pts;
    for (std::size_t i = 0; i < kCriterionCount; ++i) {
      if (i) pts += ' ';
      pts += point(i, static_cast<double>(value_at(i)));
    }
    return pts;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"520\" height=\"520\" viewBox=\"0 0 520 520\">\n";
  svg += "  <rect width=\"" + format("%.0f", kSize) + "\" height=\"" + format("%.0f", kSize) +
         "\" fill=\"#ffffff\"/>\n";
  svg += "  <text x=\"260\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"18\">" + xml_escape(radar.set_label) + " (n=" +
         std::to_string(radar.per_question.size()) + ")</text>\n";

  svg += "  <g fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\">\n";
  for (int ring = 1; ring <= 5; ++ring) {
    svg += "    <polygon points=\"" + polygon_points([ring](std::size_t) { return ring; }) + "\"/>\n";
  }
  for (std::size_t i = 0; i < kCriterionCount; ++i) {
    const Xy end = xy(i, 5.0);
    svg += "    <line x1=\"" + format("%.2f", kCx) + "\" y1=\"" + format("%.2f", kCy) +
           "\" x2=\"" + end.x + "\" y2=\"" + end.y + "\"/>\n";
  }
  svg += "  </g>\n";

  svg += "  <g font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">\n";
  for (std::size_t i = 0; i < kCriterionCount; ++i) {
    const Xy p = xy(i, 5.0 * (kRadius + 24.0) / kRadius);
    svg += "    <text x=\"" + p.x + "\" y=\"" + p.y +
           "\">" + std::string(to_string(radar.axes[i])) + "</text>\n";
  }
  svg += "  </g>\n";

  svg += "  <g fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" stroke-opacity=\"0.25\">\n";
  for (const RadarPolygon& q : radar.per_question) {
    svg += "    <polygon data-script=\"" + xml_escape(q.script_id) + "\" points=\"" +
           polygon_points([&](std::size_t i) { return q.values[index_of(radar.axes[i])]; }) +
           "\"/>\n";
  }
  svg += "  </g>\n";

  svg += "  <polygon class=\"mean\" fill=\"#d62728\" fill-opacity=\"0.12\" stroke=\"#d62728\" "
         "stroke-width=\"3\" points=\"" +
         polygon_points([&](std::size_t i) { return radar.mean_polygon[index_of(radar.axes[i])]; }) +
         "\"/>\n";
  svg += "</svg>\n";
  return svg;
}

std::string file_label(const std::string& set_label) {
  std::string out;
  for (unsigned char c : set_label) {
    out += (std::isalnum(c) || c == '-' || c == '_') ? static_cast<char>(c) : '_';
  }
  return out.empty() ? "set" : out;
}

std::vector<std::filesystem::path> render_reports(const ReportInputs& inputs,
                                                  const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir.string(), ec.message());

  std::vector<std::filesystem::path> written;
  if (!inputs.summaries.empty()) {
    const auto path = out_dir / "summary.csv";
    detail::write_file(path, render_summary_csv(inputs.summaries));
    written.push_back(path);
  }
  {
    std::string lines;
    for (const ScoreCard& card : inputs.records) lines += scorecard_to_json(card) + "\n";
    const auto path = out_dir / "records.jsonl";
    detail::write_file(path, lines);
    written.push_back(path);
  }
  for (const RadarData& radar : inputs.radar_sets) {
    const auto path = out_dir / ("radar_" + file_label(radar.set_label) + ".svg");
    detail::write_file(path, render_radar_svg(radar));
    written.push_back(path);
  }
  return written;
}

}  // namespace qqeval
