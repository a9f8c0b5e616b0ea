#pragma once

#include "eventshift/evalsuite/score.h"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace eventshift::evalsuite {

inline constexpr int kReportSchemaVersion = 1;

struct BarChart {
  std::string title;
  std::vector<std::string> groups;                 // one per report
  std::vector<std::string> series;                 // P, R, F1
  std::vector<std::vector<double>> values;         // [group][series]
  double axis_max = 1.0;                           // >= every value
};

// Chart of P/R/F1 per report for one bucket ("overall", "iv" or "oov").
// Reports without that bucket are skipped.
BarChart make_chart(std::span<const EvalReport> reports, const std::string& bucket);
std::string render_svg(const BarChart& chart);

struct EmittedReport {
  std::filesystem::path summary;  // summary.md
  std::filesystem::path json;     // reports.json
  std::vector<std::filesystem::path> charts;
};

// Writes summary.md, reports.json and one SVG chart per available bucket
// into out_dir. File names are fixed. Throws std::runtime_error when out_dir
// cannot be written and std::invalid_argument on an empty report list.
EmittedReport emit_report(std::span<const EvalReport> reports, const std::filesystem::path& out_dir);

std::vector<EvalReport> read_reports_json(const std::filesystem::path& file);

}  // namespace eventshift::evalsuite
