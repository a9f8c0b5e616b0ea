#include "eventshift/evalsuite/report.h"

#include "eventshift/error.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace eventshift::evalsuite {

namespace {

const Scores* bucket_of(const EvalReport& r, const std::string& bucket) {
  if (bucket == "overall") return &r.overall;
  if (bucket == "iv") return r.iv ? &*r.iv : nullptr;
  if (bucket == "oov") return r.oov ? &*r.oov : nullptr;
  throw std::invalid_argument("unknown bucket " + bucket);
}

std::string pct(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << 100.0 * v;
  return s.str();
}

std::string label_of(const EvalReport& r) {
  std::string l = r.meta.model_id.empty() ? "model" : r.meta.model_id;
  if (!r.meta.target.empty()) l += " @ " + r.meta.target;
  return l;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + p.string());
}

}  // namespace

BarChart make_chart(std::span<const EvalReport> reports, const std::string& bucket) {
  BarChart c;
  c.title = "Precision / recall / F1 (" + bucket + ")";
  c.series = {"P", "R", "F1"};
  double max_v = 0.0;
  for (const EvalReport& r : reports) {
    const Scores* s = bucket_of(r, bucket);
    if (!s) continue;
    c.groups.push_back(label_of(r));
    c.values.push_back({s->precision, s->recall, s->f1});
    max_v = std::max({max_v, s->precision, s->recall, s->f1});
  }
  c.axis_max = std::max(1.0, std::ceil(max_v * 10.0) / 10.0);
  return c;
}

std::string render_svg(const BarChart& c) {
  const int bar_w = 18, gap = 24, left = 50, top = 30, plot_h = 200;
  const int group_w = static_cast<int>(c.series.size()) * bar_w + gap;
  const int width = left + std::max<int>(1, static_cast<int>(c.groups.size())) * group_w + 20;
  const int height = top + plot_h + 90;
  const char* colors[] = {"#4c72b0", "#dd8452", "#55a868"};
  std::ostringstream s;
  s << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << width << "\" height=\"" << height << "\">\n";
  s << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">" << xml_escape(c.title) << "</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = c.axis_max * tick / 4.0;
    const int y = top + plot_h - static_cast<int>(std::lround(plot_h * tick / 4.0));
    s << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << width - 10 << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"4\" y=\"" << y + 4 << "\" font-size=\"10\">" << std::fixed << std::setprecision(2) << v
      << "</text>\n";
  }
  for (std::size_t g = 0; g < c.groups.size(); ++g) {
    const int x0 = left + static_cast<int>(g) * group_w + gap / 2;
    for (std::size_t k = 0; k < c.series.size(); ++k) {
      const double v = c.values[g][k];
      const int h = static_cast<int>(std::lround(plot_h * v / c.axis_max));
      s << "<rect x=\"" << x0 + static_cast<int>(k) * bar_w << "\" y=\"" << top + plot_h - h << "\" width=\""
        << bar_w - 2 << "\" height=\"" << h << "\" fill=\"" << colors[k % 3] << "\"/>\n";
    }
    s << "<text x=\"" << x0 << "\" y=\"" << top + plot_h + 14 << "\" font-size=\"9\" transform=\"rotate(30 "
      << x0 << ' ' << top + plot_h + 14 << ")\">" << xml_escape(c.groups[g]) << "</text>\n";
  }
  for (std::size_t k = 0; k < c.series.size(); ++k)
    s << "<rect x=\"" << width - 60 << "\" y=\"" << 8 + 12 * k << "\" width=\"8\" height=\"8\" fill=\""
      << colors[k % 3] << "\"/><text x=\"" << width - 48 << "\" y=\"" << 16 + 12 * k
      << "\" font-size=\"10\">" << c.series[k] << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

EmittedReport emit_report(std::span<const EvalReport> reports, const std::filesystem::path& out_dir) {
  if (reports.empty()) throw std::invalid_argument("emit_report: no reports");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create report directory " + out_dir.string() + ": " + ec.message());

  EmittedReport out;
  std::ostringstream md;
  md << "| model | source | target | seed | P | R | F1 | IV F1 | OOV F1 |\n";
  md << "|---|---|---|---|---|---|---|---|---|\n";
  for (const EvalReport& r : reports) {
    md << "| " << r.meta.model_id << " | " << r.meta.source << " | " << r.meta.target << " | " << r.meta.seed
       << " | " << pct(r.overall.precision) << " | " << pct(r.overall.recall) << " | " << pct(r.overall.f1)
       << " | " << (r.iv ? pct(r.iv->f1) : "-") << " | " << (r.oov ? pct(r.oov->f1) : "-") << " |\n";
  }
  out.summary = out_dir / "summary.md";
  write_file(out.summary, md.str());

  nlohmann::json j = {{"schema_version", kReportSchemaVersion}, {"reports", nlohmann::json::array()}};
  for (const EvalReport& r : reports) j["reports"].push_back(to_json(r));
  out.json = out_dir / "reports.json";
  write_file(out.json, j.dump(2) + "\n");

  for (const char* bucket : {"overall", "iv", "oov"}) {
    BarChart chart = make_chart(reports, bucket);
    if (chart.groups.empty()) continue;
    auto path = out_dir / (std::string("prf_") + bucket + ".svg");
    write_file(path, render_svg(chart));
    out.charts.push_back(path);
  }
  return out;
}

std::vector<EvalReport> read_reports_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  if (j.value("schema_version", 0) != kReportSchemaVersion)
    throw ParseError(file.string() + ": unsupported report schema version");
  std::vector<EvalReport> out;
  for (const auto& r : j.at("reports")) out.push_back(report_from_json(r));
  return out;
}

}  // namespace eventshift::evalsuite
