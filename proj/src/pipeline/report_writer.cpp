#include "gridcp/pipeline/report_writer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gridcp/artifact_io.hpp"
#include "gridcp/grid_io.hpp"

namespace gridcp::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_cell(double v) {
    if (!std::isfinite(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

namespace {

double number_or_nan(const json& v) { return v.is_number() ? v.get<double>() : std::nan(""); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << text;
}

// Rows of (metric, method, values...) under a level header.
class Table {
public:
    explicit Table(const std::vector<double>& levels) {
        out_ << "metric,method";
        for (double l : levels) out_ << ',' << level_key(l);
        out_ << '\n';
    }
    void row(const std::string& metric, const std::string& method, const std::vector<double>& values) {
        out_ << metric << ',' << method;
        for (double v : values) out_ << ',' << format_cell(v);
        out_ << '\n';
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

std::vector<double> column(const json& entries, const char* key) {
    std::vector<double> v;
    for (const auto& e : entries) v.push_back(number_or_nan(e.at(key)));
    return v;
}

std::vector<double> levels_of(const json& entries) { return column(entries, "level"); }

// Value of `key` in the entry whose level matches, NaN when absent.
double lookup(const json& entries, double level, const char* key) {
    for (const auto& e : entries) {
        if (same_level(e.at("level").get<double>(), level)) return number_or_nan(e.at(key));
    }
    return std::nan("");
}

std::vector<double> aligned(const json& entries, const std::vector<double>& levels, const char* key) {
    std::vector<double> v;
    for (double l : levels) v.push_back(lookup(entries, l, key));
    return v;
}

void write_tables(const fs::path& dir, const std::vector<json>& summaries) {
    const std::vector<double> cov_levels = levels_of(summaries.front().at("coverage"));
    const std::vector<double> q_levels = levels_of(summaries.front().at("quantiles"));

    Table intervals(cov_levels);
    for (const auto& s : summaries) intervals.row("IS", s.at("method"), aligned(s.at("coverage"), cov_levels, "is"));
    for (const auto& s : summaries) intervals.row("IW", s.at("method"), aligned(s.at("coverage"), cov_levels, "iw"));
    write_text(dir / "interval_scores.csv", intervals.str());

    Table qs(q_levels);
    for (const auto& s : summaries) qs.row("QS", s.at("method"), aligned(s.at("quantiles"), q_levels, "qs"));
    write_text(dir / "quantile_scores.csv", qs.str());

    Table picp(cov_levels);
    for (const auto& s : summaries) picp.row("PICP", s.at("method"), aligned(s.at("coverage"), cov_levels, "picp"));
    for (const auto& s : summaries) {
        picp.row("DEV_PCT", s.at("method"), aligned(s.at("coverage"), cov_levels, "pct_deviation"));
    }
    for (const auto& s : summaries) picp.row("BELOW", s.at("method"), aligned(s.at("coverage"), cov_levels, "below"));
    for (const auto& s : summaries) picp.row("ABOVE", s.at("method"), aligned(s.at("coverage"), cov_levels, "above"));
    write_text(dir / "picp.csv", picp.str());
}

void write_charts(const fs::path& dir, const std::vector<json>& summaries) {
    std::vector<ChartSeries> picp_series, dev_series;
    for (const auto& s : summaries) {
        const auto& cov = s.at("coverage");
        picp_series.push_back({s.at("method"), levels_of(cov), column(cov, "picp")});
        dev_series.push_back({s.at("method"), levels_of(cov), column(cov, "pct_deviation")});
    }
    write_text(dir / "picp.svg", svg_line_chart("Average PICP", "nominal coverage 1-alpha", "PICP", picp_series,
                                                ReferenceLine::identity));
    write_text(dir / "deviation.svg", svg_line_chart("PICP % deviation", "nominal coverage 1-alpha", "% deviation",
                                                     dev_series, ReferenceLine::zero));
}

}  // namespace

json report_summary(const MetricReport& report) {
    json coverage = json::array();
    for (const auto& m : report.levels) {
        coverage.push_back(json{{"level", m.coverage},
                                {"picp", m.mean_picp},
                                {"pct_deviation", m.pct_deviation},
                                {"below", m.mean_below},
                                {"above", m.mean_above},
                                {"is", m.mean_is},
                                {"iw", m.mean_iw},
                                {"unbounded_excluded", m.unbounded_excluded}});
    }
    json quantiles = json::array();
    for (const auto& q : report.quantiles) {
        quantiles.push_back(json{{"level", q.gamma}, {"qs", q.mean_qs}, {"unbounded_excluded", q.unbounded_excluded}});
    }
    return json{{"method", to_string(report.provenance)},
                {"test_records", report.test_records},
                {"valid_points", report.valid_points},
                {"collapsed_intervals", report.collapsed_intervals},
                {"coverage", coverage},
                {"quantiles", quantiles}};
}

void write_report(const fs::path& dir, const MetricReport& report, const json& config_echo) {
    fs::create_directories(dir / "maps");
    json summary = report_summary(report);
    summary["config"] = config_echo;
    io::write_json(dir / "summary.json", summary);
    write_tables(dir, {summary});
    write_charts(dir, {summary});
    for (const auto& m : report.levels) {
        const std::string key = level_key(m.coverage);
        io::write_cgf(dir / "maps" / ("picp_" + key + ".cgf"), GridField(report.layout, m.picp_grid));
        io::write_cgf(dir / "maps" / ("iw_" + key + ".cgf"), GridField(report.layout, m.iw_grid));
    }
}

void write_comparison(const fs::path& dir, const std::vector<json>& summaries) {
    if (summaries.empty()) throw DataError("no method reports to compare");
    fs::create_directories(dir);
    write_tables(dir, summaries);
    write_charts(dir, summaries);
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<ChartSeries>& series, ReferenceLine reference) {
    constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool any = false;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            if (!any) {
                y_min = y_max = s.y[i];
                any = true;
            }
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    }
    if (reference == ReferenceLine::identity) {
        y_min = std::min(y_min, 0.0);
        y_max = std::max(y_max, 1.0);
    } else if (reference == ReferenceLine::zero) {
        y_min = std::min(y_min, 0.0);
        y_max = std::max(y_max, 0.0);
    }
    if (y_max - y_min < 1e-9) {
        y_min -= 1.0;
        y_max += 1.0;
    }
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y) { return kTop + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h; };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double xv = x_min + (x_max - x_min) * t / 5.0;
        const double yv = y_min + (y_max - y_min) * t / 5.0;
        svg << "<text x=\"" << num(px(xv)) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">"
            << num(xv) << "</text>\n";
        svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << num(yv)
            << "</text>\n";
        svg << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
            << num(py(yv)) << "\" stroke=\"#dddddd\"/>\n";
    }
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">" << x_label
        << "</text>\n";
    svg << "<text transform=\"translate(18," << kTop + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << y_label << "</text>\n";

    if (reference == ReferenceLine::identity) {
        const double lo = std::max(x_min, y_min), hi = std::min(x_max, y_max);
        svg << "<line x1=\"" << num(px(lo)) << "\" y1=\"" << num(py(lo)) << "\" x2=\"" << num(px(hi)) << "\" y2=\""
            << num(py(hi)) << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";
    } else if (reference == ReferenceLine::zero) {
        svg << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(0.0)) << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
            << num(py(0.0)) << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";
    }

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % std::size(kColors)];
        std::ostringstream points;
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            if (!std::isfinite(series[s].y[i])) continue;
            points << num(px(series[s].x[i])) << ',' << num(py(series[s].y[i])) << ' ';
            svg << "<circle cx=\"" << num(px(series[s].x[i])) << "\" cy=\"" << num(py(series[s].y[i]))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << points.str()
            << "\"/>\n";
        const double ly = kTop + 10 + 18.0 * static_cast<double>(s);
        svg << "<line x1=\"" << kLeft + plot_w + 15 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + plot_w + 35
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kLeft + plot_w + 40 << "\" y=\"" << ly + 4 << "\">" << series[s].name << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace gridcp::pipeline
