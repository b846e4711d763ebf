#include "hybridlm/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hybridlm::report {

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string pad_right(const std::string& s, size_t width) {
    std::string out = s;
    while (out.size() < width) out += ' ';
    return out;
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) return "";
    std::vector<size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream os;
    for (size_t r = 0; r < rows.size(); ++r) {
        for (size_t c = 0; c < rows[r].size(); ++c) {
            os << pad_right(rows[r][c], widths[c]);
            if (c + 1 < rows[r].size()) os << "  ";
        }
        os << "\n";
        if (r == 0) {
            size_t total = 0;
            for (size_t c = 0; c < widths.size(); ++c) total += widths[c] + (c + 1 < widths.size() ? 2 : 0);
            os << std::string(total, '-') << "\n";
        }
    }
    return os.str();
}

}  // namespace

std::string format_pct(double v) { return fixed(v, 2); }

std::string frontier_csv(const std::vector<analysis::FrontierPoint>& points) {
    std::ostringstream os;
    os << "run_id,total_tokens,accuracy\n";
    for (const auto& p : points) {
        os << p.run_id << "," << fixed(p.total_tokens, 2) << "," << fixed(p.accuracy, 4) << "\n";
    }
    return os.str();
}

std::string frontier_svg(const std::vector<analysis::FrontierPoint>& all,
                         const std::vector<analysis::FrontierPoint>& pareto) {
    const int w = 640, h = 440;
    const double ml = 70, mr = 30, mt = 30, mb = 60;
    double max_tokens = 1.0;
    for (const auto& p : all) max_tokens = std::max(max_tokens, p.total_tokens);
    max_tokens *= 1.08;

    auto sx = [&](double tokens) { return ml + (w - ml - mr) * (tokens / max_tokens); };
    auto sy = [&](double acc) { return h - mb - (h - mt - mb) * acc; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    // axes
    os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double acc = i / 5.0;
        os << "<text x=\"" << ml - 8 << "\" y=\"" << sy(acc) + 4
           << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">" << fixed(acc, 1) << "</text>\n";
        os << "<line x1=\"" << ml - 4 << "\" y1=\"" << sy(acc) << "\" x2=\"" << ml << "\" y2=\"" << sy(acc)
           << "\" stroke=\"black\"/>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double tok = max_tokens * i / 5.0;
        os << "<text x=\"" << sx(tok) << "\" y=\"" << h - mb + 18
           << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">" << fixed(tok, 0)
           << "</text>\n";
        os << "<line x1=\"" << sx(tok) << "\" y1=\"" << h - mb << "\" x2=\"" << sx(tok) << "\" y2=\"" << h - mb + 4
           << "\" stroke=\"black\"/>\n";
    }
    os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 16
       << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">mean total tokens per sample"
          "</text>\n";
    os << "<text x=\"18\" y=\"" << (mt + h - mb) / 2
       << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 18 "
       << (mt + h - mb) / 2 << ")\">accuracy</text>\n";

    // frontier polyline
    if (pareto.size() > 1) {
        os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
        for (const auto& p : pareto) os << fixed(sx(p.total_tokens), 1) << "," << fixed(sy(p.accuracy), 1) << " ";
        os << "\"/>\n";
    }
    // all points
    for (const auto& p : all) {
        const bool on_front =
            std::any_of(pareto.begin(), pareto.end(), [&](const analysis::FrontierPoint& q) {
                return q.run_id == p.run_id && q.total_tokens == p.total_tokens && q.accuracy == p.accuracy;
            });
        os << "<circle cx=\"" << fixed(sx(p.total_tokens), 1) << "\" cy=\"" << fixed(sy(p.accuracy), 1)
           << "\" r=\"4\" fill=\"" << (on_front ? "#1f77b4" : "#bbbbbb") << "\"/>\n";
        os << "<text x=\"" << fixed(sx(p.total_tokens) + 6, 1) << "\" y=\"" << fixed(sy(p.accuracy) - 6, 1)
           << "\" font-size=\"10\" font-family=\"sans-serif\">" << p.run_id << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string results_table(const std::vector<pipeline::RunResult>& runs) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"setup", "accuracy", "planner_tok", "executor_tok", "samples", "errors"});
    for (const auto& r : runs) {
        rows.push_back({r.pairing_id, format_pct(100.0 * r.accuracy),
                        std::to_string(static_cast<long long>(std::llround(r.mean_planner_tokens))),
                        std::to_string(static_cast<long long>(std::llround(r.mean_executor_tokens))),
                        std::to_string(r.samples), std::to_string(r.errors)});
    }
    return render_table(rows);
}

std::string token_table(const std::vector<pipeline::RunResult>& runs) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"setup", "accuracy", "total_tok", "note"});
    for (const auto& r : runs) {
        const double total = r.mean_planner_tokens + r.mean_executor_tokens;
        const bool latent = r.pairing_id.find("latent") != std::string::npos;
        rows.push_back({r.pairing_id, format_pct(100.0 * r.accuracy),
                        std::to_string(static_cast<long long>(std::llround(total))),
                        latent ? "executor mean + fixed plan tokens added implicitly" : ""});
    }
    return render_table(rows);
}

std::string diagnostics_table(const std::vector<analysis::DiagnosticReport>& reports) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"benchmark", "planning_failures_pct", "execution_failures_pct", "error_gap"});
    for (const auto& r : reports) {
        rows.push_back({r.benchmark, r.planner_issue_pct ? format_pct(*r.planner_issue_pct) : "absent",
                        r.executor_issue_pct ? format_pct(*r.executor_issue_pct) : "absent",
                        r.error_gap() ? format_pct(*r.error_gap()) : "absent"});
    }
    return render_table(rows);
}

}  // namespace hybridlm::report
