#include "stimap/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "stimap/csv.hpp"

namespace stimap::report {

namespace {

std::string fixed(double value, int decimals) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", decimals, value);
    return buffer;
}

std::string share_text(const std::optional<double>& share) {
    return share ? fixed(*share, 1) : std::string();
}

std::string xml_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
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

SummaryTable summary_table(const std::map<Source, vocab::SourceTagSummary>& summaries) {
    if (summaries.empty()) throw Error("summary_table: no source summaries");
    SummaryTable table;
    for (Source source : all_sources()) {
        SummaryRow row;
        row.source = source;
        auto it = summaries.find(source);
        if (it != summaries.end()) {
            row.total_records = it->second.total;
            row.sdg_records = it->second.tagged;
        }
        if (row.sdg_records > row.total_records)
            throw Error("summary_table: tagged exceeds total for " +
                        std::string(to_string(source)));
        if (row.total_records > 0) row.share_percent = share(row.sdg_records, row.total_records);
        table.rows.push_back(row);
    }
    return table;
}

PanelHistogram panel_histogram(const std::vector<classifier::PanelDistribution>& distributions,
                               const std::map<std::string, Source>& record_sources) {
    PanelHistogram histogram;
    for (Source source : all_sources()) histogram.unclassified[source] = 0;
    for (const auto& dist : distributions) {
        auto it = record_sources.find(dist.record_id);
        if (it == record_sources.end())
            throw Error("panel_histogram: unknown record_id " + dist.record_id);
        if (dist.assigned)
            ++histogram.counts[{it->second, *dist.assigned}];
        else
            ++histogram.unclassified[it->second];
    }
    return histogram;
}

const std::vector<std::string>& default_palette() {
    static const std::vector<std::string> palette = {
        "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896",
        "#9467bd", "#c5b0d5", "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7",
        "#bcbd22", "#dbdb8d", "#17becf", "#9edae5", "#393b79", "#637939", "#8c6d31", "#843c39",
        "#7b4173", "#5254a3", "#8ca252", "#bd9e39", "#ad494a", "#a55194",
    };
    return palette;
}

std::string render_scatter(const embed::Layout2D& layout, const std::vector<int>& dominant_topics,
                           const std::vector<std::string>& palette,
                           const std::vector<std::vector<std::string>>& topic_top_words,
                           const std::vector<std::string>& record_ids) {
    const std::size_t n = layout.coordinates.size();
    if (dominant_topics.size() != n || record_ids.size() != n)
        throw Error("render_scatter: column lengths disagree");
    std::vector<int> topics_present(dominant_topics);
    std::sort(topics_present.begin(), topics_present.end());
    topics_present.erase(std::unique(topics_present.begin(), topics_present.end()),
                         topics_present.end());
    int max_topic = topics_present.empty() ? -1 : topics_present.back();
    if (max_topic >= 0 && static_cast<std::size_t>(max_topic) >= palette.size())
        throw Error("render_scatter: palette holds " + std::to_string(palette.size()) +
                    " colors but topic " + std::to_string(max_topic) + " appears");

    double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
    if (n > 0) {
        min_x = max_x = layout.coordinates[0][0];
        min_y = max_y = layout.coordinates[0][1];
        for (const auto& point : layout.coordinates) {
            min_x = std::min(min_x, point[0]);
            max_x = std::max(max_x, point[0]);
            min_y = std::min(min_y, point[1]);
            max_y = std::max(max_y, point[1]);
        }
    }
    // Affine map into [50, 950]; degenerate extents land mid-canvas.
    auto scale = [](double v, double lo, double hi) {
        if (hi <= lo) return 500.0;
        return 50.0 + (v - lo) / (hi - lo) * 900.0;
    };

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return record_ids[a] < record_ids[b]; });

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1300 1000\">\n";
    svg += "<rect width=\"1300\" height=\"1000\" fill=\"#ffffff\"/>\n";
    for (std::size_t idx : order) {
        double cx = scale(layout.coordinates[idx][0], min_x, max_x);
        double cy = scale(layout.coordinates[idx][1], min_y, max_y);
        int topic = dominant_topics[idx];
        svg += "<circle cx=\"" + fixed(cx, 2) + "\" cy=\"" + fixed(cy, 2) + "\" r=\"5\" fill=\"" +
               palette[static_cast<std::size_t>(topic)] + "\" fill-opacity=\"0.8\"><title>" +
               xml_escape(record_ids[idx]) + "</title></circle>\n";
    }
    double legend_y = 30.0;
    for (int topic : topics_present) {
        std::string words;
        if (static_cast<std::size_t>(topic) < topic_top_words.size()) {
            const auto& top = topic_top_words[static_cast<std::size_t>(topic)];
            for (std::size_t w = 0; w < top.size() && w < 3; ++w) {
                if (!words.empty()) words += ", ";
                words += top[w];
            }
        }
        svg += "<rect x=\"1020\" y=\"" + fixed(legend_y - 12.0, 2) +
               "\" width=\"14\" height=\"14\" fill=\"" + palette[static_cast<std::size_t>(topic)] +
               "\"/>\n";
        svg += "<text x=\"1040\" y=\"" + fixed(legend_y, 2) +
               "\" font-family=\"sans-serif\" font-size=\"13\">" + std::to_string(topic) + ": " +
               xml_escape(words) + "</text>\n";
        legend_y += 22.0;
    }
    svg += "</svg>\n";
    return svg;
}

std::string render_histogram(const PanelHistogram& histogram, bool per_source_normalized) {
    constexpr double kWidth = 1500.0;
    constexpr double kHeight = 600.0;
    constexpr double kLeft = 60.0;
    constexpr double kBottom = 560.0;
    constexpr double kTop = 40.0;
    const auto& sources = all_sources();
    static const std::array<std::string, 4> source_colors = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                                             "#d62728"};

    std::map<Source, double> source_totals;
    for (Source s : sources) source_totals[s] = 0.0;
    double max_value = 0.0;
    auto value_of = [&](Source s, int panel) {
        auto it = histogram.counts.find({s, panel});
        return it == histogram.counts.end() ? 0.0 : static_cast<double>(it->second);
    };
    for (Source s : sources) {
        for (std::size_t p = 0; p < classifier::kPanelCount; ++p)
            source_totals[s] += value_of(s, static_cast<int>(p));
    }
    for (Source s : sources) {
        for (std::size_t p = 0; p < classifier::kPanelCount; ++p) {
            double v = value_of(s, static_cast<int>(p));
            if (per_source_normalized && source_totals[s] > 0.0) v /= source_totals[s];
            max_value = std::max(max_value, v);
        }
    }
    if (max_value <= 0.0) max_value = 1.0;

    const double plot_width = kWidth - kLeft - 20.0;
    const double group_width = plot_width / static_cast<double>(classifier::kPanelCount);
    const double bar_width = group_width / 5.0;  // 4 bars + gap

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + fixed(kWidth, 0) + " " +
           fixed(kHeight, 0) + "\">\n";
    svg += "<rect width=\"" + fixed(kWidth, 0) + "\" height=\"" + fixed(kHeight, 0) +
           "\" fill=\"#ffffff\"/>\n";
    svg += "<line x1=\"" + fixed(kLeft, 0) + "\" y1=\"" + fixed(kBottom, 0) + "\" x2=\"" +
           fixed(kWidth - 20.0, 0) + "\" y2=\"" + fixed(kBottom, 0) + "\" stroke=\"#000000\"/>\n";
    svg += "<line x1=\"" + fixed(kLeft, 0) + "\" y1=\"" + fixed(kTop, 0) + "\" x2=\"" +
           fixed(kLeft, 0) + "\" y2=\"" + fixed(kBottom, 0) + "\" stroke=\"#000000\"/>\n";

    for (std::size_t p = 0; p < classifier::kPanelCount; ++p) {
        double group_x = kLeft + static_cast<double>(p) * group_width;
        for (std::size_t s = 0; s < sources.size(); ++s) {
            double v = value_of(sources[s], static_cast<int>(p));
            if (per_source_normalized && source_totals[sources[s]] > 0.0)
                v /= source_totals[sources[s]];
            double height = (kBottom - kTop) * v / max_value;
            double x = group_x + static_cast<double>(s) * bar_width;
            svg += "<rect x=\"" + fixed(x, 2) + "\" y=\"" + fixed(kBottom - height, 2) +
                   "\" width=\"" + fixed(bar_width * 0.9, 2) + "\" height=\"" + fixed(height, 2) +
                   "\" fill=\"" + source_colors[s] + "\"/>\n";
        }
        svg += "<text x=\"" + fixed(group_x + group_width / 2.0 - bar_width / 2.0, 2) + "\" y=\"" +
               fixed(kBottom + 18.0, 2) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
               std::string(classifier::panel_code(static_cast<int>(p))) + "</text>\n";
    }
    double legend_x = kLeft;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        svg += "<rect x=\"" + fixed(legend_x, 2) + "\" y=\"10\" width=\"12\" height=\"12\" fill=\"" +
               source_colors[s] + "\"/>\n";
        svg += "<text x=\"" + fixed(legend_x + 18.0, 2) +
               "\" y=\"21\" font-family=\"sans-serif\" font-size=\"13\">" +
               std::string(to_string(sources[s])) + "</text>\n";
        legend_x += 130.0;
    }
    svg += "<text x=\"" + fixed(kWidth - 20.0, 2) +
           "\" y=\"21\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"end\">" +
           std::string(per_source_normalized ? "share of source documents" : "documents") +
           " (max " + (per_source_normalized ? fixed(max_value, 3) : fixed(max_value, 0)) +
           ")</text>\n";
    svg += "</svg>\n";
    return svg;
}

std::string summary_csv(const SummaryTable& table) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"source", "total_records", "sdg_records", "share_percent"});
    for (const auto& row : table.rows)
        rows.push_back({std::string(to_string(row.source)), std::to_string(row.total_records),
                        std::to_string(row.sdg_records), share_text(row.share_percent)});
    return csv::write(rows);
}

std::string summary_markdown(const SummaryTable& table) {
    std::vector<std::array<std::string, 4>> cells;
    cells.push_back({"Data source", "Total records", "SDG 13 records", "Share (%)"});
    for (const auto& row : table.rows)
        cells.push_back({std::string(to_string(row.source)), std::to_string(row.total_records),
                         std::to_string(row.sdg_records), share_text(row.share_percent)});
    std::array<std::size_t, 4> width{};
    for (const auto& row : cells)
        for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());

    std::string out;
    auto emit_row = [&](const std::array<std::string, 4>& row) {
        out += "|";
        for (std::size_t c = 0; c < 4; ++c) {
            out += " " + row[c] + std::string(width[c] - row[c].size(), ' ') + " |";
        }
        out += "\n";
    };
    emit_row(cells[0]);
    out += "|";
    for (std::size_t c = 0; c < 4; ++c) out += std::string(width[c] + 2, '-') + "|";
    out += "\n";
    for (std::size_t r = 1; r < cells.size(); ++r) emit_row(cells[r]);
    return out;
}

std::string histogram_csv(const PanelHistogram& histogram) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"source", "panel", "count"});
    for (Source source : all_sources()) {
        for (std::size_t p = 0; p < classifier::kPanelCount; ++p) {
            auto it = histogram.counts.find({source, static_cast<int>(p)});
            std::size_t count = it == histogram.counts.end() ? 0 : it->second;
            rows.push_back({std::string(to_string(source)),
                            std::string(classifier::panel_code(static_cast<int>(p))),
                            std::to_string(count)});
        }
        auto it = histogram.unclassified.find(source);
        std::size_t count = it == histogram.unclassified.end() ? 0 : it->second;
        rows.push_back({std::string(to_string(source)), "unclassified", std::to_string(count)});
    }
    return csv::write(rows);
}

}  // namespace stimap::report
