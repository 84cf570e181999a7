#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stimap/classifier.hpp"
#include "stimap/core.hpp"
#include "stimap/embed.hpp"
#include "stimap/vocab.hpp"

namespace stimap::report {

struct SummaryRow {
    Source source;
    std::size_t total_records = 0;
    std::size_t sdg_records = 0;
    std::optional<double> share_percent;  // absent when total_records is zero
};

struct SummaryTable {
    std::vector<SummaryRow> rows;  // fixed source order
};

SummaryTable summary_table(const std::map<Source, vocab::SourceTagSummary>& summaries);

struct PanelHistogram {
    std::map<std::pair<Source, int>, std::size_t> counts;  // (source, panel) -> documents
    std::map<Source, std::size_t> unclassified;
};

PanelHistogram panel_histogram(const std::vector<classifier::PanelDistribution>& distributions,
                               const std::map<std::string, Source>& record_sources);

/// 30 visually distinct fill colors.
const std::vector<std::string>& default_palette();

/// Topic-colored document scatter; deterministic byte output, elements ordered
/// by record_id, coordinates affinely scaled into a 1000x1000 viewbox with a
/// 5% margin. Legend lists each topic index with its top words.
std::string render_scatter(const embed::Layout2D& layout, const std::vector<int>& dominant_topics,
                           const std::vector<std::string>& palette,
                           const std::vector<std::vector<std::string>>& topic_top_words,
                           const std::vector<std::string>& record_ids);

/// Grouped bars per panel (canonical code order) and source; shared linear
/// scale by default, per-source normalized shares behind the flag.
std::string render_histogram(const PanelHistogram& histogram, bool per_source_normalized = false);

std::string summary_csv(const SummaryTable& table);
std::string summary_markdown(const SummaryTable& table);
std::string histogram_csv(const PanelHistogram& histogram);

}  // namespace stimap::report
