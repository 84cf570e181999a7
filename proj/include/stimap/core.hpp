#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stimap {

/// Base class for all pipeline errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Configuration / usage problems (CLI maps these to exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

/// Malformed payload or file content; carries an excerpt of the offending input.
struct ParseError : Error {
    using Error::Error;
};

enum class Source { OpenAlex, OpenAIRE, Cordis, Kohesio };
enum class RecordKind { Publication, Project };

const std::array<Source, 4>& all_sources();
std::string_view to_string(Source source);
std::string_view to_string(RecordKind kind);
Source source_from_string(std::string_view name);
RecordKind record_kind_from_string(std::string_view name);

/// One publication or R&D project as consumed by the pipeline.
struct STIRecord {
    std::string record_id;  // canonical, source-prefixed, e.g. "openalex:W123"
    Source source = Source::OpenAlex;
    RecordKind kind = RecordKind::Publication;
    std::string title;
    std::string body;  // abstract or project description, possibly empty
    int year = 0;
    std::set<std::string> country_codes;  // ISO-3166 alpha-2
    std::optional<std::string> doi;       // normalized lowercase, no URL prefix

    /// Text used for tagging and classification: title, newline, body.
    std::string text() const;

    bool operator==(const STIRecord&) const = default;
};

struct FetchMeta {
    std::string timestamp;  // ISO-8601 when fetched live, empty in fixture mode
    std::string query;
    std::vector<std::size_t> page_sizes;  // retained records per page
    std::size_t live_fetches = 0;
};

struct Corpus {
    std::vector<STIRecord> records;
    std::map<Source, FetchMeta> provenance;

    /// Throws Error when record ids collide or provenance page sizes do not
    /// add up to the per-source record counts.
    void validate() const;
};

struct TermMatch {
    std::string term_id;
    std::size_t begin = 0;  // original-text byte offsets, [begin, end)
    std::size_t end = 0;

    auto operator<=>(const TermMatch&) const = default;
};

struct SDGTagResult {
    std::string record_id;
    std::vector<TermMatch> matched_terms;
    std::vector<std::string> matched_rules;
    bool is_sdg13 = false;

    bool operator==(const SDGTagResult&) const = default;
};

/// Strips a doi.org-style prefix and surrounding whitespace, lowercases.
/// Returns nothing when the input does not contain a "10."-prefixed DOI.
std::optional<std::string> normalize_doi(std::string_view raw);

/// 100 * numerator / denominator, rounded half-away-from-zero to one decimal.
/// Throws std::domain_error on zero denominator.
double share(std::uint64_t numerator, std::uint64_t denominator);

// Canonical newline-delimited JSON corpus format: one record per line,
// fixed field order, sorted country codes, doi omitted when absent.
std::string to_canonical_json(const STIRecord& record);
STIRecord record_from_json_line(const std::string& line);
void write_corpus_file(const std::filesystem::path& path, const std::vector<STIRecord>& records);
std::vector<STIRecord> read_corpus_file(const std::filesystem::path& path);

}  // namespace stimap
