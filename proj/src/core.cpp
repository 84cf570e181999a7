#include "stimap/core.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace stimap {

using ordered_json = nlohmann::ordered_json;

const std::array<Source, 4>& all_sources() {
    static const std::array<Source, 4> sources = {Source::OpenAlex, Source::OpenAIRE,
                                                  Source::Cordis, Source::Kohesio};
    return sources;
}

std::string_view to_string(Source source) {
    switch (source) {
        case Source::OpenAlex: return "openalex";
        case Source::OpenAIRE: return "openaire";
        case Source::Cordis: return "cordis";
        case Source::Kohesio: return "kohesio";
    }
    throw Error("invalid source enum value");
}

std::string_view to_string(RecordKind kind) {
    return kind == RecordKind::Publication ? "publication" : "project";
}

Source source_from_string(std::string_view name) {
    for (Source s : all_sources()) {
        if (to_string(s) == name) return s;
    }
    throw ParseError("unknown source: " + std::string(name));
}

RecordKind record_kind_from_string(std::string_view name) {
    if (name == "publication") return RecordKind::Publication;
    if (name == "project") return RecordKind::Project;
    throw ParseError("unknown record kind: " + std::string(name));
}

std::string STIRecord::text() const {
    std::string out;
    out.reserve(title.size() + body.size() + 1);
    out += title;
    out += '\n';
    out += body;
    return out;
}

void Corpus::validate() const {
    std::set<std::string_view> seen;
    std::map<Source, std::size_t> per_source;
    for (const auto& record : records) {
        if (record.record_id.empty()) throw Error("corpus contains a record with empty record_id");
        if (!seen.insert(record.record_id).second)
            throw Error("duplicate record_id in corpus: " + record.record_id);
        ++per_source[record.source];
    }
    for (const auto& [source, meta] : provenance) {
        std::size_t total = std::accumulate(meta.page_sizes.begin(), meta.page_sizes.end(),
                                            std::size_t{0});
        auto it = per_source.find(source);
        std::size_t have = it == per_source.end() ? 0 : it->second;
        if (total != have)
            throw Error("provenance page sizes for " + std::string(to_string(source)) +
                        " sum to " + std::to_string(total) + " but corpus holds " +
                        std::to_string(have) + " records");
    }
}

std::optional<std::string> normalize_doi(std::string_view raw) {
    std::string s(raw);
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    // Registrant codes are 4-9 digits; anything else is not a DOI.
    static const std::regex doi_re(R"(10\.[0-9]{4,9}/[^[:space:]]+)");
    std::smatch m;
    if (!std::regex_search(s, m, doi_re)) return std::nullopt;
    return m.str(0);
}

double share(std::uint64_t numerator, std::uint64_t denominator) {
    if (denominator == 0) throw std::domain_error("share: zero denominator");
    if (numerator > denominator) throw std::domain_error("share: numerator exceeds denominator");
    // Integer arithmetic keeps the one-decimal rounding exact.
    std::uint64_t scaled = numerator * 1000;
    std::uint64_t tenths = scaled / denominator;
    if (2 * (scaled % denominator) >= denominator) ++tenths;
    return static_cast<double>(tenths) / 10.0;
}

std::string to_canonical_json(const STIRecord& record) {
    ordered_json j;
    j["record_id"] = record.record_id;
    j["source"] = to_string(record.source);
    j["kind"] = to_string(record.kind);
    j["title"] = record.title;
    j["body"] = record.body;
    j["year"] = record.year;
    j["country_codes"] = record.country_codes;  // std::set keeps them sorted
    if (record.doi) j["doi"] = *record.doi;
    return j.dump();
}

STIRecord record_from_json_line(const std::string& line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad corpus line: ") + e.what() + "; line: " +
                         line.substr(0, 120));
    }
    STIRecord r;
    try {
        r.record_id = j.at("record_id").get<std::string>();
        r.source = source_from_string(j.at("source").get<std::string>());
        r.kind = record_kind_from_string(j.at("kind").get<std::string>());
        r.title = j.at("title").get<std::string>();
        r.body = j.at("body").get<std::string>();
        r.year = j.at("year").get<int>();
        for (const auto& c : j.at("country_codes")) r.country_codes.insert(c.get<std::string>());
        if (j.contains("doi")) r.doi = j.at("doi").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("corpus record missing field: ") + e.what() + "; line: " +
                         line.substr(0, 120));
    }
    return r;
}

void write_corpus_file(const std::filesystem::path& path, const std::vector<STIRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open corpus file for writing: " + path.string());
    for (const auto& record : records) out << to_canonical_json(record) << '\n';
}

std::vector<STIRecord> read_corpus_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open corpus file: " + path.string());
    std::vector<STIRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(record_from_json_line(line));
    }
    return records;
}

}  // namespace stimap
