#include "stimap/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "stimap/csv.hpp"

namespace stimap::ingest {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string hex64(std::uint64_t value) {
    static const char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

std::string excerpt(const std::string& payload) {
    std::string head = payload.substr(0, 160);
    std::replace(head.begin(), head.end(), '\n', ' ');
    return head;
}

int year_from_date(const std::string& date) {
    if (date.size() < 4) return 0;
    int year = 0;
    for (int i = 0; i < 4; ++i) {
        char c = date[i];
        if (c < '0' || c > '9') return 0;
        year = year * 10 + (c - '0');
    }
    return year;
}

std::string last_path_segment(const std::string& url) {
    auto pos = url.find_last_of('/');
    return pos == std::string::npos ? url : url.substr(pos + 1);
}

json parse_json_payload(const std::string& payload) {
    try {
        return json::parse(payload);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("malformed page payload: " + std::string(e.what()) +
                         "; payload starts: " + excerpt(payload));
    }
}

std::optional<std::string> cursor_from(const json& j, const char* outer, const char* key) {
    if (!j.contains(outer)) return std::nullopt;
    const json& meta = j.at(outer);
    if (!meta.is_object() || !meta.contains(key)) return std::nullopt;
    const json& c = meta.at(key);
    if (c.is_null()) return std::nullopt;
    std::string value = c.get<std::string>();
    if (value.empty()) return std::nullopt;
    return value;
}

}  // namespace

void HarvestQuery::validate() const {
    if (year_from > year_to)
        throw ConfigError("harvest query: year_from (" + std::to_string(year_from) +
                          ") exceeds year_to (" + std::to_string(year_to) + ")");
    // OpenAlex caps per-page at 200; the others accept at least that much.
    if (page_size < 1 || page_size > 200)
        throw ConfigError("harvest query: page_size must lie in [1, 200], got " +
                          std::to_string(page_size));
    if (country_code.size() != 2)
        throw ConfigError("harvest query: country_code must be ISO-3166 alpha-2, got '" +
                          country_code + "'");
}

std::string HarvestQuery::canonical_string() const {
    std::ostringstream out;
    out << to_string(source) << "|country=" << country_code << "|years=" << year_from << "-"
        << year_to << "|page_size=" << page_size;
    if (max_records) out << "|max=" << *max_records;
    return out.str();
}

FixtureFetcher::FixtureFetcher(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_))
        throw ConfigError("fixture directory does not exist: " + dir_.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.is_regular_file()) pages_.push_back(entry.path());
    }
    std::sort(pages_.begin(), pages_.end(),
              [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
    if (pages_.empty()) throw ConfigError("fixture directory holds no pages: " + dir_.string());
}

SourcePage FixtureFetcher::fetch_page(const HarvestQuery&,
                                      const std::optional<std::string>& cursor) {
    std::size_t index = 0;
    if (cursor) index = std::stoul(*cursor);
    if (index >= pages_.size())
        throw TransportError("fixture cursor out of range: " + std::to_string(index));
    std::ifstream in(pages_[index], std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    SourcePage page;
    page.raw_payload = buffer.str();
    if (index + 1 < pages_.size()) page.cursor = std::to_string(index + 1);
    return page;
}

TokenBucket::TokenBucket(double rate_per_sec, double capacity, Clock clock, Sleeper sleeper)
    : rate_(rate_per_sec),
      capacity_(capacity),
      tokens_(capacity),
      clock_(clock ? std::move(clock) : [] { return std::chrono::steady_clock::now(); }),
      sleeper_(sleeper ? std::move(sleeper) : [](std::chrono::duration<double> d) {
          std::this_thread::sleep_for(d);
      }) {
    last_ = clock_();
}

void TokenBucket::acquire() {
    auto now = clock_();
    tokens_ = std::min(capacity_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
    last_ = now;
    if (tokens_ < 1.0) {
        auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
        sleeper_(wait);
        now = clock_();
        tokens_ = std::min(capacity_,
                           tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
        last_ = now;
        if (tokens_ < 1.0) tokens_ = 1.0;  // sleeper is trusted after one wait
    }
    tokens_ -= 1.0;
}

HttpFetcher::HttpFetcher(std::string base_url, double rate_per_sec,
                         std::optional<std::string> result_type)
    : base_url_(std::move(base_url)),
      result_type_(std::move(result_type)),
      bucket_(rate_per_sec, rate_per_sec) {}

SourcePage HttpFetcher::fetch_page(const HarvestQuery& query,
                                   const std::optional<std::string>& cursor) {
    bucket_.acquire();
    ++fetches_;

    auto scheme_end = base_url_.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("base_url must include a scheme: " + base_url_);
    auto host_begin = scheme_end + 3;
    auto path_begin = base_url_.find('/', host_begin);
    std::string origin = path_begin == std::string::npos ? base_url_ : base_url_.substr(0, path_begin);
    std::string path = path_begin == std::string::npos ? "/" : base_url_.substr(path_begin);

    httplib::Params params;
    switch (query.source) {
        case Source::OpenAlex:
            params.emplace("filter", "institutions.country_code:" + query.country_code +
                                         ",from_publication_date:" + std::to_string(query.year_from) +
                                         "-01-01,to_publication_date:" + std::to_string(query.year_to) +
                                         "-12-31");
            params.emplace("per-page", std::to_string(query.page_size));
            params.emplace("cursor", cursor.value_or("*"));
            break;
        case Source::OpenAIRE:
            params.emplace("countryCode", query.country_code);
            params.emplace("fromPublicationDate", std::to_string(query.year_from) + "-01-01");
            params.emplace("toPublicationDate", std::to_string(query.year_to) + "-12-31");
            params.emplace("pageSize", std::to_string(query.page_size));
            params.emplace("cursor", cursor.value_or("*"));
            if (result_type_) params.emplace("type", *result_type_);
            break;
        case Source::Cordis:
        case Source::Kohesio:
            // Bulk/tabular exports: a single GET per page, cursor appended when present.
            if (cursor) params.emplace("page", *cursor);
            break;
    }

    httplib::Client client(origin);
    client.set_follow_location(true);
    auto res = client.Get(path, params, httplib::Headers{});
    if (!res)
        throw TransportError("transport failure against " + origin + ": " +
                             httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        throw TransportError("HTTP " + std::to_string(res->status) + " from " + origin);
    if (res->status != 200)
        throw Error("HTTP " + std::to_string(res->status) + " from " + origin);

    SourcePage page;
    page.raw_payload = res->body;
    page.cursor = payload_next_cursor(query.source, page.raw_payload);
    return page;
}

RetryingFetcher::RetryingFetcher(PageFetcher& inner,
                                 std::vector<std::chrono::duration<double>> backoff,
                                 std::function<void(std::chrono::duration<double>)> sleeper)
    : inner_(inner),
      backoff_(std::move(backoff)),
      sleeper_(sleeper ? std::move(sleeper) : [](std::chrono::duration<double> d) {
          std::this_thread::sleep_for(d);
      }) {}

SourcePage RetryingFetcher::fetch_page(const HarvestQuery& query,
                                       const std::optional<std::string>& cursor) {
    std::size_t attempt = 0;
    for (;;) {
        try {
            return inner_.fetch_page(query, cursor);
        } catch (const TransportError&) {
            if (attempt >= backoff_.size()) throw;
            sleeper_(backoff_[attempt]);
            ++attempt;
        }
    }
}

CachingFetcher::CachingFetcher(PageFetcher& inner, std::filesystem::path cache_dir)
    : inner_(inner), cache_dir_(std::move(cache_dir)) {
    std::filesystem::create_directories(cache_dir_);
}

SourcePage CachingFetcher::fetch_page(const HarvestQuery& query,
                                      const std::optional<std::string>& cursor) {
    std::string key = query.canonical_string() + "\x1f" + cursor.value_or("");
    auto file = cache_dir_ / (std::string(to_string(query.source)) + "_" + hex64(fnv1a64(key)));
    if (std::filesystem::exists(file)) {
        std::ifstream in(file, std::ios::binary);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        SourcePage page;
        page.raw_payload = buffer.str();
        page.cursor = payload_next_cursor(query.source, page.raw_payload);
        return page;
    }
    ++misses_;
    SourcePage page = inner_.fetch_page(query, cursor);
    auto tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << page.raw_payload;
    }
    std::filesystem::rename(tmp, file);
    return page;
}

std::string reconstruct_inverted_abstract(const json& inverted) {
    std::vector<std::pair<long, std::string>> slots;
    for (const auto& [token, positions] : inverted.items()) {
        for (const auto& pos : positions) slots.emplace_back(pos.get<long>(), token);
    }
    std::stable_sort(slots.begin(), slots.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::string text;
    for (const auto& [pos, token] : slots) {
        if (!text.empty()) text += ' ';
        text += token;
    }
    return text;
}

STIRecord parse_openalex_work(const json& work) {
    if (!work.contains("id") || work.at("id").is_null())
        throw ParseError("openalex work is missing id: " + excerpt(work.dump()));
    STIRecord r;
    r.source = Source::OpenAlex;
    r.kind = RecordKind::Publication;
    r.record_id = "openalex:" + last_path_segment(work.at("id").get<std::string>());
    if (work.contains("title") && work.at("title").is_string())
        r.title = work.at("title").get<std::string>();
    if (work.contains("abstract_inverted_index") && work.at("abstract_inverted_index").is_object())
        r.body = reconstruct_inverted_abstract(work.at("abstract_inverted_index"));
    if (work.contains("publication_year") && work.at("publication_year").is_number())
        r.year = work.at("publication_year").get<int>();
    if (work.contains("authorships")) {
        for (const auto& authorship : work.at("authorships")) {
            if (!authorship.contains("institutions")) continue;
            for (const auto& institution : authorship.at("institutions")) {
                if (institution.contains("country_code") && institution.at("country_code").is_string())
                    r.country_codes.insert(institution.at("country_code").get<std::string>());
            }
        }
    }
    if (work.contains("doi") && work.at("doi").is_string())
        r.doi = normalize_doi(work.at("doi").get<std::string>());
    return r;
}

STIRecord parse_openaire_result(const json& result) {
    if (!result.contains("id") || result.at("id").is_null())
        throw ParseError("openaire result is missing id: " + excerpt(result.dump()));
    STIRecord r;
    r.source = Source::OpenAIRE;
    r.kind = RecordKind::Publication;
    r.record_id = "openaire:" + result.at("id").get<std::string>();
    if (result.contains("mainTitle") && result.at("mainTitle").is_string())
        r.title = result.at("mainTitle").get<std::string>();
    if (result.contains("description") && result.at("description").is_string())
        r.body = result.at("description").get<std::string>();
    if (result.contains("publicationDate") && result.at("publicationDate").is_string())
        r.year = year_from_date(result.at("publicationDate").get<std::string>());
    if (result.contains("countries")) {
        for (const auto& c : result.at("countries"))
            if (c.is_string()) r.country_codes.insert(c.get<std::string>());
    }
    if (result.contains("doi") && result.at("doi").is_string())
        r.doi = normalize_doi(result.at("doi").get<std::string>());
    return r;
}

STIRecord parse_cordis_project(const json& joined_row) {
    if (!joined_row.contains("id") || joined_row.at("id").is_null())
        throw ParseError("cordis project is missing the project reference number: " +
                         excerpt(joined_row.dump()));
    STIRecord r;
    r.source = Source::Cordis;
    r.kind = RecordKind::Project;
    const auto& id = joined_row.at("id");
    r.record_id = "cordis:" + (id.is_string() ? id.get<std::string>()
                                              : std::to_string(id.get<long long>()));
    if (joined_row.contains("title") && joined_row.at("title").is_string())
        r.title = joined_row.at("title").get<std::string>();
    if (joined_row.contains("objective") && joined_row.at("objective").is_string())
        r.body = joined_row.at("objective").get<std::string>();
    if (joined_row.contains("startDate") && joined_row.at("startDate").is_string())
        r.year = year_from_date(joined_row.at("startDate").get<std::string>());
    if (joined_row.contains("participant_countries")) {
        for (const auto& c : joined_row.at("participant_countries"))
            if (c.is_string()) r.country_codes.insert(c.get<std::string>());
    }
    return r;
}

STIRecord parse_kohesio_project(const std::map<std::string, std::string>& row) {
    auto field = [&](const char* name) -> std::string {
        auto it = row.find(name);
        return it == row.end() ? std::string() : it->second;
    };
    std::string id = field("id");
    if (id.empty()) throw ParseError("kohesio row is missing id");
    STIRecord r;
    r.source = Source::Kohesio;
    r.kind = RecordKind::Project;
    r.record_id = "kohesio:" + id;
    r.title = field("label");
    r.body = field("summary");
    r.year = year_from_date(field("start_date"));
    std::string country = field("country");
    if (!country.empty()) r.country_codes.insert(country);
    return r;
}

std::vector<STIRecord> parse_page(Source source, const std::string& payload) {
    std::vector<STIRecord> records;
    switch (source) {
        case Source::OpenAlex: {
            json j = parse_json_payload(payload);
            if (!j.contains("results"))
                throw ParseError("openalex page has no results field; payload starts: " +
                                 excerpt(payload));
            for (const auto& work : j.at("results")) records.push_back(parse_openalex_work(work));
            break;
        }
        case Source::OpenAIRE: {
            json j = parse_json_payload(payload);
            if (!j.contains("results"))
                throw ParseError("openaire page has no results field; payload starts: " +
                                 excerpt(payload));
            for (const auto& result : j.at("results"))
                records.push_back(parse_openaire_result(result));
            break;
        }
        case Source::Cordis: {
            json j = parse_json_payload(payload);
            if (!j.contains("projects"))
                throw ParseError("cordis page has no projects field; payload starts: " +
                                 excerpt(payload));
            // Join each project with its participating-organisation countries.
            std::map<std::string, std::vector<std::string>> countries_by_project;
            if (j.contains("organizations")) {
                for (const auto& org : j.at("organizations")) {
                    if (!org.contains("projectID") || !org.contains("country")) continue;
                    const auto& pid = org.at("projectID");
                    std::string key = pid.is_string() ? pid.get<std::string>()
                                                      : std::to_string(pid.get<long long>());
                    countries_by_project[key].push_back(org.at("country").get<std::string>());
                }
            }
            for (const auto& project : j.at("projects")) {
                json joined = project;
                std::string key;
                if (project.contains("id")) {
                    const auto& pid = project.at("id");
                    key = pid.is_string() ? pid.get<std::string>()
                                          : std::to_string(pid.get<long long>());
                }
                joined["participant_countries"] = countries_by_project.count(key)
                                                      ? json(countries_by_project.at(key))
                                                      : json::array();
                records.push_back(parse_cordis_project(joined));
            }
            break;
        }
        case Source::Kohesio: {
            std::vector<std::vector<std::string>> rows;
            try {
                rows = csv::read(payload);
            } catch (const ParseError& e) {
                throw ParseError("malformed kohesio page: " + std::string(e.what()) +
                                 "; payload starts: " + excerpt(payload));
            }
            if (rows.empty())
                throw ParseError("kohesio page has no header row; payload starts: " +
                                 excerpt(payload));
            const auto& header = rows.front();
            for (std::size_t ri = 1; ri < rows.size(); ++ri) {
                std::map<std::string, std::string> row;
                for (std::size_t ci = 0; ci < header.size() && ci < rows[ri].size(); ++ci)
                    row[header[ci]] = rows[ri][ci];
                records.push_back(parse_kohesio_project(row));
            }
            break;
        }
    }
    return records;
}

std::optional<std::string> payload_next_cursor(Source source, const std::string& payload) {
    switch (source) {
        case Source::OpenAlex: {
            json j = parse_json_payload(payload);
            return cursor_from(j, "meta", "next_cursor");
        }
        case Source::OpenAIRE: {
            json j = parse_json_payload(payload);
            return cursor_from(j, "header", "nextCursor");
        }
        case Source::Cordis:
        case Source::Kohesio:
            return std::nullopt;  // single-chunk exports
    }
    return std::nullopt;
}

Corpus harvest(const HarvestQuery& query, PageFetcher& fetcher) {
    query.validate();
    Corpus corpus;
    FetchMeta meta;
    meta.query = query.canonical_string();

    std::optional<std::string> cursor;
    std::size_t page_index = 0;
    bool capped = false;
    for (;;) {
        SourcePage page;
        try {
            page = fetcher.fetch_page(query, cursor);
        } catch (const TransportError& e) {
            throw HarvestError("harvest aborted at page " + std::to_string(page_index) + ": " +
                               e.what(), page_index);
        }
        std::vector<STIRecord> parsed = parse_page(query.source, page.raw_payload);
        std::size_t retained = 0;
        for (auto& record : parsed) {
            if (!record.country_codes.contains(query.country_code)) continue;
            if (record.year < query.year_from || record.year > query.year_to) continue;
            if (query.max_records && corpus.records.size() >= *query.max_records) {
                capped = true;
                break;
            }
            corpus.records.push_back(std::move(record));
            ++retained;
        }
        meta.page_sizes.push_back(retained);
        ++page_index;
        if (query.max_records && corpus.records.size() >= *query.max_records) capped = true;
        cursor = page.cursor;
        if (capped || !cursor) break;
    }
    meta.live_fetches = fetcher.live_fetch_count();
    corpus.provenance[query.source] = std::move(meta);
    corpus.validate();
    return corpus;
}

}  // namespace stimap::ingest
