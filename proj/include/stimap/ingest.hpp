#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stimap/core.hpp"

namespace stimap::ingest {

/// Network-level failure; retriable.
struct TransportError : Error {
    using Error::Error;
};

/// Harvest aborted; carries the index of the page that failed.
struct HarvestError : Error {
    HarvestError(const std::string& what, std::size_t page_index)
        : Error(what), page_index(page_index) {}
    std::size_t page_index = 0;
};

struct HarvestQuery {
    Source source = Source::OpenAlex;
    std::string country_code = "DK";
    int year_from = 2014;
    int year_to = 2019;
    std::size_t page_size = 25;
    std::optional<std::size_t> max_records;

    void validate() const;
    /// Stable textual form used for provenance and cache keys.
    std::string canonical_string() const;
};

struct SourcePage {
    std::string raw_payload;
    std::optional<std::string> cursor;  // absent signals the final page
    std::size_t records_in_page = 0;
};

class PageFetcher {
  public:
    virtual ~PageFetcher() = default;
    virtual SourcePage fetch_page(const HarvestQuery& query,
                                  const std::optional<std::string>& cursor) = 0;
    virtual std::size_t live_fetch_count() const { return 0; }
};

/// Replays pages from files in a directory, lexicographic filename order.
class FixtureFetcher : public PageFetcher {
  public:
    explicit FixtureFetcher(std::filesystem::path dir);
    SourcePage fetch_page(const HarvestQuery& query,
                          const std::optional<std::string>& cursor) override;

  private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> pages_;
};

/// Token bucket limiting request rate; clock and sleep are injectable for tests.
class TokenBucket {
  public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;
    using Sleeper = std::function<void(std::chrono::duration<double>)>;

    TokenBucket(double rate_per_sec, double capacity, Clock clock = {}, Sleeper sleeper = {});
    void acquire();

  private:
    double rate_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    Clock clock_;
    Sleeper sleeper_;
};

/// Live HTTP fetcher with per-source request building and rate limiting.
class HttpFetcher : public PageFetcher {
  public:
    HttpFetcher(std::string base_url, double rate_per_sec = 5.0,
                std::optional<std::string> result_type = std::nullopt);
    SourcePage fetch_page(const HarvestQuery& query,
                          const std::optional<std::string>& cursor) override;
    std::size_t live_fetch_count() const override { return fetches_; }

  private:
    std::string base_url_;
    std::optional<std::string> result_type_;
    TokenBucket bucket_;
    std::size_t fetches_ = 0;
};

/// Bounded retries on TransportError with a configurable backoff schedule.
class RetryingFetcher : public PageFetcher {
  public:
    RetryingFetcher(PageFetcher& inner,
                    std::vector<std::chrono::duration<double>> backoff =
                        {std::chrono::seconds(1), std::chrono::seconds(2), std::chrono::seconds(4)},
                    std::function<void(std::chrono::duration<double>)> sleeper = {});
    SourcePage fetch_page(const HarvestQuery& query,
                          const std::optional<std::string>& cursor) override;
    std::size_t live_fetch_count() const override { return inner_.live_fetch_count(); }

  private:
    PageFetcher& inner_;
    std::vector<std::chrono::duration<double>> backoff_;
    std::function<void(std::chrono::duration<double>)> sleeper_;
};

/// On-disk response cache: one file per (source, query, cursor) request,
/// atomic write-then-rename. Cursor is re-derived from the cached payload.
class CachingFetcher : public PageFetcher {
  public:
    CachingFetcher(PageFetcher& inner, std::filesystem::path cache_dir);
    SourcePage fetch_page(const HarvestQuery& query,
                          const std::optional<std::string>& cursor) override;
    std::size_t live_fetch_count() const override { return inner_.live_fetch_count(); }
    std::size_t miss_count() const { return misses_; }

  private:
    PageFetcher& inner_;
    std::filesystem::path cache_dir_;
    std::size_t misses_ = 0;
};

// Per-source payload handling. parse_page yields records before filtering;
// payload_next_cursor extracts the continuation token live sources embed.
std::vector<STIRecord> parse_page(Source source, const std::string& payload);
std::optional<std::string> payload_next_cursor(Source source, const std::string& payload);

STIRecord parse_openalex_work(const nlohmann::json& work);
STIRecord parse_openaire_result(const nlohmann::json& result);
STIRecord parse_cordis_project(const nlohmann::json& joined_row);
STIRecord parse_kohesio_project(const std::map<std::string, std::string>& row);

/// Reconstructs plain text from an OpenAlex-style inverted abstract index.
std::string reconstruct_inverted_abstract(const nlohmann::json& inverted);

/// Drives pagination, parsing, and filtering for one source.
Corpus harvest(const HarvestQuery& query, PageFetcher& fetcher);

}  // namespace stimap::ingest
