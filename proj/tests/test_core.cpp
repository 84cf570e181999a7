#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "stimap/core.hpp"
#include "stimap/rng.hpp"

using namespace stimap;

TEST_SUITE("core") {

TEST_CASE("normalize_doi strips prefixes and lowercases") {
    CHECK(normalize_doi("https://doi.org/10.1000/ABC") == "10.1000/abc");
    CHECK(normalize_doi("10.1000/xyz") == "10.1000/xyz");
    CHECK(normalize_doi("not a doi") == std::nullopt);
    CHECK(normalize_doi("  doi:10.5555/X1  ") == "10.5555/x1");
    CHECK(normalize_doi("") == std::nullopt);
    CHECK(normalize_doi("10.12/short-registrant") == std::nullopt);
}

TEST_CASE("normalize_doi is idempotent") {
    std::mt19937_64 rng(7);
    const std::string pool = "abcXYZ0123456789./:- ";
    for (int i = 0; i < 500; ++i) {
        std::string s;
        if (rng() % 3 == 0) s += "https://doi.org/10.";
        auto len = rng() % 30;
        for (std::size_t c = 0; c < len; ++c) s += pool[rng() % pool.size()];
        auto once = normalize_doi(s);
        if (once) {
            auto twice = normalize_doi(*once);
            REQUIRE(twice.has_value());
            CHECK(*twice == *once);
        }
    }
}

TEST_CASE("share reproduces the per-source percentages") {
    CHECK(share(3821, 191399) == doctest::Approx(2.0));
    CHECK(share(5273, 235906) == doctest::Approx(2.2));
    CHECK(share(320, 2196) == doctest::Approx(14.6));
    CHECK(share(14, 294) == doctest::Approx(4.8));
    CHECK(share(0, 100) == doctest::Approx(0.0));
    CHECK(share(1, 1) == doctest::Approx(100.0));
}

TEST_CASE("share rejects bad input") {
    CHECK_THROWS_AS(share(1, 0), std::domain_error);
    CHECK_THROWS_AS(share(5, 4), std::domain_error);
}

TEST_CASE("share halves sum to roughly one hundred") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        std::uint64_t b = 1 + rng() % 1000000;
        std::uint64_t a = rng() % (b + 1);
        double total = share(a, b) + share(b - a, b);
        CHECK(total >= 99.9);
        CHECK(total <= 100.1);
    }
}

TEST_CASE("record text joins title and body with a newline") {
    STIRecord r;
    r.title = "Title";
    r.body = "Body";
    CHECK(r.text() == "Title\nBody");
    r.body.clear();
    CHECK(r.text() == "Title\n");
}

TEST_CASE("corpus validation rejects duplicate ids and bad page sums") {
    Corpus corpus;
    STIRecord a;
    a.record_id = "openalex:W1";
    a.source = Source::OpenAlex;
    corpus.records.push_back(a);
    corpus.records.push_back(a);
    CHECK_THROWS_AS(corpus.validate(), Error);

    corpus.records.pop_back();
    corpus.provenance[Source::OpenAlex].page_sizes = {2};
    CHECK_THROWS_AS(corpus.validate(), Error);
    corpus.provenance[Source::OpenAlex].page_sizes = {1};
    CHECK_NOTHROW(corpus.validate());
}

namespace {

STIRecord sample_record(std::mt19937_64& rng) {
    static const std::vector<std::string> words = {"climate", "wind",  "fjord", "Aarhus",
                                                   "énergie", "delta", "Øresund"};
    STIRecord r;
    r.record_id = "openalex:W" + std::to_string(rng());
    r.source = Source::OpenAlex;
    r.kind = rng() % 2 ? RecordKind::Publication : RecordKind::Project;
    for (int i = 0; i < 4; ++i) r.title += (i ? " " : "") + words[rng() % words.size()];
    for (int i = 0; i < 9; ++i) r.body += (i ? " " : "") + words[rng() % words.size()];
    r.year = 2014 + static_cast<int>(rng() % 6);
    r.country_codes = {"DK"};
    if (rng() % 2) r.country_codes.insert("SE");
    if (rng() % 2) r.doi = "10.1234/x" + std::to_string(rng() % 1000);
    return r;
}

}  // namespace

TEST_CASE("corpus files round-trip byte-identically") {
    std::mt19937_64 rng(3);
    std::vector<STIRecord> records;
    for (int i = 0; i < 40; ++i) records.push_back(sample_record(rng));

    auto dir = std::filesystem::temp_directory_path() / "stimap_core_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "corpus.ndjson";
    write_corpus_file(path, records);

    auto read_back = read_corpus_file(path);
    REQUIRE(read_back.size() == records.size());
    CHECK(read_back == records);

    auto second = dir / "corpus2.ndjson";
    write_corpus_file(second, read_back);
    std::ifstream f1(path, std::ios::binary), f2(second, std::ios::binary);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    std::filesystem::remove_all(dir);
}

TEST_CASE("the seeded generator is pinned across platforms") {
    // mt19937_64 output is standardized and the samplers use it directly, so
    // these values must never change; seeded artifacts depend on them.
    Rng r(42);
    CHECK(r.uniform() == doctest::Approx(0.75515553295453897).epsilon(1e-15));
    CHECK(r.uniform() == doctest::Approx(0.63903139385469743).epsilon(1e-15));
    CHECK(r.uniform() == doctest::Approx(0.7521452007480266).epsilon(1e-15));
    Rng g(42);
    CHECK(g.gaussian() == doctest::Approx(-0.48121769980184498).epsilon(1e-15));
    Rng h(7);
    CHECK(h.uniform_int(30) == 22);
    CHECK(h.uniform_int(30) == 28);
    CHECK(h.uniform_int(30) == 3);
    CHECK(h.uniform_int(30) == 26);
}

TEST_CASE("corpus reader reports malformed lines") {
    CHECK_THROWS_AS(record_from_json_line("{oops"), ParseError);
    CHECK_THROWS_AS(record_from_json_line("{\"record_id\":\"x\"}"), ParseError);
    CHECK_THROWS_AS(record_from_json_line(
                        R"({"record_id":"x","source":"nope","kind":"publication","title":"","body":"","year":2014,"country_codes":[]})"),
                    ParseError);
}

}  // TEST_SUITE
