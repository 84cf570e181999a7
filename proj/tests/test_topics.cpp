#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "stimap/core.hpp"
#include "stimap/topics.hpp"
#include "stimap/vocab.hpp"

using namespace stimap;
using namespace stimap::topics;

namespace {

const std::filesystem::path kFixtures = STIMAP_FIXTURE_DIR;

BowCorpus toy_bow() {
    // Two documents over a two-word vocabulary: [w0 w1], [w0 w1].
    BowCorpus bow;
    bow.vocabulary = {"alpha", "bravo"};
    bow.documents = {{0, 1}, {0, 1}};
    bow.doc_ids = {"d0", "d1"};
    return bow;
}

// Exact collapsed joint p(z) over all K^T assignment states, via the
// Dirichlet-multinomial integrals evaluated with lgamma.
std::vector<double> enumerate_posterior(const BowCorpus& bow, int k, double alpha, double beta) {
    std::size_t total_tokens = 0;
    for (const auto& doc : bow.documents) total_tokens += doc.size();
    const std::size_t v = bow.vocabulary.size();
    const std::size_t d_count = bow.documents.size();
    std::size_t states = 1;
    for (std::size_t i = 0; i < total_tokens; ++i) states *= static_cast<std::size_t>(k);

    std::vector<double> log_p(states);
    for (std::size_t state = 0; state < states; ++state) {
        std::vector<std::vector<int>> n_dk(d_count, std::vector<int>(k, 0));
        std::vector<std::vector<int>> n_kw(k, std::vector<int>(v, 0));
        std::vector<int> n_k(k, 0);
        std::size_t code = state;
        for (std::size_t d = 0; d < d_count; ++d) {
            for (int word : bow.documents[d]) {
                int topic = static_cast<int>(code % static_cast<std::size_t>(k));
                code /= static_cast<std::size_t>(k);
                ++n_dk[d][topic];
                ++n_kw[topic][static_cast<std::size_t>(word)];
                ++n_k[topic];
            }
        }
        double lp = 0.0;
        for (std::size_t d = 0; d < d_count; ++d) {
            for (int t = 0; t < k; ++t) lp += std::lgamma(n_dk[d][t] + alpha) - std::lgamma(alpha);
        }
        for (int t = 0; t < k; ++t) {
            lp += std::lgamma(static_cast<double>(v) * beta) -
                  std::lgamma(n_k[t] + static_cast<double>(v) * beta);
            for (std::size_t w = 0; w < v; ++w)
                lp += std::lgamma(n_kw[t][w] + beta) - std::lgamma(beta);
        }
        log_p[state] = lp;
    }
    double max_lp = *std::max_element(log_p.begin(), log_p.end());
    double total = 0.0;
    for (double lp : log_p) total += std::exp(lp - max_lp);
    std::vector<double> p(states);
    for (std::size_t s = 0; s < states; ++s) p[s] = std::exp(log_p[s] - max_lp) / total;
    return p;
}

std::size_t state_of(const TopicModel& model, int k) {
    std::size_t code = 0;
    std::size_t factor = 1;
    for (const auto& doc : model.assignments) {
        for (int topic : doc) {
            code += factor * static_cast<std::size_t>(topic);
            factor *= static_cast<std::size_t>(k);
        }
    }
    return code;
}

}  // namespace

TEST_SUITE("topics") {

TEST_CASE("build_bow applies stopwords, length, df, and document filters") {
    auto bow = build_bow({{"d0", "the climate model"}, {"d1", "climate policy debate"}},
                         {"the"}, 1, 1);
    CHECK(bow.vocabulary == std::vector<std::string>{"climate", "model", "policy", "debate"});
    REQUIRE(bow.documents.size() == 2);
    CHECK(bow.documents[0] == std::vector<int>{0, 1});
    CHECK(bow.documents[1] == std::vector<int>{0, 2, 3});

    auto short_tokens = build_bow({{"d0", "co2 ab climate co2"}}, {}, 1, 1);
    CHECK(short_tokens.vocabulary == std::vector<std::string>{"co2", "climate"});

    CHECK_THROWS_AS(build_bow({{"d0", "ab xy"}}, {}, 1, 1), Error);
    CHECK_THROWS_AS(build_bow({{"d0", "solitary words here"}}, {}, 1, 10), Error);
}

TEST_CASE("build_bow drops rare tokens and reports dropped documents") {
    auto bow = build_bow({{"d0", "shared shared unique"}, {"d1", "shared other"}}, {}, 2, 1);
    CHECK(bow.vocabulary == std::vector<std::string>{"shared"});
    CHECK(bow.documents == std::vector<std::vector<int>>{{0, 0}, {0}});

    auto dropped = build_bow({{"d0", "alpha beta gamma"}, {"d1", "alpha beta gamma"},
                              {"d2", "delta epsilon"}},
                             {}, 2, 2);
    CHECK(dropped.doc_ids == std::vector<std::string>{"d0", "d1"});
    CHECK(dropped.dropped_doc_ids == std::vector<std::string>{"d2"});
    // Tokens living only in dropped documents stay out of the vocabulary.
    CHECK(dropped.vocabulary == std::vector<std::string>{"alpha", "beta", "gamma"});
}

TEST_CASE("the fixture corpus bow matches the recorded statistics") {
    auto vocabulary = vocab::load_vocabulary(kFixtures / "vocab" / "sdg13_sample.json");
    Corpus corpus;
    for (Source source : all_sources()) {
        auto part = read_corpus_file(kFixtures / "corpus" /
                                     ("corpus_" + std::string(to_string(source)) + ".ndjson"));
        corpus.records.insert(corpus.records.end(), part.begin(), part.end());
    }
    auto outcome = vocab::tag_corpus(corpus, vocabulary);
    std::map<std::string, const STIRecord*> by_id;
    for (const auto& record : corpus.records) by_id[record.record_id] = &record;
    std::vector<std::pair<std::string, std::string>> id_texts;
    for (const auto& result : outcome.results)
        if (result.is_sdg13) id_texts.emplace_back(result.record_id, by_id.at(result.record_id)->text());

    auto stopwords = load_stopwords(kFixtures / "stopwords_en.txt");
    auto bow = build_bow(id_texts, stopwords, 2, 3);

    nlohmann::json manifest;
    std::ifstream in(kFixtures / "manifest.json");
    in >> manifest;
    CHECK(bow.vocabulary.size() == manifest.at("bow").at("vocabulary_size").get<std::size_t>());
    CHECK(bow.documents.size() == manifest.at("bow").at("documents").get<std::size_t>());
}

TEST_CASE("single-token corpus forces the degenerate posterior") {
    BowCorpus bow;
    bow.vocabulary = {"only"};
    bow.documents = {{0}};
    bow.doc_ids = {"d0"};
    auto model = lda_fit(bow, 1, 0.5, 0.5, 5, 7);
    CHECK(model.theta == std::vector<std::vector<double>>{{1.0}});
    CHECK(model.phi == std::vector<std::vector<double>>{{1.0}});
}

TEST_CASE("k equal to one recovers smoothed corpus frequencies") {
    auto bow = toy_bow();
    double beta = 0.25;
    auto model = lda_fit(bow, 1, 0.7, beta, 3, 99);
    for (const auto& row : model.theta) CHECK(row == std::vector<double>{1.0});
    // phi_w = (n_w + beta) / (N + V beta), with two occurrences of each word.
    double expected = (2.0 + beta) / (4.0 + 2.0 * beta);
    CHECK(model.phi[0][0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(model.phi[0][1] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("lda rejects impossible configurations") {
    auto bow = toy_bow();
    CHECK_THROWS_AS(lda_fit(bow, 9, 0.5, 0.5, 2, 1), Error);   // k > token count
    CHECK_THROWS_AS(lda_fit(bow, 0, 0.5, 0.5, 2, 1), Error);
    CHECK_THROWS_AS(lda_fit(bow, 2, -0.5, 0.5, 2, 1), Error);
    CHECK_THROWS_AS(lda_fit(bow, 2, 0.5, 0.5, 0, 1), Error);
}

TEST_CASE("counts are conserved after every sweep") {
    auto bow = build_bow({{"d0", "wind turbine rotor wind grid"},
                          {"d1", "turbine grid balancing rotor rotor"},
                          {"d2", "wind balancing grid turbine rotor wind"}},
                         {}, 1, 1);
    int checks = 0;
    auto observer = [&](int, const GibbsCounts& counts) {
        for (std::size_t d = 0; d < bow.documents.size(); ++d) {
            int sum = std::accumulate(counts.doc_topic[d].begin(), counts.doc_topic[d].end(), 0);
            CHECK(sum == counts.doc_total[d]);
            CHECK(static_cast<std::size_t>(counts.doc_total[d]) == bow.documents[d].size());
        }
        for (std::size_t t = 0; t < counts.topic_word.size(); ++t) {
            int sum = std::accumulate(counts.topic_word[t].begin(), counts.topic_word[t].end(), 0);
            CHECK(sum == counts.topic_total[t]);
        }
        ++checks;
    };
    lda_fit(bow, 3, 0.5, 0.1, 8, 42, observer);
    CHECK(checks == 8);
}

TEST_CASE("phi and theta rows are positive simplex vectors") {
    auto bow = build_bow({{"d0", "wind turbine rotor wind grid"},
                          {"d1", "turbine grid balancing rotor rotor"},
                          {"d2", "wind balancing grid turbine rotor wind"}},
                         {}, 1, 1);
    auto model = lda_fit(bow, 4, 0.3, 0.05, 20, 5);
    for (const auto& row : model.phi) {
        double sum = std::accumulate(row.begin(), row.end(), 0.0);
        CHECK(std::abs(sum - 1.0) < 1e-9);
        for (double p : row) CHECK(p > 0.0);
    }
    for (const auto& row : model.theta) {
        double sum = std::accumulate(row.begin(), row.end(), 0.0);
        CHECK(std::abs(sum - 1.0) < 1e-9);
        for (double p : row) CHECK(p > 0.0);
    }
}

TEST_CASE("equal seeds give bit-identical models") {
    auto bow = build_bow({{"d0", "wind turbine rotor wind grid"},
                          {"d1", "turbine grid balancing rotor rotor"}},
                         {}, 1, 1);
    auto a = lda_fit(bow, 3, 0.5, 0.1, 50, 1234);
    auto b = lda_fit(bow, 3, 0.5, 0.1, 50, 1234);
    CHECK(a.phi == b.phi);
    CHECK(a.theta == b.theta);
    CHECK(a.assignments == b.assignments);
    auto c = lda_fit(bow, 3, 0.5, 0.1, 50, 1235);
    CHECK(c.assignments != a.assignments);
}

TEST_CASE("gibbs visit frequencies match the enumerated posterior") {
    auto bow = toy_bow();
    const int k = 2;
    const double alpha = 0.5, beta = 0.5;
    auto exact = enumerate_posterior(bow, k, alpha, beta);
    REQUIRE(exact.size() == 16);

    const int runs = 2000;
    std::vector<double> freq(16, 0.0);
    for (int seed = 0; seed < runs; ++seed) {
        auto model = lda_fit(bow, k, alpha, beta, 10, static_cast<std::uint64_t>(seed));
        freq[state_of(model, k)] += 1.0 / runs;
    }
    for (std::size_t s = 0; s < 16; ++s) {
        CAPTURE(s);
        CHECK(std::abs(freq[s] - exact[s]) < 0.04);
    }
}

TEST_CASE("top words order by phi with lexicographic ties") {
    TopicModel model;
    model.k = 1;
    model.vocabulary = {"zeta", "alpha", "mid"};
    model.phi = {{0.4, 0.4, 0.2}};
    model.theta = {{1.0}};
    CHECK(top_words(model, 0, 2) == std::vector<std::string>{"alpha", "zeta"});
    CHECK(top_words(model, 0, 10) == std::vector<std::string>{"alpha", "zeta", "mid"});
    CHECK_THROWS_AS(top_words(model, 3, 1), Error);
}

TEST_CASE("dominant topic takes the argmax with low-index ties") {
    TopicModel model;
    model.k = 3;
    model.theta = {{0.1, 0.8, 0.1}, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
    CHECK(dominant_topic(model, 0) == 1);
    CHECK(dominant_topic(model, 1) == 0);
    CHECK_THROWS_AS(dominant_topic(model, 2), Error);
}

TEST_CASE("topic models persist losslessly") {
    auto bow = build_bow({{"d0", "wind turbine rotor wind grid"},
                          {"d1", "turbine grid balancing rotor rotor"}},
                         {}, 1, 1);
    auto model = lda_fit(bow, 3, 0.5, 0.1, 25, 77);
    auto dir = std::filesystem::temp_directory_path() / "stimap_topics_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "model.json";
    save_topic_model(path, model);
    auto loaded = load_topic_model(path);
    CHECK(loaded.phi == model.phi);  // bitwise through decimal strings
    CHECK(loaded.theta == model.theta);
    CHECK(loaded.assignments == model.assignments);
    CHECK(loaded.vocabulary == model.vocabulary);
    CHECK(loaded.doc_ids == model.doc_ids);
    CHECK(loaded.alpha == model.alpha);
    CHECK(loaded.seed == model.seed);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
