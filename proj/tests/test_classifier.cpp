#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "stimap/classifier.hpp"
#include "stimap/core.hpp"
#include "stimap/vocab.hpp"

using namespace stimap;
using namespace stimap::classifier;

namespace {

const std::filesystem::path kFixtures = STIMAP_FIXTURE_DIR;

std::vector<STIRecord> load_sdg_fixture_records() {
    // The tagged subset is what the pipeline labels; recompute it here from
    // the bundled corpus and vocabulary.
    auto vocabulary = vocab::load_vocabulary(kFixtures / "vocab" / "sdg13_sample.json");
    Corpus corpus;
    for (Source source : all_sources()) {
        auto part = read_corpus_file(kFixtures / "corpus" /
                                     ("corpus_" + std::string(to_string(source)) + ".ndjson"));
        corpus.records.insert(corpus.records.end(), part.begin(), part.end());
    }
    auto outcome = vocab::tag_corpus(corpus, vocabulary);
    std::set<std::string> tagged;
    for (const auto& result : outcome.results)
        if (result.is_sdg13) tagged.insert(result.record_id);
    std::vector<STIRecord> records;
    for (auto& record : corpus.records)
        if (tagged.contains(record.record_id)) records.push_back(std::move(record));
    return records;
}

STIRecord text_record(std::string id, std::string body) {
    STIRecord r;
    r.record_id = std::move(id);
    r.title = "";
    r.body = std::move(body);
    return r;
}

}  // namespace

TEST_SUITE("classifier") {

TEST_CASE("panel table holds the 25 codes in canonical order") {
    CHECK(erc_panels().size() == 25);
    CHECK(panel_code(0) == "PE1");
    CHECK(panel_code(9) == "PE10");
    CHECK(panel_code(10) == "LS1");
    CHECK(panel_code(19) == "SH1");
    CHECK(panel_code(24) == "SH6");
    CHECK(panel_index("PE10") == 9);
    CHECK(panel_index("XX1") == -1);
    CHECK(erc_panels()[9].group == DomainGroup::PE);
    CHECK(erc_panels()[12].group == DomainGroup::LS);
    CHECK(erc_panels()[24].group == DomainGroup::SH);
}

TEST_CASE("seed lexicons load and reject gaps and overlaps") {
    auto lexicons = load_seed_lexicons(kFixtures / "lexicons" / "erc_panel_seeds.json");
    CHECK(lexicons.size() == 25);

    auto missing = lexicons;
    missing.erase("PE10");
    CHECK_THROWS_WITH_AS(validate_seed_lexicons(missing),
                         "seed lexicon is missing panel PE10", ConfigError);

    auto overlapping = lexicons;
    overlapping["PE1"].push_back(lexicons.at("PE2").front());
    CHECK_THROWS_AS(validate_seed_lexicons(overlapping), ConfigError);
}

TEST_CASE("weak labeling needs two distinct seeds and a strict plurality") {
    auto lexicons = load_seed_lexicons(kFixtures / "lexicons" / "erc_panel_seeds.json");
    std::vector<STIRecord> records = {
        text_record("r1", "We relate sedimentology to paleoclimate archives."),    // 2 PE10 seeds
        text_record("r2", "Sedimentology alone cannot settle the question."),      // 1 seed only
        text_record("r3", "Paleoclimate and sedimentology meet ecosystem dynamics "
                          "and species richness head on."),                        // 2 vs 2 tie
        text_record("r4", "Nothing relevant here."),
    };
    auto labels = weak_label(records, lexicons);
    REQUIRE(labels.contains("r1"));
    CHECK(labels.at("r1") == panel_index("PE10"));
    CHECK_FALSE(labels.contains("r2"));
    CHECK_FALSE(labels.contains("r3"));
    CHECK_FALSE(labels.contains("r4"));
}

TEST_CASE("weak labeling of the fixture subset matches the recorded counts") {
    auto lexicons = load_seed_lexicons(kFixtures / "lexicons" / "erc_panel_seeds.json");
    auto records = load_sdg_fixture_records();
    auto labels = weak_label(records, lexicons);

    nlohmann::json manifest;
    std::ifstream in(kFixtures / "manifest.json");
    in >> manifest;
    CHECK(labels.size() == manifest.at("weak_labels").at("labeled").get<std::size_t>());

    std::map<std::string, std::size_t> by_panel;
    for (const auto& [id, panel] : labels) ++by_panel[std::string(panel_code(panel))];
    for (const auto& [code, count] : manifest.at("weak_labels").at("by_panel").items()) {
        CAPTURE(code);
        CHECK(by_panel[code] == count.get<std::size_t>());
    }

    // The planted tie record stays unlabeled.
    CHECK_FALSE(labels.contains(manifest.at("examples").at("tie_record").get<std::string>()));

    auto again = weak_label(records, lexicons);
    CHECK(again == labels);
}

TEST_CASE("feature space applies min_df and the lexicographic tie break") {
    auto space = fit_feature_space({"a b", "b c"}, 2, 100);
    CHECK(space.tokens == std::vector<std::string>{"b"});

    auto capped = fit_feature_space({"a b", "b c"}, 1, 2);
    CHECK(capped.tokens == std::vector<std::string>{"a", "b"});

    CHECK_THROWS_AS(fit_feature_space({"a b", "c d"}, 2, 100), Error);
}

TEST_CASE("idf follows the smoothed formula") {
    auto space = fit_feature_space({"x y", "x z", "x w"}, 1, 100);
    auto idx = space.index.at("x");
    CHECK(space.idf(idx) == doctest::Approx(1.0));  // ln(4/4) + 1
    auto rare = space.index.at("y");
    CHECK(space.idf(rare) == doctest::Approx(std::log(4.0 / 2.0) + 1.0));
}

TEST_CASE("featurize yields unit vectors and ignores unknown tokens") {
    auto space = fit_feature_space({"x y", "x z", "x w"}, 1, 100);

    auto single = featurize(space, "x");
    REQUIRE(single.size() == 1);
    CHECK(single[0].second == doctest::Approx(1.0));

    CHECK(featurize(space, "unseen tokens only").empty());

    auto space2 = fit_feature_space({"p q", "p q"}, 1, 100);
    auto two = featurize(space2, "p q");
    REQUIRE(two.size() == 2);
    CHECK(two[0].second == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(two[1].second == doctest::Approx(1.0 / std::sqrt(2.0)));

    double norm_sq = 0.0;
    for (auto& [idx, value] : featurize(space, "x x y z z z"))
        norm_sq += value * value;
    CHECK(norm_sq == doctest::Approx(1.0));
}

TEST_CASE("analytic gradient matches central finite differences") {
    // Three examples, four features, three distinct panels.
    std::vector<Example> examples = {
        {{{0, 0.7}, {2, 0.3}}, panel_index("PE1")},
        {{{1, 0.9}, {3, 0.2}}, panel_index("LS4")},
        {{{0, 0.4}, {1, 0.4}, {2, 0.5}}, panel_index("SH2")},
    };
    const std::size_t dim = 4;
    const double l2 = 0.01;

    std::vector<double> weights(kPanelCount * dim);
    std::vector<double> bias(kPanelCount);
    std::mt19937_64 rng(17);
    auto uniform = [&] { return (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 0.8; };
    for (auto& w : weights) w = uniform();
    for (auto& b : bias) b = uniform();

    std::vector<double> grad(weights.size() + bias.size());
    loss_and_gradient(weights, bias, dim, examples, l2, grad);

    auto loss_at = [&](const std::vector<double>& w, const std::vector<double>& b) {
        return loss_and_gradient(w, b, dim, examples, l2, {});
    };

    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        auto w_plus = weights;
        auto w_minus = weights;
        auto b_plus = bias;
        auto b_minus = bias;
        if (i < weights.size()) {
            w_plus[i] += h;
            w_minus[i] -= h;
        } else {
            b_plus[i - weights.size()] += h;
            b_minus[i - weights.size()] -= h;
        }
        double fd = (loss_at(w_plus, b_plus) - loss_at(w_minus, b_minus)) / (2.0 * h);
        double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
        worst = std::max(worst, std::abs(fd - grad[i]) / denom);
    }
    CHECK(worst < 1e-6);

    // At zero weights the softmax is uniform; check one analytic value.
    std::fill(weights.begin(), weights.end(), 0.0);
    std::fill(bias.begin(), bias.end(), 0.0);
    loss_and_gradient(weights, bias, dim, examples, 0.0, grad);
    // d/db_c = mean(softmax_c - y_c) = 1/25 - count(label==c)/3
    double expected = 1.0 / 25.0 - 1.0 / 3.0;
    CHECK(grad[weights.size() + static_cast<std::size_t>(panel_index("PE1"))] ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("training separates a linearly separable toy set") {
    std::vector<Example> examples = {
        {{{0, 1.0}}, panel_index("PE1")},
        {{{1, 1.0}}, panel_index("LS1")},
    };
    TrainHyperparams hyper;
    hyper.epochs = 200;
    hyper.learning_rate = 0.5;
    hyper.l2 = 0.0;
    auto model = train(examples, 2, hyper);

    int correct = 0;
    for (const auto& example : examples) {
        auto dist = predict(model, example.x, 0.0);
        if (dist.assigned && *dist.assigned == example.label) ++correct;
    }
    CHECK(correct == 2);
    CHECK(model.loss_history.front() > model.final_loss);
}

TEST_CASE("huge l2 pins weights near zero and probabilities near uniform") {
    std::vector<Example> examples = {
        {{{0, 1.0}}, panel_index("PE1")},
        {{{1, 1.0}}, panel_index("LS1")},
    };
    TrainHyperparams hyper;
    hyper.epochs = 200;
    hyper.learning_rate = 1e-7;
    hyper.l2 = 1e6;
    auto model = train(examples, 2, hyper);

    TrainHyperparams free = hyper;
    free.learning_rate = 0.5;
    free.l2 = 0.0;
    auto unregularized = train(examples, 2, free);

    double max_w = 0.0, max_free = 0.0;
    for (double w : model.weights) max_w = std::max(max_w, std::abs(w));
    for (double w : unregularized.weights) max_free = std::max(max_free, std::abs(w));
    CHECK(max_w < 1e-3);
    CHECK(max_free > 10.0 * max_w);

    auto dist = predict(model, {{0, 1.0}}, 0.0);
    for (double p : dist.probabilities) CHECK(p == doctest::Approx(0.04).epsilon(0.05));
}

TEST_CASE("training demands two distinct labels and finite loss") {
    std::vector<Example> singular = {{{{0, 1.0}}, 3}, {{{1, 1.0}}, 3}};
    CHECK_THROWS_AS(train(singular, 2, {}), Error);
}

TEST_CASE("training loss is non-increasing at moderate learning rates") {
    auto records = load_sdg_fixture_records();
    auto lexicons = load_seed_lexicons(kFixtures / "lexicons" / "erc_panel_seeds.json");
    auto labels = weak_label(records, lexicons);
    std::vector<ClassifierBackend::LabeledText> texts;
    for (const auto& record : records) {
        auto it = labels.find(record.record_id);
        if (it != labels.end()) texts.push_back({record.text(), it->second});
    }
    REQUIRE(texts.size() >= 10);

    LinearSoftmaxBackend backend;
    TrainHyperparams hyper;
    hyper.epochs = 120;
    hyper.learning_rate = 0.5;
    hyper.l2 = 1e-4;
    backend.fit(texts, hyper, 2, 50000);
    const auto& history = backend.model().loss_history;
    for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1] + 1e-12);
    CHECK(backend.model().final_loss <= history.back() + 1e-12);
}

TEST_CASE("prediction follows the softmax contract") {
    PanelModel model;
    model.feature_dim = 2;
    model.weights.assign(kPanelCount * 2, 0.0);
    model.bias.assign(kPanelCount, 0.0);

    auto uniform = predict(model, {{0, 1.0}}, 0.05);
    for (double p : uniform.probabilities) CHECK(p == doctest::Approx(0.04).epsilon(1e-12));
    CHECK_FALSE(uniform.assigned.has_value());  // 0.04 < 0.05

    model.bias[static_cast<std::size_t>(panel_index("PE3"))] = 10.0;
    auto dominant = predict(model, {{0, 1.0}}, 0.05);
    REQUIRE(dominant.assigned.has_value());
    CHECK(panel_code(*dominant.assigned) == "PE3");

    double sum = 0.0;
    for (double p : dominant.probabilities) sum += p;
    CHECK(std::abs(sum - 1.0) < 1e-9);

    CHECK_THROWS_AS(predict(model, {{7, 1.0}}, 0.0), Error);
}

TEST_CASE("softmax is invariant to constant logit shifts") {
    PanelModel base;
    base.feature_dim = 1;
    base.weights.assign(kPanelCount, 0.0);
    base.bias.assign(kPanelCount, 0.0);
    std::mt19937_64 rng(3);
    for (auto& b : base.bias) b = static_cast<double>(rng() % 1000) / 250.0;

    PanelModel shifted = base;
    for (auto& b : shifted.bias) b += 17.5;

    auto p0 = predict(base, {{0, 1.0}}, 0.0);
    auto p1 = predict(shifted, {{0, 1.0}}, 0.0);
    for (std::size_t c = 0; c < kPanelCount; ++c)
        CHECK(std::abs(p0.probabilities[c] - p1.probabilities[c]) < 1e-12);
}

TEST_CASE("argmax ties break toward the lower panel code") {
    PanelModel model;
    model.feature_dim = 1;
    model.weights.assign(kPanelCount, 0.0);
    model.bias.assign(kPanelCount, 0.0);
    model.bias[static_cast<std::size_t>(panel_index("PE2"))] = 4.0;
    model.bias[static_cast<std::size_t>(panel_index("LS5"))] = 4.0;
    auto dist = predict(model, {}, 0.0);
    REQUIRE(dist.assigned.has_value());
    CHECK(panel_code(*dist.assigned) == "PE2");
}

TEST_CASE("model persistence round-trips bit-exactly") {
    std::vector<ClassifierBackend::LabeledText> texts = {
        {"offshore wind turbine blades and grid integration studies", panel_index("PE8")},
        {"paleoclimate archives from sedimentology cores", panel_index("PE10")},
        {"ecosystem dynamics of benthic food web communities", panel_index("LS8")},
        {"offshore turbine wakes and grid balancing practice", panel_index("PE8")},
        {"sedimentology of fjord archives under warming", panel_index("PE10")},
        {"food web responses and species richness gradients", panel_index("LS8")},
    };
    LinearSoftmaxBackend backend;
    TrainHyperparams hyper;
    hyper.epochs = 50;
    backend.fit(texts, hyper, 1, 1000);

    auto dir = std::filesystem::temp_directory_path() / "stimap_model_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "model.json";
    backend.save(path);
    auto loaded = LinearSoftmaxBackend::load(path);

    CHECK(loaded.model().weights == backend.model().weights);  // bitwise
    CHECK(loaded.model().bias == backend.model().bias);
    CHECK(loaded.feature_space().tokens == backend.feature_space().tokens);
    CHECK(loaded.feature_space().df == backend.feature_space().df);

    auto a = backend.score("r", "wind turbine wakes over benthic communities", 0.1);
    auto b = loaded.score("r", "wind turbine wakes over benthic communities", 0.1);
    for (std::size_t c = 0; c < kPanelCount; ++c)
        CHECK(a.probabilities[c] == b.probabilities[c]);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
