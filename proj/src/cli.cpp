#include "stimap/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stimap/classifier.hpp"
#include "stimap/embed.hpp"
#include "stimap/ingest.hpp"
#include "stimap/report.hpp"
#include "stimap/topics.hpp"
#include "stimap/vocab.hpp"

namespace stimap::cli {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string double_to_string(double value) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, ptr);
}

std::filesystem::path corpus_file(const PipelineConfig& config, Source source) {
    return config.output_dir / ("corpus_" + std::string(to_string(source)) + ".ndjson");
}

std::filesystem::path provenance_file(const PipelineConfig& config, Source source) {
    return config.output_dir / ("provenance_" + std::string(to_string(source)) + ".json");
}

std::filesystem::path marker_file(const PipelineConfig& config, const std::string& stage) {
    return config.output_dir / (".done_" + stage);
}

void write_marker(const PipelineConfig& config, const std::string& stage) {
    std::ofstream out(marker_file(config, stage), std::ios::binary);
    out << "ok\n";
}

void require_input(const std::filesystem::path& path, const std::string& producer) {
    if (!std::filesystem::exists(path))
        throw ConfigError("missing input " + path.string() + "; run '" + producer + "' first");
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

Corpus read_corpus_all(const PipelineConfig& config) {
    Corpus corpus;
    for (Source source : all_sources()) {
        auto path = corpus_file(config, source);
        require_input(path, "harvest");
        auto records = read_corpus_file(path);
        corpus.records.insert(corpus.records.end(), std::make_move_iterator(records.begin()),
                              std::make_move_iterator(records.end()));
    }
    return corpus;
}

std::filesystem::path tags_file(const PipelineConfig& config) {
    return config.output_dir / "tags.ndjson";
}

void write_tags_file(const std::filesystem::path& path, const std::vector<SDGTagResult>& results) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& result : results) {
        ordered_json j;
        j["record_id"] = result.record_id;
        auto terms = ordered_json::array();
        for (const auto& m : result.matched_terms)
            terms.push_back(ordered_json::array({m.term_id, m.begin, m.end}));
        j["matched_terms"] = std::move(terms);
        j["matched_rules"] = result.matched_rules;
        j["is_sdg13"] = result.is_sdg13;
        out << j.dump() << '\n';
    }
}

std::vector<SDGTagResult> read_tags_file(const std::filesystem::path& path) {
    require_input(path, "tag");
    std::ifstream in(path, std::ios::binary);
    std::vector<SDGTagResult> results;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        SDGTagResult result;
        result.record_id = j.at("record_id").get<std::string>();
        for (const auto& t : j.at("matched_terms"))
            result.matched_terms.push_back({t.at(0).get<std::string>(), t.at(1).get<std::size_t>(),
                                            t.at(2).get<std::size_t>()});
        result.matched_rules = j.at("matched_rules").get<std::vector<std::string>>();
        result.is_sdg13 = j.at("is_sdg13").get<bool>();
        results.push_back(std::move(result));
    }
    return results;
}

std::filesystem::path distributions_file(const PipelineConfig& config) {
    return config.output_dir / "distributions.ndjson";
}

void write_distributions_file(const std::filesystem::path& path,
                              const std::vector<classifier::PanelDistribution>& distributions) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& dist : distributions) {
        ordered_json j;
        j["record_id"] = dist.record_id;
        auto probs = ordered_json::array();
        for (double p : dist.probabilities) probs.push_back(double_to_string(p));
        j["probabilities"] = std::move(probs);
        j["assigned"] = dist.assigned ? ordered_json(std::string(classifier::panel_code(*dist.assigned)))
                                      : ordered_json(nullptr);
        out << j.dump() << '\n';
    }
}

std::vector<classifier::PanelDistribution> read_distributions_file(
    const std::filesystem::path& path) {
    require_input(path, "classify");
    std::ifstream in(path, std::ios::binary);
    std::vector<classifier::PanelDistribution> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        classifier::PanelDistribution dist;
        dist.record_id = j.at("record_id").get<std::string>();
        const auto& probs = j.at("probabilities");
        for (std::size_t c = 0; c < classifier::kPanelCount && c < probs.size(); ++c) {
            const std::string s = probs[c].get<std::string>();
            double v = 0.0;
            std::from_chars(s.data(), s.data() + s.size(), v);
            dist.probabilities[c] = v;
        }
        if (!j.at("assigned").is_null())
            dist.assigned = classifier::panel_index(j.at("assigned").get<std::string>());
        out.push_back(std::move(dist));
    }
    return out;
}

std::vector<const STIRecord*> sdg_records(const Corpus& corpus,
                                          const std::vector<SDGTagResult>& tags) {
    std::map<std::string_view, const STIRecord*> by_id;
    for (const auto& record : corpus.records) by_id[record.record_id] = &record;
    std::vector<const STIRecord*> out;
    for (const auto& tag : tags) {
        if (!tag.is_sdg13) continue;
        auto it = by_id.find(tag.record_id);
        if (it == by_id.end())
            throw Error("tag result references unknown record " + tag.record_id);
        out.push_back(it->second);
    }
    std::sort(out.begin(), out.end(),
              [](const STIRecord* a, const STIRecord* b) { return a->record_id < b->record_id; });
    return out;
}

report::SummaryTable build_summary(const Corpus& corpus, const std::vector<SDGTagResult>& tags) {
    std::map<std::string_view, Source> source_of;
    std::map<Source, vocab::SourceTagSummary> summaries;
    for (Source s : all_sources()) summaries[s];
    for (const auto& record : corpus.records) {
        source_of[record.record_id] = record.source;
        ++summaries[record.source].total;
    }
    for (const auto& tag : tags) {
        if (!tag.is_sdg13) continue;
        auto it = source_of.find(tag.record_id);
        if (it == source_of.end()) throw Error("tag result references unknown record " + tag.record_id);
        ++summaries[it->second].tagged;
    }
    return report::summary_table(summaries);
}

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%FT%TZ", std::gmtime(&t));
    return buffer;
}

}  // namespace

double PipelineConfig::effective_alpha() const {
    return alpha ? *alpha : 50.0 / static_cast<double>(topic_count);
}

PipelineConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw ConfigError("config file not found: " + path.string());
    json j;
    try {
        std::ifstream in(path, std::ios::binary);
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }

    PipelineConfig config;
    auto base = std::filesystem::absolute(path).parent_path();
    auto resolve = [&](const std::string& p) -> std::filesystem::path {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    try {
        if (!j.contains("sources") || j.at("sources").empty())
            throw ConfigError("config: no sources configured");
        for (const auto& [name, sj] : j.at("sources").items()) {
            Source source;
            try {
                source = source_from_string(name);
            } catch (const ParseError&) {
                throw ConfigError("config: unknown source '" + name + "'");
            }
            SourceConfig sc;
            if (sj.contains("mode")) sc.mode = sj.at("mode").get<std::string>();
            if (sc.mode != "fixture" && sc.mode != "http")
                throw ConfigError("config: source " + name + " has unknown mode '" + sc.mode + "'");
            if (sj.contains("fixture_dir")) sc.fixture_dir = resolve(sj.at("fixture_dir"));
            if (sj.contains("base_url")) sc.base_url = sj.at("base_url").get<std::string>();
            if (sj.contains("page_size")) sc.page_size = sj.at("page_size").get<std::size_t>();
            if (sj.contains("rate_per_sec")) sc.rate_per_sec = sj.at("rate_per_sec").get<double>();
            if (sj.contains("result_type")) sc.result_type = sj.at("result_type").get<std::string>();
            if (sc.mode == "fixture" && !std::filesystem::is_directory(sc.fixture_dir))
                throw ConfigError("config: fixture_dir for " + name + " does not exist: " +
                                  sc.fixture_dir.string());
            if (sc.mode == "http" && sc.base_url.empty())
                throw ConfigError("config: source " + name + " in http mode needs base_url");
            config.sources[source] = std::move(sc);
        }
        if (j.contains("filters")) {
            const auto& f = j.at("filters");
            if (f.contains("country_code")) config.country_code = f.at("country_code").get<std::string>();
            if (f.contains("year_from")) config.year_from = f.at("year_from").get<int>();
            if (f.contains("year_to")) config.year_to = f.at("year_to").get<int>();
            if (f.contains("max_records")) config.max_records = f.at("max_records").get<std::size_t>();
        }
        config.vocabulary_path = resolve(j.at("vocabulary_path").get<std::string>());
        config.lexicon_path = resolve(j.at("lexicon_path").get<std::string>());
        if (j.contains("classifier")) {
            const auto& c = j.at("classifier");
            if (c.contains("epochs")) config.epochs = c.at("epochs").get<int>();
            if (c.contains("learning_rate")) config.learning_rate = c.at("learning_rate").get<double>();
            if (c.contains("l2")) config.l2 = c.at("l2").get<double>();
            if (c.contains("min_df")) config.min_df = c.at("min_df").get<std::size_t>();
            if (c.contains("max_vocab")) config.max_vocab = c.at("max_vocab").get<std::size_t>();
            if (c.contains("threshold")) config.threshold = c.at("threshold").get<double>();
            if (c.contains("seed")) config.classifier_seed = c.at("seed").get<std::uint64_t>();
        }
        if (j.contains("topics")) {
            const auto& t = j.at("topics");
            if (t.contains("k")) config.topic_count = t.at("k").get<int>();
            if (t.contains("alpha")) config.alpha = t.at("alpha").get<double>();
            if (t.contains("beta")) config.beta = t.at("beta").get<double>();
            if (t.contains("sweeps")) config.sweeps = t.at("sweeps").get<int>();
            if (t.contains("seed")) config.topics_seed = t.at("seed").get<std::uint64_t>();
            if (t.contains("min_df")) config.topics_min_df = t.at("min_df").get<std::size_t>();
            if (t.contains("min_doc_len")) config.min_doc_len = t.at("min_doc_len").get<std::size_t>();
            if (t.contains("stopwords_path"))
                config.stopwords_path = resolve(t.at("stopwords_path").get<std::string>());
            if (t.contains("source"))
                config.topics_source = source_from_string(t.at("source").get<std::string>());
        }
        if (j.contains("embed")) {
            const auto& e = j.at("embed");
            if (e.contains("perplexity")) config.perplexity = e.at("perplexity").get<double>();
            if (e.contains("iterations")) config.iterations = e.at("iterations").get<int>();
            if (e.contains("learning_rate"))
                config.tsne_learning_rate = e.at("learning_rate").get<double>();
            if (e.contains("seed")) config.embed_seed = e.at("seed").get<std::uint64_t>();
        }
        config.output_dir = resolve(j.value("output_dir", "out"));
        config.cache_dir = resolve(j.value("cache_dir", "cache"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }

    if (config.year_from > config.year_to) throw ConfigError("config: year_from exceeds year_to");
    if (!std::filesystem::exists(config.vocabulary_path))
        throw ConfigError("config: vocabulary file does not exist: " +
                          config.vocabulary_path.string());
    if (!std::filesystem::exists(config.lexicon_path))
        throw ConfigError("config: lexicon file does not exist: " + config.lexicon_path.string());
    if (!config.stopwords_path.empty() && !std::filesystem::exists(config.stopwords_path))
        throw ConfigError("config: stopword file does not exist: " +
                          config.stopwords_path.string());
    if (config.epochs < 1 || config.learning_rate <= 0.0 || config.l2 < 0.0)
        throw ConfigError("config: classifier hyperparameters out of range");
    if (config.threshold < 0.0 || config.threshold > 1.0)
        throw ConfigError("config: classifier threshold must lie in [0, 1]");
    if (config.min_df < 1 || config.max_vocab < 1)
        throw ConfigError("config: classifier vocabulary limits out of range");
    if (config.topic_count < 1 || config.beta <= 0.0 || config.sweeps < 1 ||
        (config.alpha && *config.alpha <= 0.0))
        throw ConfigError("config: topic parameters out of range");
    if (config.topics_min_df < 1 || config.min_doc_len < 1)
        throw ConfigError("config: topic corpus filters out of range");
    if (config.perplexity <= 0.0 || config.iterations < 1 || config.tsne_learning_rate <= 0.0)
        throw ConfigError("config: embedding parameters out of range");
    return config;
}

void cmd_harvest(const PipelineConfig& config, const std::optional<Source>& only) {
    std::filesystem::create_directories(config.output_dir);
    for (Source source : all_sources()) {
        if (only && source != *only) continue;
        auto it = config.sources.find(source);
        if (it == config.sources.end())
            throw ConfigError("config has no entry for source " + std::string(to_string(source)));
        const SourceConfig& sc = it->second;

        ingest::HarvestQuery query;
        query.source = source;
        query.country_code = config.country_code;
        query.year_from = config.year_from;
        query.year_to = config.year_to;
        query.page_size = sc.page_size;
        query.max_records = config.max_records;

        Corpus corpus;
        bool live = sc.mode == "http";
        if (live && config.offline)
            throw ConfigError("source " + std::string(to_string(source)) +
                              " is in http mode but --offline was requested");
        if (live) {
            ingest::HttpFetcher http(sc.base_url, sc.rate_per_sec, sc.result_type);
            ingest::RetryingFetcher retrying(http);
            ingest::CachingFetcher caching(retrying, config.cache_dir);
            corpus = ingest::harvest(query, caching);
        } else {
            ingest::FixtureFetcher fixture(sc.fixture_dir);
            corpus = ingest::harvest(query, fixture);
        }

        write_corpus_file(corpus_file(config, source), corpus.records);
        const FetchMeta& meta = corpus.provenance.at(source);
        ordered_json prov;
        prov["timestamp"] = live ? now_iso8601() : "";
        prov["query"] = meta.query;
        prov["page_sizes"] = meta.page_sizes;
        prov["live_fetches"] = meta.live_fetches;
        write_text_file(provenance_file(config, source), prov.dump(2) + "\n");
        std::cout << to_string(source) << ": " << corpus.records.size() << " records across "
                  << meta.page_sizes.size() << " pages\n";
    }
    if (!only) write_marker(config, "harvest");
}

void cmd_tag(const PipelineConfig& config) {
    std::filesystem::create_directories(config.output_dir);
    Corpus corpus = read_corpus_all(config);
    vocab::Vocabulary vocabulary = vocab::load_vocabulary(config.vocabulary_path);
    vocab::TagOutcome outcome = vocab::tag_corpus(corpus, vocabulary);
    write_tags_file(tags_file(config), outcome.results);
    write_text_file(config.output_dir / "summary.csv",
                    report::summary_csv(report::summary_table(outcome.by_source)));
    std::size_t tagged = 0;
    for (const auto& [source, summary] : outcome.by_source) tagged += summary.tagged;
    std::cout << "tagged " << tagged << " of " << corpus.records.size() << " records\n";
    write_marker(config, "tag");
}

void cmd_classify(const PipelineConfig& config) {
    std::filesystem::create_directories(config.output_dir);
    Corpus corpus = read_corpus_all(config);
    auto tags = read_tags_file(tags_file(config));
    auto records = sdg_records(corpus, tags);
    classifier::SeedLexicons lexicons = classifier::load_seed_lexicons(config.lexicon_path);

    classifier::LinearSoftmaxBackend backend;
    auto model_path = config.output_dir / "model.json";
    if (std::filesystem::exists(model_path)) {
        backend = classifier::LinearSoftmaxBackend::load(model_path);
        std::cout << "reusing model " << model_path.string() << "\n";
    } else {
        std::vector<STIRecord> flat;
        flat.reserve(records.size());
        for (const STIRecord* r : records) flat.push_back(*r);
        auto labels = classifier::weak_label(flat, lexicons);
        std::vector<classifier::ClassifierBackend::LabeledText> examples;
        examples.reserve(labels.size());
        for (const STIRecord* r : records) {
            auto it = labels.find(r->record_id);
            if (it != labels.end()) examples.push_back({r->text(), it->second});
        }
        classifier::TrainHyperparams hyper;
        hyper.epochs = config.epochs;
        hyper.learning_rate = config.learning_rate;
        hyper.l2 = config.l2;
        hyper.seed = config.classifier_seed;
        backend.fit(examples, hyper, config.min_df, config.max_vocab);
        backend.save(model_path);
        std::cout << "trained on " << examples.size() << " weakly labeled records\n";
    }

    std::vector<classifier::PanelDistribution> distributions;
    distributions.reserve(records.size());
    for (const STIRecord* r : records)
        distributions.push_back(backend.score(r->record_id, r->text(), config.threshold));
    write_distributions_file(distributions_file(config), distributions);
    std::cout << "scored " << distributions.size() << " records\n";
    write_marker(config, "classify");
}

void cmd_topics(const PipelineConfig& config) {
    std::filesystem::create_directories(config.output_dir);
    Corpus corpus = read_corpus_all(config);
    auto tags = read_tags_file(tags_file(config));
    auto records = sdg_records(corpus, tags);

    std::vector<std::pair<std::string, std::string>> id_texts;
    for (const STIRecord* r : records) {
        if (config.topics_source && r->source != *config.topics_source) continue;
        id_texts.emplace_back(r->record_id, r->text());
    }
    std::set<std::string> stopwords;
    if (!config.stopwords_path.empty()) stopwords = topics::load_stopwords(config.stopwords_path);
    topics::BowCorpus bow =
        topics::build_bow(id_texts, stopwords, config.topics_min_df, config.min_doc_len);
    topics::TopicModel model = topics::lda_fit(bow, config.topic_count, config.effective_alpha(),
                                               config.beta, config.sweeps, config.topics_seed);
    topics::save_topic_model(config.output_dir / "topic_model.json", model);
    std::cout << "fitted " << model.k << " topics over " << model.doc_ids.size() << " documents ("
              << bow.dropped_doc_ids.size() << " dropped)\n";
    write_marker(config, "topics");
}

void cmd_embed(const PipelineConfig& config) {
    std::filesystem::create_directories(config.output_dir);
    auto model_path = config.output_dir / "topic_model.json";
    require_input(model_path, "topics");
    topics::TopicModel model = topics::load_topic_model(model_path);

    embed::AffinityMatrix affinities = embed::compute_affinities(model.theta, config.perplexity);
    embed::Layout2D layout =
        embed::tsne(affinities, config.iterations, config.tsne_learning_rate, config.embed_seed);
    std::vector<int> dominant;
    dominant.reserve(model.theta.size());
    for (std::size_t d = 0; d < model.theta.size(); ++d)
        dominant.push_back(topics::dominant_topic(model, d));
    embed::write_layout_csv(config.output_dir / "layout.csv", layout, model.doc_ids, dominant);
    std::cout << "layout of " << model.doc_ids.size() << " documents, final KL "
              << layout.final_kl << "\n";
    write_marker(config, "embed");
}

void cmd_report(const PipelineConfig& config) {
    std::filesystem::create_directories(config.output_dir);
    Corpus corpus = read_corpus_all(config);
    auto tags = read_tags_file(tags_file(config));
    auto distributions = read_distributions_file(distributions_file(config));
    auto layout_path = config.output_dir / "layout.csv";
    require_input(layout_path, "embed");
    auto model_path = config.output_dir / "topic_model.json";
    require_input(model_path, "topics");
    auto layout_rows = embed::read_layout_csv(layout_path);
    topics::TopicModel model = topics::load_topic_model(model_path);

    report::SummaryTable summary = build_summary(corpus, tags);
    write_text_file(config.output_dir / "summary.csv", report::summary_csv(summary));
    write_text_file(config.output_dir / "summary.md", report::summary_markdown(summary));

    std::map<std::string, Source> source_of;
    for (const auto& record : corpus.records) source_of[record.record_id] = record.source;
    report::PanelHistogram histogram = report::panel_histogram(distributions, source_of);
    write_text_file(config.output_dir / "panel_histogram.csv", report::histogram_csv(histogram));
    write_text_file(config.output_dir / "fig2_panels.svg", report::render_histogram(histogram));
    if (config.normalized_histogram)
        write_text_file(config.output_dir / "fig2_panels_normalized.svg",
                        report::render_histogram(histogram, true));

    embed::Layout2D layout;
    std::vector<std::string> ids;
    std::vector<int> dominant;
    for (const auto& row : layout_rows) {
        layout.coordinates.push_back({row.x, row.y});
        ids.push_back(row.record_id);
        dominant.push_back(row.dominant_topic);
    }
    std::vector<std::vector<std::string>> top_words;
    top_words.reserve(static_cast<std::size_t>(model.k));
    for (int t = 0; t < model.k; ++t) top_words.push_back(topics::top_words(model, t, 3));
    write_text_file(config.output_dir / "fig1_topics.svg",
                    report::render_scatter(layout, dominant, report::default_palette(), top_words,
                                           ids));
    std::cout << "report written to " << config.output_dir.string() << "\n";
    write_marker(config, "report");
}

std::vector<std::string> cmd_pipeline(const PipelineConfig& config) {
    std::filesystem::create_directories(config.output_dir);
    struct Stage {
        const char* name;
        std::function<void()> run;
    };
    const std::vector<Stage> stages = {
        {"harvest", [&] { cmd_harvest(config); }}, {"tag", [&] { cmd_tag(config); }},
        {"classify", [&] { cmd_classify(config); }}, {"topics", [&] { cmd_topics(config); }},
        {"embed", [&] { cmd_embed(config); }},     {"report", [&] { cmd_report(config); }},
    };
    std::vector<std::string> executed;
    for (const auto& stage : stages) {
        if (std::filesystem::exists(marker_file(config, stage.name))) {
            std::cout << "skipping completed stage " << stage.name << "\n";
            continue;
        }
        stage.run();
        executed.emplace_back(stage.name);
    }
    return executed;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"Research landscape mapper: harvests open scholarly and project records, "
                 "tags them against a controlled vocabulary, classifies them into ERC panels, "
                 "extracts topics, and renders summary outputs"};
    app.require_subcommand(1);

    std::string config_path;
    const char* env_config = std::getenv("STI_MAPPER_CONFIG");
    if (env_config) config_path = env_config;

    std::string source_name;
    std::optional<std::uint64_t> seed_override;
    std::string output_override;
    bool offline = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Path to the pipeline config JSON")
            ->envname("STI_MAPPER_CONFIG");
        cmd->add_option("--output", output_override, "Override the configured output directory");
        cmd->add_flag("--offline", offline, "Refuse any live HTTP access");
        return cmd;
    };

    auto* harvest_cmd = add_common(app.add_subcommand("harvest", "Fetch records from the sources"));
    harvest_cmd->add_option("--source", source_name, "Harvest only this source");
    auto* tag_cmd = add_common(app.add_subcommand("tag", "Tag records against the vocabulary"));
    auto* classify_cmd =
        add_common(app.add_subcommand("classify", "Assign ERC panel distributions"));
    auto* topics_cmd = add_common(app.add_subcommand("topics", "Fit the topic model"));
    topics_cmd->add_option("--source", source_name, "Fit topics on records of this source only");
    topics_cmd->add_option("--seed", seed_override, "Override the topic-model seed");
    auto* embed_cmd = add_common(app.add_subcommand("embed", "Project documents to 2-D"));
    embed_cmd->add_option("--seed", seed_override, "Override the embedding seed");
    bool normalized = false;
    auto* report_cmd = add_common(app.add_subcommand("report", "Render tables and figures"));
    report_cmd->add_flag("--normalized", normalized,
                         "Also write the per-source normalized panel figure");
    auto* pipeline_cmd = add_common(app.add_subcommand("pipeline", "Run every stage in order"));
    pipeline_cmd->add_option("--seed", seed_override, "Override topic and embedding seeds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (config_path.empty())
            throw ConfigError("no config given: pass --config or set STI_MAPPER_CONFIG");
        PipelineConfig config = load_config(config_path);
        if (!output_override.empty())
            config.output_dir = std::filesystem::absolute(output_override);
        if (offline) config.offline = true;
        if (normalized) config.normalized_histogram = true;
        if (seed_override) {
            config.topics_seed = *seed_override;
            config.embed_seed = *seed_override;
        }

        std::optional<Source> source;
        if (!source_name.empty()) {
            try {
                source = source_from_string(source_name);
            } catch (const ParseError&) {
                throw ConfigError("unknown source '" + source_name + "'");
            }
        }
        if (source && *topics_cmd) config.topics_source = source;

        if (*harvest_cmd) cmd_harvest(config, source);
        if (*tag_cmd) cmd_tag(config);
        if (*classify_cmd) cmd_classify(config);
        if (*topics_cmd) cmd_topics(config);
        if (*embed_cmd) cmd_embed(config);
        if (*report_cmd) cmd_report(config);
        if (*pipeline_cmd) cmd_pipeline(config);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace stimap::cli
