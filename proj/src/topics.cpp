#include "stimap/topics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "stimap/rng.hpp"
#include "stimap/vocab.hpp"

namespace stimap::topics {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> tokenize(std::string_view text) {
    std::string normalized = vocab::normalize_text(text).text;
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start < normalized.size()) {
        auto end = normalized.find(' ', start);
        if (end == std::string::npos) end = normalized.size();
        if (end > start) tokens.push_back(normalized.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

std::size_t codepoint_count(std::string_view token) {
    std::size_t count = 0;
    for (unsigned char c : token)
        if ((c & 0xC0) != 0x80) ++count;
    return count;
}

std::string double_to_string(double value) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, ptr);
}

double double_from_string(const std::string& text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ParseError("bad decimal string in topic model file: '" + text + "'");
    return value;
}

std::vector<std::vector<std::string>> matrix_to_strings(const std::vector<std::vector<double>>& m) {
    std::vector<std::vector<std::string>> out;
    out.reserve(m.size());
    for (const auto& row : m) {
        std::vector<std::string> r;
        r.reserve(row.size());
        for (double v : row) r.push_back(double_to_string(v));
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<std::vector<double>> matrix_from_strings(const nlohmann::json& j) {
    std::vector<std::vector<double>> out;
    for (const auto& row : j) {
        std::vector<double> r;
        r.reserve(row.size());
        for (const auto& v : row) r.push_back(double_from_string(v.get<std::string>()));
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open stopword file: " + path.string());
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty() && line.front() != '#') words.insert(line);
    }
    return words;
}

BowCorpus build_bow(const std::vector<std::pair<std::string, std::string>>& id_texts,
                    const std::set<std::string>& stopwords, std::size_t min_df,
                    std::size_t min_doc_len) {
    if (id_texts.empty()) throw Error("build_bow: no input texts");

    std::vector<std::vector<std::string>> tokenized;
    tokenized.reserve(id_texts.size());
    std::map<std::string, std::size_t> df;
    for (const auto& [id, text] : id_texts) {
        std::vector<std::string> kept;
        for (auto& token : tokenize(text)) {
            if (stopwords.contains(token)) continue;
            if (codepoint_count(token) < 3) continue;
            kept.push_back(std::move(token));
        }
        std::set<std::string> distinct(kept.begin(), kept.end());
        for (const auto& token : distinct) ++df[token];
        tokenized.push_back(std::move(kept));
    }

    BowCorpus bow;
    bow.min_df = min_df;
    bow.stopwords_applied = stopwords.size();
    // Pass 1: apply the df cutoff and decide which documents survive, so the
    // vocabulary holds no tokens that occur only in dropped documents.
    std::vector<std::vector<std::string>> surviving;
    for (std::size_t d = 0; d < tokenized.size(); ++d) {
        std::vector<std::string> kept;
        for (auto& token : tokenized[d])
            if (df[token] >= min_df) kept.push_back(std::move(token));
        if (kept.size() < min_doc_len) {
            bow.dropped_doc_ids.push_back(id_texts[d].first);
        } else {
            surviving.push_back(std::move(kept));
            bow.doc_ids.push_back(id_texts[d].first);
        }
    }
    // Pass 2: indices in first-appearance order across surviving documents.
    std::map<std::string, int> index;
    for (auto& kept : surviving) {
        std::vector<int> doc;
        doc.reserve(kept.size());
        for (auto& token : kept) {
            auto it = index.find(token);
            if (it == index.end()) {
                it = index.emplace(token, static_cast<int>(bow.vocabulary.size())).first;
                bow.vocabulary.push_back(token);
            }
            doc.push_back(it->second);
        }
        bow.documents.push_back(std::move(doc));
    }
    if (bow.documents.empty())
        throw Error("build_bow: no document survived filtering (min_df=" + std::to_string(min_df) +
                    ", min_doc_len=" + std::to_string(min_doc_len) + ")");
    return bow;
}

TopicModel lda_fit(const BowCorpus& bow, int k, double alpha, double beta, int sweeps,
                   std::uint64_t seed, const SweepObserver& observer) {
    if (k < 1) throw Error("lda_fit: k must be at least 1");
    if (alpha <= 0.0 || beta <= 0.0) throw Error("lda_fit: alpha and beta must be positive");
    if (sweeps < 1) throw Error("lda_fit: sweeps must be at least 1");
    std::size_t total_tokens = 0;
    for (const auto& doc : bow.documents) total_tokens += doc.size();
    if (static_cast<std::size_t>(k) > total_tokens)
        throw Error("lda_fit: k (" + std::to_string(k) + ") exceeds total token count (" +
                    std::to_string(total_tokens) + ")");

    const auto d_count = bow.documents.size();
    const auto v_count = bow.vocabulary.size();
    const auto k_count = static_cast<std::size_t>(k);

    GibbsCounts counts;
    counts.doc_topic.assign(d_count, std::vector<int>(k_count, 0));
    counts.topic_word.assign(k_count, std::vector<int>(v_count, 0));
    counts.topic_total.assign(k_count, 0);
    counts.doc_total.assign(d_count, 0);

    Rng rng(seed);
    std::vector<std::vector<int>> z(d_count);
    for (std::size_t d = 0; d < d_count; ++d) {
        z[d].resize(bow.documents[d].size());
        for (std::size_t i = 0; i < bow.documents[d].size(); ++i) {
            auto topic = static_cast<int>(rng.uniform_int(k_count));
            z[d][i] = topic;
            int word = bow.documents[d][i];
            ++counts.doc_topic[d][static_cast<std::size_t>(topic)];
            ++counts.topic_word[static_cast<std::size_t>(topic)][static_cast<std::size_t>(word)];
            ++counts.topic_total[static_cast<std::size_t>(topic)];
            ++counts.doc_total[d];
        }
    }

    const double v_beta = static_cast<double>(v_count) * beta;
    std::vector<double> weights(k_count);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (std::size_t d = 0; d < d_count; ++d) {
            for (std::size_t i = 0; i < bow.documents[d].size(); ++i) {
                int word = bow.documents[d][i];
                auto old_topic = static_cast<std::size_t>(z[d][i]);
                // Counts exclude the token being resampled.
                --counts.doc_topic[d][old_topic];
                --counts.topic_word[old_topic][static_cast<std::size_t>(word)];
                --counts.topic_total[old_topic];

                double total = 0.0;
                for (std::size_t t = 0; t < k_count; ++t) {
                    double w = (counts.doc_topic[d][t] + alpha) *
                               (counts.topic_word[t][static_cast<std::size_t>(word)] + beta) /
                               (counts.topic_total[t] + v_beta);
                    weights[t] = w;
                    total += w;
                }
                double u = rng.uniform() * total;
                std::size_t new_topic = 0;
                double cumulative = 0.0;
                for (std::size_t t = 0; t < k_count; ++t) {
                    cumulative += weights[t];
                    if (u < cumulative) {
                        new_topic = t;
                        break;
                    }
                    new_topic = t;  // numerical guard: fall back to the last topic
                }
                z[d][i] = static_cast<int>(new_topic);
                ++counts.doc_topic[d][new_topic];
                ++counts.topic_word[new_topic][static_cast<std::size_t>(word)];
                ++counts.topic_total[new_topic];
            }
        }
        if (observer) observer(sweep, counts);
    }

    TopicModel model;
    model.k = k;
    model.alpha = alpha;
    model.beta = beta;
    model.sweeps = sweeps;
    model.seed = seed;
    model.vocabulary = bow.vocabulary;
    model.doc_ids = bow.doc_ids;
    model.assignments = std::move(z);
    model.phi.assign(k_count, std::vector<double>(v_count, 0.0));
    for (std::size_t t = 0; t < k_count; ++t) {
        double denom = counts.topic_total[t] + v_beta;
        for (std::size_t w = 0; w < v_count; ++w)
            model.phi[t][w] = (counts.topic_word[t][w] + beta) / denom;
    }
    model.theta.assign(d_count, std::vector<double>(k_count, 0.0));
    const double k_alpha = static_cast<double>(k_count) * alpha;
    for (std::size_t d = 0; d < d_count; ++d) {
        double denom = counts.doc_total[d] + k_alpha;
        for (std::size_t t = 0; t < k_count; ++t)
            model.theta[d][t] = (counts.doc_topic[d][t] + alpha) / denom;
    }
    return model;
}

std::vector<std::string> top_words(const TopicModel& model, int topic, std::size_t n) {
    if (topic < 0 || topic >= model.k)
        throw Error("top_words: topic index out of range: " + std::to_string(topic));
    const auto& row = model.phi[static_cast<std::size_t>(topic)];
    std::vector<std::size_t> order(row.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (row[a] != row[b]) return row[a] > row[b];
        return model.vocabulary[a] < model.vocabulary[b];
    });
    std::vector<std::string> words;
    for (std::size_t i = 0; i < order.size() && i < n; ++i)
        words.push_back(model.vocabulary[order[i]]);
    return words;
}

int dominant_topic(const TopicModel& model, std::size_t doc) {
    if (doc >= model.theta.size())
        throw Error("dominant_topic: document index out of range: " + std::to_string(doc));
    const auto& row = model.theta[doc];
    std::size_t best = 0;
    for (std::size_t t = 1; t < row.size(); ++t)
        if (row[t] > row[best]) best = t;
    return static_cast<int>(best);
}

void save_topic_model(const std::filesystem::path& path, const TopicModel& model) {
    ordered_json j;
    j["format"] = "sti-mapper-topic-model/1";
    j["k"] = model.k;
    j["alpha"] = double_to_string(model.alpha);
    j["beta"] = double_to_string(model.beta);
    j["sweeps"] = model.sweeps;
    j["seed"] = model.seed;
    j["vocabulary"] = model.vocabulary;
    j["doc_ids"] = model.doc_ids;
    j["phi"] = matrix_to_strings(model.phi);
    j["theta"] = matrix_to_strings(model.theta);
    j["assignments"] = model.assignments;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write topic model file: " + path.string());
    out << j.dump() << '\n';
}

TopicModel load_topic_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open topic model file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("topic model file is not valid JSON: " + std::string(e.what()));
    }
    TopicModel model;
    model.k = j.at("k").get<int>();
    model.alpha = double_from_string(j.at("alpha").get<std::string>());
    model.beta = double_from_string(j.at("beta").get<std::string>());
    model.sweeps = j.at("sweeps").get<int>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    model.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
    model.phi = matrix_from_strings(j.at("phi"));
    model.theta = matrix_from_strings(j.at("theta"));
    model.assignments = j.at("assignments").get<std::vector<std::vector<int>>>();
    return model;
}

}  // namespace stimap::topics
